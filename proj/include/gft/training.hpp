#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gft/hybrid_net.hpp"

namespace gft {

enum class SyntheticKind { advection, rotation, blended };

std::string to_string(SyntheticKind kind);
SyntheticKind parse_synthetic_kind(const std::string& name);

/// Zonal wind profile of the advection generator.
enum class WindProfile {
  balanced,    // shear with near-zero mean, u = -(d phi/dy)/f under the engine's stencil; per-row drift
  solid_body,  // uniform angular drift: whole-cell shifts and exact circular-shift targets
};

struct SyntheticConfig {
  SyntheticKind kind = SyntheticKind::advection;
  std::size_t rows = 16;
  std::size_t cols = 32;
  std::vector<double> levels_hpa = {500, 850, 1000};
  std::size_t samples = 8;
  std::uint64_t seed = 1;
  std::vector<double> leads_seconds = {1800, 3600, 7200};
  double cells_per_hour = 2.0;  // equatorial drift of the advection wind
  std::size_t wavenumbers = 3;
  double t_wave_amplitude = 0.0;   // K; zonal T waves feed back through the geopotential
  double q_relative_amplitude = 0.15;
  WindProfile wind = WindProfile::balanced;
  double reference_substeps = 8;   // blended: reference step is t_s / substeps
  double reference_t_s = 300.0;

  void validate() const;
};

struct Sample {
  WeatherState input;
  std::vector<WeatherState> targets;  // one per lead
};

struct SyntheticDataset {
  std::string generator;
  std::uint64_t seed = 0;
  std::vector<double> leads_seconds;
  std::vector<Sample> samples;

  std::vector<WeatherState> inputs() const;
};

/// Surface channels diagnosed from the lowest level: t2m = T + 1.5 K,
/// (u10, v10) = 0.7 (u, v), tp = 250 q (mm/h).
void diagnose_surface(WeatherState& state);

SyntheticDataset gen_synthetic(const SyntheticConfig& config);

struct TrainConfig {
  double lr0 = 5e-4;
  std::string schedule = "cosine";
  std::size_t steps = 300;
  std::size_t batch_size = 1;
  double momentum = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> taps = {4, 12, 24};
  std::vector<double> tap_weights;  // empty means uniform
  std::map<std::string, double> lr_scale;  // per array name or parameter group (see param_group)
  ModelConfig model;
  SyntheticConfig data;
  std::size_t holdout_samples = 4;

  void validate() const;
  std::vector<double> weights() const;
};

/// The 16x32, 3-level, 8-block advection setup with taps {2, 4, 8}: passthrough
/// init, momentum 0.9, the decoder on a 10x step and the maps that feed the
/// physics branch (encoder, align, correction, router MLP) held fixed.
TrainConfig toy_advection_config();

/// Coarse group of a parameter name: encoder, align, correction, router_r,
/// router_mlp, decoder, lead.
std::string param_group(const std::string& name);

double cosine_lr(std::size_t step, std::size_t total, double lr0);

/// Weighted mean over taps of the standardized mean squared error.
double multi_lead_loss(const ForecastBundle& bundle, const std::vector<WeatherState>& targets,
                       const std::vector<double>& weights, const NormStats& stats);
ad::Var multi_lead_loss(ad::Tape& tape, const TapedForward& forward, const std::vector<Tensor>& standardized_targets,
                        const std::vector<double>& weights, std::vector<ad::Var>* per_tap = nullptr);

/// Runs the reverse sweep from `loss` and collects one gradient per bound array.
GradientSet backward(ad::Tape& tape, const BoundParams& bound, const ParamStore& arrays, ad::Var loss);

struct LossEvaluation {
  double loss = 0.0;
  std::vector<double> tap_losses;
  std::vector<std::array<double, 2>> router;
  std::uint64_t signature = 0;
  std::optional<GradientSet> grads;
};

LossEvaluation evaluate_sample(const HybridModel& model, const Sample& sample, const std::vector<std::size_t>& taps,
                               const std::vector<double>& weights, bool with_gradient);

/// Mean over samples in index order, independent of thread count.
LossEvaluation evaluate_batch(const HybridModel& model, const std::vector<const Sample*>& batch,
                              const std::vector<std::size_t>& taps, const std::vector<double>& weights,
                              bool with_gradient);

struct Evaluation {
  double value = 0.0;
  std::uint64_t signature = 0;  // branch signature; coordinates that change it are skipped
};
using Objective = std::function<Evaluation(const ParamStore&)>;

struct FdCoordinate {
  std::string name;
  std::size_t index = 0;
  double value = 0.0;
  bool skipped = false;
};

/// Central differences (f(p + eps e) - f(p - eps e)) / (2 eps) on the given coordinates.
std::vector<FdCoordinate> finite_diff_grad(const Objective& fn, const ParamStore& params, double eps,
                                           const std::vector<std::pair<std::string, std::size_t>>& coords);
/// Every coordinate of every array.
GradientSet finite_diff_grad(const std::function<double(const ParamStore&)>& fn, const ParamStore& params, double eps);

/// Up to `per_array` distinct random coordinates from each array accepted by `filter`.
std::vector<std::pair<std::string, std::size_t>> sample_coordinates(
    const ParamStore& params, std::size_t per_array, std::uint64_t seed,
    const std::function<bool(const std::string&)>& filter = {});

struct GroupAgreement {
  std::string group;
  std::size_t compared = 0;
  std::size_t skipped = 0;
  double relative_error = 0.0;  // ||g_ad - g_fd|| / ||g_fd|| over compared coordinates
};

std::vector<GroupAgreement> compare_gradients(const GradientSet& analytic, const std::vector<FdCoordinate>& numeric);

struct LogRow {
  std::size_t step = 0;
  double lr = 0.0;
  double loss_total = 0.0;
  std::vector<double> tap_losses;
  std::vector<std::array<double, 2>> router;
};

struct TrainingLog {
  std::vector<std::size_t> taps;
  std::size_t blocks = 0;
  std::vector<LogRow> rows;

  std::string csv() const;
  double initial_loss() const { return rows.front().loss_total; }
  double final_loss() const { return rows.back().loss_total; }
};

struct TrainResult {
  ModelParams params;
  TrainingLog log;
};

/// Gradient descent with cosine schedule. The last log row holds the loss of
/// the trained parameters (step == total, lr == 0).
TrainResult train_toy(const TrainConfig& config, const SyntheticDataset& dataset,
                      std::optional<ModelParams> initial = std::nullopt);

/// Physics-only reference: `steps` Euler kernels of t_s on the full grid.
WeatherState pure_physics_forecast(const WeatherState& state, std::size_t steps, double t_s,
                                   PhysicsOptions options = {});

/// Threads available to batch evaluation: GFT_THREADS if set, else all cores.
std::size_t thread_limit();

}  // namespace gft
