#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gft/autodiff.hpp"
#include "gft/grid_state.hpp"
#include "gft/pde_kernel.hpp"
#include "gft/pde_tendencies.hpp"
#include "gft/tensor.hpp"

namespace gft {

enum class InitScheme {
  random,       // scaled Gaussian weights, small align_in so physics starts near the mean state
  passthrough,  // encoder, decoder and align maps select channels, MLP outputs start at zero;
                // needs D >= C * patch^2
};

struct ModelConfig {
  std::vector<std::string> surface_vars = {"u10", "v10", "t2m", "tp"};
  std::vector<std::string> upper_vars = {"z", "q", "u", "v", "T"};
  std::vector<double> levels_hpa = {50, 100, 150, 200, 250, 300, 400, 500, 600, 700, 850, 925, 1000};
  std::size_t rows = 128;
  std::size_t cols = 256;
  std::size_t blocks = 24;
  std::size_t latent_dim = 64;
  std::size_t patch = 4;
  std::size_t mlp_ratio = 4;
  std::size_t embedding_size = 16;
  std::vector<std::size_t> train_taps = {4, 12, 24};
  TimeConfig time;
  PhysicsOptions physics;
  InitScheme init = InitScheme::random;
  double align_init_scale = 1e-4;  // larger values let align_in inject divergence the temperature term amplifies
  double mlp_out_scale = 0.5;
  std::uint64_t seed = 0;

  VariableLayout layout() const;
  std::size_t channels() const { return surface_vars.size() + upper_vars.size() * levels_hpa.size(); }
  std::size_t token_rows() const { return rows / patch; }
  std::size_t token_cols() const { return cols / patch; }
  std::size_t tokens() const { return token_rows() * token_cols(); }
  std::size_t patch_features() const { return channels() * patch * patch; }
  std::size_t embedding_length() const { return 2 * embedding_size + 1; }
  /// Lead time of a tap: block index times t_block.
  double lead_seconds(std::size_t tap) const { return static_cast<double>(tap) * time.t_block(); }
  void validate() const;
};

/// Named learnable arrays in insertion order.
class ParamStore {
 public:
  void add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return arrays_.count(name) != 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  const std::vector<std::string>& names() const noexcept { return order_; }
  std::size_t count() const noexcept { return order_.size(); }
  std::size_t total_size() const;

  friend bool operator==(const ParamStore& a, const ParamStore& b) { return a.order_ == b.order_ && a.arrays_ == b.arrays_; }

 private:
  std::vector<std::string> order_;
  std::map<std::string, Tensor> arrays_;
};

/// One gradient array per learnable array, same names and shapes.
using GradientSet = ParamStore;

struct ModelParams {
  ModelConfig config;
  ParamStore arrays;
  NormStats stats;
};

namespace names {
std::string block(std::size_t j, const std::string& leaf);  // j is 1-based
inline constexpr const char* encoder_weight = "encoder.weight";
inline constexpr const char* encoder_bias = "encoder.bias";
inline constexpr const char* encoder_pos = "encoder.pos";
inline constexpr const char* decoder_weight = "decoder.weight";
inline constexpr const char* decoder_bias = "decoder.bias";
inline constexpr const char* lead_w = "lead.w";
}  // namespace names

ModelParams init_params(const ModelConfig& config, NormStats stats);

/// Parameters plus the token-resolution physics context they run on.
class HybridModel {
 public:
  explicit HybridModel(ModelParams params);

  const ModelParams& params() const noexcept { return params_; }
  ParamStore& arrays() noexcept { return params_.arrays; }
  const ModelConfig& config() const noexcept { return params_.config; }
  const PhysicsContext& token_physics() const noexcept { return *physics_; }

 private:
  ModelParams params_;
  std::shared_ptr<const PhysicsContext> physics_;
};

// ---------------------------------------------------------------------------
// Taped forward pass.

struct BoundParams {
  std::map<std::string, ad::Var> vars;
  ad::Var operator()(const std::string& name) const;
};

BoundParams bind_params(ad::Tape& tape, const ParamStore& arrays, bool requires_grad);

struct ForwardOptions {
  bool zero_tendencies = false;  // test hook: the physics branch skips its Euler updates
};

/// What a decoded tap consumed.
struct TapRecord {
  std::size_t block = 0;
  double lead_seconds = 0.0;
  std::vector<double> t_emb;
  std::uint64_t latent_hash = 0;
};

struct TapedForward {
  std::vector<std::size_t> taps;
  std::vector<ad::Var> outputs;  // standardized C x H x W per tap
  std::vector<ad::Var> latents;  // D x T per tap
  std::vector<std::array<double, 2>> router;  // (r_phys, r_ai) per executed block
  std::vector<TapRecord> trace;
};

ad::Var encode(ad::Tape& tape, const BoundParams& p, const ModelConfig& cfg, const Tensor& standardized);
ad::Var embed_lead_time(ad::Tape& tape, ad::Var w, double hours);
ad::Var decode(ad::Tape& tape, const BoundParams& p, const ModelConfig& cfg, ad::Var latent, ad::Var t_emb);

struct RouterOutput {
  ad::Var linear;  // r_phys x_p + r_ai x_n
  ad::Var fused;   // linear + MLP(linear)
};
RouterOutput route_fuse(ad::Tape& tape, const BoundParams& p, std::size_t block, ad::Var x_n, ad::Var x_p);

ad::Var physics_branch(ad::Tape& tape, const BoundParams& p, const HybridModel& model, std::size_t block,
                       ad::Var latent, const ForwardOptions& options);
ad::Var correction_branch(ad::Tape& tape, const BoundParams& p, std::size_t block, ad::Var latent);
ad::Var hybrid_block_forward(ad::Tape& tape, const BoundParams& p, const HybridModel& model, std::size_t block,
                             ad::Var latent, const ForwardOptions& options = {});

/// Validated, sorted, de-duplicated taps within 1..L.
std::vector<std::size_t> normalize_taps(const ModelConfig& cfg, std::vector<std::size_t> taps);

TapedForward forward_taped(ad::Tape& tape, const BoundParams& p, const HybridModel& model, const WeatherState& input,
                           const std::vector<std::size_t>& taps, const ForwardOptions& options = {});

// ---------------------------------------------------------------------------
// Plain entry points.

/// sin(pi t W) ++ cos(pi t W) ++ t with t in hours.
std::vector<double> embed_lead_time(double lead_seconds, std::span<const double> w);

Tensor encode_state(const HybridModel& model, const WeatherState& state);
WeatherState decode_latent(const HybridModel& model, const Tensor& latent, std::span<const double> t_emb);

struct RouterOutputValues {
  Tensor linear;
  Tensor fused;
};
RouterOutputValues route_fuse_values(const HybridModel& model, std::size_t block, const Tensor& x_n, const Tensor& x_p);
Tensor block_forward_values(const HybridModel& model, std::size_t block, const Tensor& latent,
                            const ForwardOptions& options = {});

struct Forecast {
  std::size_t block = 0;
  double lead_seconds = 0.0;
  std::vector<double> t_emb;
  WeatherState state;
};

struct ForecastBundle {
  std::vector<Forecast> forecasts;
  std::vector<std::array<double, 2>> router;
  std::vector<TapRecord> trace;

  const Forecast& at_block(std::size_t block) const;
};

ForecastBundle model_forward(const HybridModel& model, const WeatherState& input, const std::vector<std::size_t>& taps,
                             const ForwardOptions& options = {});

/// Latent after running blocks 1..n on the encoded input.
Tensor latent_after(const HybridModel& model, const WeatherState& input, std::size_t n,
                    const ForwardOptions& options = {});

std::uint64_t tensor_hash(const Tensor& t);

}  // namespace gft
