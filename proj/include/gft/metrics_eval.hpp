#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gft/grid_state.hpp"
#include "gft/tensor.hpp"

namespace gft {

enum class RmseWeighting { none, cos_lat };

RmseWeighting parse_rmse_weighting(const std::string& name);
std::string to_string(RmseWeighting w);

/// Root mean square of (pred - gt) over a rows x cols field or a
/// levels x rows x cols block. cos-lat weights rows by cos(latitude)
/// normalized to mean 1; `latitudes` must then hold one value per row.
double rmse(const Tensor& pred, const Tensor& gt, RmseWeighting weighting = RmseWeighting::none,
            std::span<const double> latitudes = {});

/// Per-variable RMSE: surface variables by name, upper-air variables over all levels.
std::map<std::string, double> rmse(const WeatherState& pred, const WeatherState& gt,
                                   RmseWeighting weighting = RmseWeighting::none);

/// Mean of (pred - gt).
double bias(const Tensor& pred, const Tensor& gt);
std::map<std::string, double> bias(const WeatherState& pred, const WeatherState& gt);

struct ContingencyCounts {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t false_alarms = 0;
  std::size_t correct_negatives = 0;

  /// hits / (hits + misses + false alarms); 1 when there is no event in either field.
  double csi() const;
};

/// Events are values >= th.
ContingencyCounts contingency(std::span<const double> pred, std::span<const double> gt, double th);
double csi(std::span<const double> pred, std::span<const double> gt, double th);
/// CSI on the total precipitation channel.
double csi(const WeatherState& pred, const WeatherState& gt, double th);

inline const std::vector<double> kDefaultCsiThresholds = {0.5, 1.5};

/// Level and grid mean of 0.5 (u^2 + v^2) + cp / (2 T_r) T^2.
double energy(const WeatherState& state, const PhysicalConstants& consts = {});

/// RMSE over every channel after standardization with `stats`.
double standardized_rmse(const WeatherState& pred, const WeatherState& gt, const NormStats& stats);

struct MetricReport {
  std::string sample;
  std::optional<double> lead_seconds;
  RmseWeighting weighting = RmseWeighting::none;
  std::vector<std::string> variables;  // column order: surface then upper-air, as in the layout
  std::map<std::string, double> rmse;
  std::map<std::string, double> bias;
  std::vector<std::pair<double, double>> csi;  // (threshold, value)
  double energy_pred = 0.0;
  double energy_gt = 0.0;
};

MetricReport evaluate_forecast(const WeatherState& pred, const WeatherState& gt, const std::string& sample = "0",
                               RmseWeighting weighting = RmseWeighting::none,
                               const std::vector<double>& thresholds = kDefaultCsiThresholds,
                               const PhysicalConstants& consts = {});

/// One header line, then one row per report. All reports must share variables and thresholds.
std::string metrics_csv(const std::vector<MetricReport>& reports);

}  // namespace gft
