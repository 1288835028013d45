#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gft/tensor.hpp"

namespace gft {

/// Ordered channel layout: surface variables first, then each upper-air
/// variable on every pressure level (variable-major).
class VariableLayout {
 public:
  /// 4 surface variables, 5 upper-air variables on the 13 standard levels (C = 69).
  VariableLayout();
  VariableLayout(std::vector<std::string> surface, std::vector<std::string> upper, std::vector<double> levels_hpa);

  static VariableLayout with_levels(std::vector<double> levels_hpa);

  const std::vector<std::string>& surface_vars() const noexcept { return surface_; }
  const std::vector<std::string>& upper_vars() const noexcept { return upper_; }
  const std::vector<double>& pressure_levels() const noexcept { return levels_hpa_; }
  std::size_t level_count() const noexcept { return levels_hpa_.size(); }
  std::size_t channel_count() const noexcept { return surface_.size() + upper_.size() * levels_hpa_.size(); }

  bool is_surface(const std::string& var) const;
  bool is_upper(const std::string& var) const;

  std::size_t surface_channel(const std::string& var) const;
  std::size_t channel(const std::string& var, std::size_t level_index) const;
  /// First channel of an upper-air variable; its levels are contiguous.
  std::size_t first_channel(const std::string& var) const;
  std::size_t level_index(double level_hpa) const;

  /// Inverse of the channel map: variable name and level index (none for surface).
  std::pair<std::string, std::optional<std::size_t>> describe(std::size_t channel) const;

  friend bool operator==(const VariableLayout&, const VariableLayout&) = default;

 private:
  void validate() const;

  std::vector<std::string> surface_;
  std::vector<std::string> upper_;
  std::vector<double> levels_hpa_;
};

/// C x H x W physical state.
struct WeatherState {
  VariableLayout layout;
  Tensor values;
  std::optional<double> lead_seconds;

  WeatherState() = default;
  WeatherState(VariableLayout layout, Tensor values, std::optional<double> lead = std::nullopt);
  static WeatherState zeros(const VariableLayout& layout, std::size_t rows, std::size_t cols);

  std::size_t channels() const { return values.dim(0); }
  std::size_t rows() const { return values.dim(1); }
  std::size_t cols() const { return values.dim(2); }

  std::span<double> channel(std::size_t c);
  std::span<const double> channel(std::size_t c) const;
};

/// Per-row and per-level grid metrics. Pressures are kept in hPa for
/// metadata; every spacing is SI (meters, Pa).
struct GridGeometry {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> latitudes;      // radians, cell-centered, north to south
  std::vector<double> pixel_x;        // meters per column step, one per row
  double pixel_y = 0.0;               // meters per row step
  std::vector<double> pressure_hpa;   // increasing
  std::vector<double> pixel_p;        // Pa between adjacent levels (P-1)
  std::vector<double> level_spacing;  // Pa per level (P): centered inside, one-sided at the ends
  bool unit_spacing = false;

  std::size_t levels() const noexcept { return pressure_hpa.size(); }
  double min_pixel() const;

  /// All spacings 1; reproduces the reference-code micro examples.
  static GridGeometry unit(std::size_t rows, std::size_t cols, std::vector<double> levels_hpa);
  /// Constant metric spacing in meters, latitudes still cell-centered.
  static GridGeometry uniform(std::size_t rows, std::size_t cols, std::vector<double> levels_hpa, double dx_m,
                              double dy_m);
};

/// Spherical cell-centered geometry. Requires rows, cols >= 8 and at least 3
/// strictly increasing levels.
GridGeometry build_geometry(std::size_t rows, std::size_t cols, const std::vector<double>& levels_hpa);

struct PhysicalConstants {
  double f = 7.29e-5;           // 1/s
  double latent_heat = 2.5e6;   // J/kg
  double cp = 1005.0;           // J/(kg K)
  double r = 8.314;             // as printed for the geopotential and humidity equations
  double r_vapor = 461.5;       // J/(kg K)
  double r_dry = 287.0;         // J/(kg K)
  double earth_radius = 6.371e6;
  double t_ref = 273.15;        // energy diagnostic reference temperature

  void validate() const;
};

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t channels() const noexcept { return mean.size(); }
  void validate() const;

  /// Per-channel mean/std over a sample set; stds below `floor` are replaced by 1.
  static NormStats compute(const std::vector<WeatherState>& samples, double floor = 1e-9);
  static NormStats identity(std::size_t channels);
};

/// P x H x W copy of an upper-air variable, levels by increasing pressure.
Tensor reshape_to_levels(const WeatherState& state, const std::string& var);
/// Inverse of reshape_to_levels.
void assign_levels(WeatherState& state, const std::string& var, const Tensor& levels);

WeatherState standardize(const WeatherState& state, const NormStats& stats);
WeatherState destandardize(const WeatherState& state, const NormStats& stats);

/// Clamp specific humidity to >= 0; used when exporting states only.
WeatherState clamp_humidity(WeatherState state);

}  // namespace gft
