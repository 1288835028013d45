#include "gft/grid_state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gft/error.hpp"

namespace gft {

VariableLayout::VariableLayout()
    : VariableLayout({"u10", "v10", "t2m", "tp"}, {"z", "q", "u", "v", "T"},
                     {50, 100, 150, 200, 250, 300, 400, 500, 600, 700, 850, 925, 1000}) {}

VariableLayout::VariableLayout(std::vector<std::string> surface, std::vector<std::string> upper,
                               std::vector<double> levels_hpa)
    : surface_(std::move(surface)), upper_(std::move(upper)), levels_hpa_(std::move(levels_hpa)) {
  validate();
}

VariableLayout VariableLayout::with_levels(std::vector<double> levels_hpa) {
  VariableLayout base;
  return VariableLayout(base.surface_, base.upper_, std::move(levels_hpa));
}

void VariableLayout::validate() const {
  if (levels_hpa_.empty()) throw ValidationError("layout needs at least one pressure level");
  for (std::size_t i = 0; i < levels_hpa_.size(); ++i) {
    if (!(levels_hpa_[i] > 0.0)) throw ValidationError("pressure levels must be positive");
    if (i > 0 && !(levels_hpa_[i] > levels_hpa_[i - 1])) {
      throw ValidationError("pressure levels must be strictly increasing");
    }
  }
  std::vector<std::string> names = surface_;
  names.insert(names.end(), upper_.begin(), upper_.end());
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
    throw ValidationError("duplicate variable name in layout");
  }
}

bool VariableLayout::is_surface(const std::string& var) const {
  return std::find(surface_.begin(), surface_.end(), var) != surface_.end();
}

bool VariableLayout::is_upper(const std::string& var) const {
  return std::find(upper_.begin(), upper_.end(), var) != upper_.end();
}

std::size_t VariableLayout::surface_channel(const std::string& var) const {
  auto it = std::find(surface_.begin(), surface_.end(), var);
  if (it == surface_.end()) throw ValidationError("unknown surface variable '" + var + "'");
  return static_cast<std::size_t>(it - surface_.begin());
}

std::size_t VariableLayout::first_channel(const std::string& var) const {
  auto it = std::find(upper_.begin(), upper_.end(), var);
  if (it == upper_.end()) {
    if (is_surface(var)) throw ValidationError("variable '" + var + "' has no level axis");
    throw ValidationError("unknown upper-air variable '" + var + "'");
  }
  return surface_.size() + static_cast<std::size_t>(it - upper_.begin()) * levels_hpa_.size();
}

std::size_t VariableLayout::channel(const std::string& var, std::size_t level_index) const {
  if (level_index >= levels_hpa_.size()) throw ValidationError("level index out of range");
  return first_channel(var) + level_index;
}

std::size_t VariableLayout::level_index(double level_hpa) const {
  for (std::size_t i = 0; i < levels_hpa_.size(); ++i) {
    if (levels_hpa_[i] == level_hpa) return i;
  }
  throw ValidationError("pressure level " + std::to_string(level_hpa) + " hPa not in layout");
}

std::pair<std::string, std::optional<std::size_t>> VariableLayout::describe(std::size_t channel) const {
  if (channel < surface_.size()) return {surface_[channel], std::nullopt};
  const std::size_t rel = channel - surface_.size();
  const std::size_t var = rel / levels_hpa_.size();
  if (var >= upper_.size()) throw ValidationError("channel " + std::to_string(channel) + " out of range");
  return {upper_[var], rel % levels_hpa_.size()};
}

WeatherState::WeatherState(VariableLayout layout_in, Tensor values_in, std::optional<double> lead)
    : layout(std::move(layout_in)), values(std::move(values_in)), lead_seconds(lead) {
  if (values.rank() != 3 || values.dim(0) != layout.channel_count()) {
    throw ValidationError("state shape " + shape_to_string(values.shape()) + " does not match layout with " +
                          std::to_string(layout.channel_count()) + " channels");
  }
}

WeatherState WeatherState::zeros(const VariableLayout& layout, std::size_t rows, std::size_t cols) {
  return WeatherState(layout, Tensor({layout.channel_count(), rows, cols}));
}

std::span<double> WeatherState::channel(std::size_t c) {
  const std::size_t n = rows() * cols();
  return {values.data() + c * n, n};
}

std::span<const double> WeatherState::channel(std::size_t c) const {
  const std::size_t n = rows() * cols();
  return {values.data() + c * n, n};
}

namespace {

void fill_pressure_metrics(GridGeometry& g, std::vector<double> levels_hpa) {
  if (levels_hpa.size() < 3) throw ValidationError("at least 3 pressure levels are needed for the stencils");
  for (std::size_t i = 1; i < levels_hpa.size(); ++i) {
    if (!(levels_hpa[i] > levels_hpa[i - 1])) throw ValidationError("pressure levels must be strictly increasing");
  }
  g.pressure_hpa = std::move(levels_hpa);
  const std::size_t p = g.pressure_hpa.size();
  g.pixel_p.resize(p - 1);
  for (std::size_t k = 0; k + 1 < p; ++k) g.pixel_p[k] = (g.pressure_hpa[k + 1] - g.pressure_hpa[k]) * 100.0;
  g.level_spacing.resize(p);
  g.level_spacing[0] = g.pixel_p[0];
  g.level_spacing[p - 1] = g.pixel_p[p - 2];
  for (std::size_t k = 1; k + 1 < p; ++k) g.level_spacing[k] = 0.5 * (g.pixel_p[k - 1] + g.pixel_p[k]);
}

void fill_latitudes(GridGeometry& g) {
  g.latitudes.resize(g.rows);
  const double dlat = std::numbers::pi / static_cast<double>(g.rows);
  for (std::size_t i = 0; i < g.rows; ++i) {
    g.latitudes[i] = std::numbers::pi / 2.0 - (static_cast<double>(i) + 0.5) * dlat;
  }
}

}  // namespace

double GridGeometry::min_pixel() const {
  double m = pixel_y;
  for (double px : pixel_x) m = std::min(m, px);
  return m;
}

GridGeometry GridGeometry::unit(std::size_t rows, std::size_t cols, std::vector<double> levels_hpa) {
  GridGeometry g;
  g.rows = rows;
  g.cols = cols;
  fill_latitudes(g);
  g.pixel_x.assign(rows, 1.0);
  g.pixel_y = 1.0;
  g.pressure_hpa = std::move(levels_hpa);
  g.pixel_p.assign(g.pressure_hpa.empty() ? 0 : g.pressure_hpa.size() - 1, 1.0);
  g.level_spacing.assign(g.pressure_hpa.size(), 1.0);
  g.unit_spacing = true;
  return g;
}

GridGeometry GridGeometry::uniform(std::size_t rows, std::size_t cols, std::vector<double> levels_hpa, double dx_m,
                                   double dy_m) {
  if (!(dx_m > 0.0) || !(dy_m > 0.0)) throw ValidationError("grid spacing must be positive");
  GridGeometry g;
  g.rows = rows;
  g.cols = cols;
  fill_latitudes(g);
  g.pixel_x.assign(rows, dx_m);
  g.pixel_y = dy_m;
  fill_pressure_metrics(g, std::move(levels_hpa));
  return g;
}

GridGeometry build_geometry(std::size_t rows, std::size_t cols, const std::vector<double>& levels_hpa) {
  if (rows < 8 || cols < 8) throw ValidationError("grid must be at least 8x8");
  const PhysicalConstants consts;
  GridGeometry g;
  g.rows = rows;
  g.cols = cols;
  fill_latitudes(g);
  g.pixel_y = std::numbers::pi * consts.earth_radius / static_cast<double>(rows);
  g.pixel_x.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    g.pixel_x[i] = 2.0 * std::numbers::pi * consts.earth_radius * std::cos(g.latitudes[i]) / static_cast<double>(cols);
  }
  fill_pressure_metrics(g, levels_hpa);
  return g;
}

void PhysicalConstants::validate() const {
  for (double v : {f, latent_heat, cp, r, r_vapor, r_dry, earth_radius, t_ref}) {
    if (!(v > 0.0)) throw ValidationError("physical constants must be positive");
  }
}

void NormStats::validate() const {
  if (mean.size() != std.size()) throw ValidationError("norm stats mean/std length mismatch");
  for (double s : std) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("norm stats contain a zero or non-finite std");
  }
}

NormStats NormStats::compute(const std::vector<WeatherState>& samples, double floor) {
  if (samples.empty()) throw ValidationError("cannot compute norm stats from an empty sample set");
  const std::size_t c = samples.front().channels();
  NormStats stats;
  stats.mean.assign(c, 0.0);
  stats.std.assign(c, 0.0);
  double count = 0.0;
  for (const auto& s : samples) {
    if (s.channels() != c) throw ValidationError("norm stats: inconsistent channel counts");
    count += static_cast<double>(s.rows() * s.cols());
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (double v : s.channel(ch)) stats.mean[ch] += v;
    }
  }
  for (auto& m : stats.mean) m /= count;
  for (const auto& s : samples) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (double v : s.channel(ch)) stats.std[ch] += (v - stats.mean[ch]) * (v - stats.mean[ch]);
    }
  }
  for (auto& sd : stats.std) {
    sd = std::sqrt(sd / count);
    if (!(sd > floor)) sd = 1.0;
  }
  return stats;
}

NormStats NormStats::identity(std::size_t channels) {
  return NormStats{std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0)};
}

Tensor reshape_to_levels(const WeatherState& state, const std::string& var) {
  if (state.layout.is_surface(var)) throw ValidationError("variable '" + var + "' has no level axis");
  const std::size_t first = state.layout.first_channel(var);
  const std::size_t p = state.layout.level_count();
  const std::size_t n = state.rows() * state.cols();
  Tensor out({p, state.rows(), state.cols()});
  std::copy(state.values.data() + first * n, state.values.data() + (first + p) * n, out.data());
  return out;
}

void assign_levels(WeatherState& state, const std::string& var, const Tensor& levels) {
  const std::size_t first = state.layout.first_channel(var);
  const Shape expected{state.layout.level_count(), state.rows(), state.cols()};
  if (levels.shape() != expected) {
    throw ValidationError("assign_levels: expected " + shape_to_string(expected) + ", got " +
                          shape_to_string(levels.shape()));
  }
  std::copy(levels.data(), levels.data() + levels.size(), state.values.data() + first * state.rows() * state.cols());
}

namespace {

WeatherState map_channels(const WeatherState& state, const NormStats& stats, bool forward) {
  stats.validate();
  if (stats.channels() != state.channels()) {
    throw ValidationError("norm stats have " + std::to_string(stats.channels()) + " channels, state has " +
                          std::to_string(state.channels()));
  }
  WeatherState out = state;
  for (std::size_t c = 0; c < state.channels(); ++c) {
    const double m = stats.mean[c], s = stats.std[c];
    for (double& v : out.channel(c)) v = forward ? (v - m) / s : v * s + m;
  }
  return out;
}

}  // namespace

WeatherState standardize(const WeatherState& state, const NormStats& stats) {
  return map_channels(state, stats, true);
}

WeatherState destandardize(const WeatherState& state, const NormStats& stats) {
  return map_channels(state, stats, false);
}

WeatherState clamp_humidity(WeatherState state) {
  if (!state.layout.is_upper("q")) return state;
  const std::size_t first = state.layout.first_channel("q");
  for (std::size_t k = 0; k < state.layout.level_count(); ++k) {
    for (double& v : state.channel(first + k)) v = std::max(v, 0.0);
  }
  return state;
}

}  // namespace gft
