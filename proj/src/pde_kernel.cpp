#include "gft/pde_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gft {

void TimeConfig::validate() const {
  if (!(t_data > 0.0)) throw ValidationError("t_data must be positive");
  if (m < 1) throw ValidationError("substeps per dataset interval must be a positive integer");
}

std::string StabilityReport::summary() const {
  std::ostringstream os;
  os << (stable ? "stable" : "UNSTABLE") << " cfl=" << cfl_estimate << " (bound " << cfl_bound << ")"
     << " nan_count=" << nan_count;
  if (warning) os << " [warning: cfl near bound]";
  for (const auto& [name, value] : max_abs) os << " max|" << name << "|=" << value;
  return os.str();
}

namespace {

std::optional<GridLocation> first_non_finite(const Tensor& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) return detail::locate(t.shape(), i);
  }
  return std::nullopt;
}

void check_finite(const Tensor& t, const char* what, std::size_t step) {
  if (auto loc = first_non_finite(t)) throw StabilityError(std::string("non-finite ") + what, step, loc);
}

WeatherState step_at(const WeatherState& state, const PhysicsContext& ctx, double t_s, const KernelOptions& options,
                     std::size_t step) {
  if (!(t_s > 0.0)) throw ValidationError("t_s must be positive");
  check_finite(state.values, "input state", step);
  if (options.zero_tendencies) return state;
  PlainBackend be(ctx);
  const auto fields = upper_fields(state);
  Tendencies<Tensor> tend;
  try {
    tend = compute_tendencies(be, fields, ctx);
  } catch (const DomainError& e) {
    throw StabilityError("physics left its domain: " + e.reason() + (e.field().empty() ? "" : " at " + e.field()), step,
                         e.location());
  }
  check_finite(tend.w, "vertical velocity", step);
  check_finite(tend.du_dt, "du/dt", step);
  check_finite(tend.dv_dt, "dv/dt", step);
  check_finite(tend.dz_dt, "dz/dt", step);
  check_finite(tend.dq_dt, "dq/dt", step);
  check_finite(tend.dt_dt, "dT/dt", step);
  UpperFields<Tensor> next{be.add(fields.u, be.scale(tend.du_dt, t_s)), be.add(fields.v, be.scale(tend.dv_dt, t_s)),
                           be.add(fields.z, be.scale(tend.dz_dt, t_s)), be.add(fields.q, be.scale(tend.dq_dt, t_s)),
                           be.add(fields.t, be.scale(tend.dt_dt, t_s))};
  WeatherState out = state;
  store_upper_fields(out, next);
  check_finite(out.values, "updated state", step);
  return out;
}

}  // namespace

WeatherState euler_step(const WeatherState& state, const PhysicsContext& ctx, double t_s, const KernelOptions& options) {
  return step_at(state, ctx, t_s, options, 0);
}

EvolveResult evolve(const WeatherState& state, std::size_t n_steps, const PhysicsContext& ctx, double t_s,
                    const KernelOptions& options) {
  WeatherState current = state;
  for (std::size_t i = 0; i < n_steps; ++i) current = step_at(current, ctx, t_s, options, i);
  if (current.lead_seconds || n_steps > 0) {
    current.lead_seconds = state.lead_seconds.value_or(0.0) + static_cast<double>(n_steps) * t_s;
  }
  auto report = stability_check(current, ctx.geometry(), t_s, options.cfl_bound);
  return {std::move(current), std::move(report)};
}

StabilityReport stability_check(const WeatherState& state, const GridGeometry& geom, double t_s, double cfl_bound) {
  StabilityReport r;
  r.cfl_bound = cfl_bound;
  for (double v : state.values.values()) {
    if (std::isnan(v)) ++r.nan_count;
  }
  double max_wind = 0.0;
  for (const auto& var : state.layout.upper_vars()) {
    const std::size_t first = state.layout.first_channel(var);
    double m = 0.0;
    for (std::size_t k = 0; k < state.layout.level_count(); ++k) {
      for (double v : state.channel(first + k)) {
        if (!std::isnan(v)) m = std::max(m, std::abs(v));
      }
    }
    r.max_abs.emplace_back(var, m);
    if (var == "u" || var == "v") max_wind = std::max(max_wind, m);
  }
  r.cfl_estimate = max_wind * t_s / geom.min_pixel();
  r.stable = r.nan_count == 0 && r.cfl_estimate < cfl_bound;
  r.warning = r.cfl_estimate >= 0.8 * cfl_bound && r.cfl_estimate < cfl_bound;
  return r;
}

}  // namespace gft
