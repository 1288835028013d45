#include "gft/pde_tendencies.hpp"

#include <cmath>

namespace gft {

PhysicsContext::PhysicsContext(GridGeometry geom, PhysicalConstants consts, PhysicsOptions options)
    : geom_(std::move(geom)), consts_(consts), options_(options) {
  consts_.validate();
  if (geom_.levels() < 3) throw ValidationError("physics needs at least 3 pressure levels");
  const Shape shape = field_shape();
  p_hpa_ = Tensor(shape);
  p_pa_ = Tensor(shape);
  r_over_p_ = Tensor(shape);
  rd_over_p_ = Tensor(shape);
  const std::size_t plane = geom_.rows * geom_.cols;
  for (std::size_t k = 0; k < geom_.levels(); ++k) {
    const double hpa = geom_.pressure_hpa[k];
    const double pa = hpa * 100.0;
    for (std::size_t i = 0; i < plane; ++i) {
      p_hpa_[k * plane + i] = hpa;
      p_pa_[k * plane + i] = pa;
      r_over_p_[k * plane + i] = consts_.r / pa;
      rd_over_p_[k * plane + i] = consts_.r_dry / pa;
    }
  }
}

SaturationPoint saturation_point(double t_kelvin, double p_hpa, const PhysicalConstants& c) {
  SaturationPoint s{};
  s.t_prime = t_kelvin - 273.15;
  s.e_s = 6.112 * std::exp(17.67 * s.t_prime / (s.t_prime + 243.5));
  const double den = p_hpa - 0.378 * s.e_s;
  if (!(den > 0.0)) throw DomainError("saturation humidity undefined: p <= 0.378 e_s", GridLocation{}, "q_s");
  s.q_s = 0.622 * s.e_s / den;
  s.f = s.q_s * t_kelvin * (c.latent_heat * c.r - c.cp * c.r_vapor * t_kelvin) /
        (c.cp * c.r_vapor * t_kelvin * t_kelvin + c.latent_heat * c.latent_heat * s.q_s);
  return s;
}

namespace detail {

GridLocation locate(const Shape& shape, std::size_t flat) {
  if (shape.size() != 3) return GridLocation{0, 0, flat};
  const std::size_t plane = shape[1] * shape[2];
  return GridLocation{flat / plane, (flat % plane) / shape[2], flat % shape[2]};
}

}  // namespace detail

Tensor condensation_switch(const Tensor& dphi_total, const Tensor& q, const Tensor& q_s) {
  tensor::require_same_shape(dphi_total, q, "condensation_switch");
  tensor::require_same_shape(q, q_s, "condensation_switch");
  Tensor delta(q.shape(), 1.0);
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (dphi_total[i] < 0.0 && q[i] >= q_s[i]) delta[i] = 0.0;
  }
  return delta;
}

UpperFields<Tensor> upper_fields(const WeatherState& state) {
  return {reshape_to_levels(state, "u"), reshape_to_levels(state, "v"), reshape_to_levels(state, "z"),
          reshape_to_levels(state, "q"), reshape_to_levels(state, "T")};
}

void store_upper_fields(WeatherState& state, const UpperFields<Tensor>& f) {
  assign_levels(state, "u", f.u);
  assign_levels(state, "v", f.v);
  assign_levels(state, "z", f.z);
  assign_levels(state, "q", f.q);
  assign_levels(state, "T", f.t);
}

namespace {

void require_geometry(const WeatherState& state, const PhysicsContext& ctx) {
  const auto& g = ctx.geometry();
  if (state.rows() != g.rows || state.cols() != g.cols || state.layout.level_count() != g.levels()) {
    throw ValidationError("state grid does not match the physics geometry");
  }
  for (std::size_t k = 0; k < g.levels(); ++k) {
    if (state.layout.pressure_levels()[k] != g.pressure_hpa[k]) {
      throw ValidationError("state pressure levels do not match the physics geometry");
    }
  }
}

}  // namespace

Tensor vertical_velocity(const Tensor& u, const Tensor& v, const GridGeometry& geom, IntegralMode mode) {
  tensor::require_same_shape(u, v, "vertical_velocity");
  return tensor::neg(integrate_p(tensor::add(diff_x(u, geom), diff_y(v, geom)), geom, mode));
}

MoistureDiagnostics saturation_humidity(const Tensor& t, const Tensor& p_hpa, const PhysicalConstants& consts) {
  tensor::require_same_shape(t, p_hpa, "saturation_humidity");
  for (std::size_t i = 0; i < p_hpa.size(); ++i) {
    if (!(p_hpa[i] > 0.0)) throw ValidationError("saturation_humidity needs positive pressure");
  }
  struct Local {
    using Value = Tensor;
    Tensor add(const Tensor& a, const Tensor& b) { return tensor::add(a, b); }
    Tensor sub(const Tensor& a, const Tensor& b) { return tensor::sub(a, b); }
    Tensor mul(const Tensor& a, const Tensor& b) { return tensor::mul(a, b); }
    Tensor div(const Tensor& a, const Tensor& b) { return tensor::div(a, b); }
    Tensor scale(const Tensor& a, double s) { return tensor::scale(a, s); }
    Tensor add_scalar(const Tensor& a, double s) { return tensor::add_scalar(a, s); }
    Tensor add_const(const Tensor& a, const Tensor& c) { return tensor::add(a, c); }
    Tensor exp(const Tensor& a) { return tensor::exp(a); }
    const Tensor& value(const Tensor& a) const { return a; }
  } be;
  auto sat = saturation_chain(be, t, p_hpa, consts);
  return {sat.e_s, tensor::add_scalar(t, -273.15), sat.q_s, sat.f};
}

std::pair<Tensor, Tensor> tendency_momentum(const WeatherState& state, const Tensor& w, const PhysicsContext& ctx) {
  require_geometry(state, ctx);
  PlainBackend be(ctx);
  const auto s = upper_fields(state);
  tensor::require_same_shape(w, s.u, "tendency_momentum");
  return momentum_tendencies(be, s, detail::derivatives(be, s.u), detail::derivatives(be, s.v),
                             detail::derivatives(be, s.z), w, ctx);
}

Tensor tendency_temperature(const WeatherState& state, const Tensor& w, const PhysicsContext& ctx) {
  require_geometry(state, ctx);
  PlainBackend be(ctx);
  const auto s = upper_fields(state);
  tensor::require_same_shape(w, s.t, "tendency_temperature");
  return temperature_tendency(be, s, detail::derivatives(be, s.t), be.dp(s.z), w, ctx);
}

Tensor tendency_geopotential(const Tensor& dt_dt, const PhysicsContext& ctx) {
  PlainBackend be(ctx);
  tensor::require_same_shape(dt_dt, ctx.r_over_p(), "tendency_geopotential");
  return geopotential_tendency(be, dt_dt, ctx);
}

Tensor tendency_humidity(const WeatherState& state, const Tensor& w, const Tensor& dz_dt, const PhysicsContext& ctx) {
  require_geometry(state, ctx);
  PlainBackend be(ctx);
  const auto s = upper_fields(state);
  tensor::require_same_shape(w, s.q, "tendency_humidity");
  tensor::require_same_shape(dz_dt, s.q, "tendency_humidity");
  return humidity_tendency(be, s, detail::derivatives(be, s.q), detail::derivatives(be, s.z), w, dz_dt, ctx);
}

TendencySet s_pde(const WeatherState& state, const PhysicsContext& ctx) {
  require_geometry(state, ctx);
  PlainBackend be(ctx);
  return compute_tendencies(be, upper_fields(state), ctx);
}

}  // namespace gft
