#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "gft/autodiff.hpp"
#include "gft/error.hpp"
#include "gft/grid_state.hpp"
#include "gft/stencil_ops.hpp"
#include "gft/tensor.hpp"

namespace gft {

/// How the adiabatic term of the temperature tendency is formed.
enum class TemperatureForm {
  as_printed,     // (-L dphi/dp w - dphi/dp w) / c_p
  gas_law_alpha,  // (-L dphi/dp w + (R_d T / p) w) / c_p
};

struct PhysicsOptions {
  IntegralMode integral = IntegralMode::weighted;
  TemperatureForm temperature = TemperatureForm::as_printed;
};

/// Geometry, constants and the per-level pressure fields the tendency
/// equations need, built once per grid.
class PhysicsContext {
 public:
  PhysicsContext(GridGeometry geom, PhysicalConstants consts = {}, PhysicsOptions options = {});

  const GridGeometry& geometry() const noexcept { return geom_; }
  const PhysicalConstants& constants() const noexcept { return consts_; }
  const PhysicsOptions& options() const noexcept { return options_; }
  Shape field_shape() const { return {geom_.levels(), geom_.rows, geom_.cols}; }

  /// Level pressure broadcast to P x H x W, in hPa and in Pa.
  const Tensor& pressure_hpa() const noexcept { return p_hpa_; }
  const Tensor& pressure_pa() const noexcept { return p_pa_; }
  /// R / p with p in Pa.
  const Tensor& r_over_p() const noexcept { return r_over_p_; }
  /// R_d / p with p in Pa.
  const Tensor& rd_over_p() const noexcept { return rd_over_p_; }

 private:
  GridGeometry geom_;
  PhysicalConstants consts_;
  PhysicsOptions options_;
  Tensor p_hpa_, p_pa_, r_over_p_, rd_over_p_;
};

template <class V>
struct UpperFields {
  V u, v, z, q, t;
};

template <class V>
struct Tendencies {
  V du_dt, dv_dt, dz_dt, dq_dt, dt_dt;
  V w;
};

using TendencySet = Tendencies<Tensor>;

struct MoistureDiagnostics {
  Tensor e_s;      // hPa
  Tensor t_prime;  // deg C
  Tensor q_s;      // kg/kg
  Tensor f;        // condensation factor
};

/// Scalar saturation chain for one point (T in K, p in hPa).
struct SaturationPoint {
  double t_prime, e_s, q_s, f;
};
SaturationPoint saturation_point(double t_kelvin, double p_hpa, const PhysicalConstants& consts = {});

// ---------------------------------------------------------------------------
// Execution backends. The tendency equations are written once against this
// small interface and run either on plain tensors or on the reverse-mode tape.

class PlainBackend {
 public:
  using Value = Tensor;

  PlainBackend(const PhysicsContext& ctx) : ctx_(ctx) {}

  Tensor add(const Tensor& a, const Tensor& b) { return tensor::add(a, b); }
  Tensor sub(const Tensor& a, const Tensor& b) { return tensor::sub(a, b); }
  Tensor mul(const Tensor& a, const Tensor& b) { return tensor::mul(a, b); }
  Tensor div(const Tensor& a, const Tensor& b) { return tensor::div(a, b); }
  Tensor neg(const Tensor& a) { return tensor::neg(a); }
  Tensor scale(const Tensor& a, double s) { return tensor::scale(a, s); }
  Tensor add_scalar(const Tensor& a, double s) { return tensor::add_scalar(a, s); }
  Tensor mul_const(const Tensor& a, const Tensor& c) { return tensor::mul(a, c); }
  Tensor add_const(const Tensor& a, const Tensor& c) { return tensor::add(a, c); }
  Tensor exp(const Tensor& a) { return tensor::exp(a); }
  Tensor dx(const Tensor& a) { return diff_x(a, ctx_.geometry()); }
  Tensor dy(const Tensor& a) { return diff_y(a, ctx_.geometry()); }
  Tensor dp(const Tensor& a) { return diff_p(a, ctx_.geometry()); }
  Tensor integ(const Tensor& a) { return integrate_p(a, ctx_.geometry(), ctx_.options().integral); }
  const Tensor& value(const Tensor& a) const { return a; }
  void note_switch(std::span<const unsigned char>) {}

 private:
  const PhysicsContext& ctx_;
};

class TapeBackend {
 public:
  using Value = ad::Var;

  TapeBackend(ad::Tape& tape, const PhysicsContext& ctx) : t_(tape), ctx_(ctx) {}

  ad::Var add(ad::Var a, ad::Var b) { return ad::add(t_, a, b); }
  ad::Var sub(ad::Var a, ad::Var b) { return ad::sub(t_, a, b); }
  ad::Var mul(ad::Var a, ad::Var b) { return ad::mul(t_, a, b); }
  ad::Var div(ad::Var a, ad::Var b) { return ad::div(t_, a, b); }
  ad::Var neg(ad::Var a) { return ad::neg(t_, a); }
  ad::Var scale(ad::Var a, double s) { return ad::scale(t_, a, s); }
  ad::Var add_scalar(ad::Var a, double s) { return ad::add_scalar(t_, a, s); }
  ad::Var mul_const(ad::Var a, const Tensor& c) { return ad::mul_const(t_, a, c); }
  ad::Var add_const(ad::Var a, const Tensor& c) { return ad::add_const(t_, a, c); }
  ad::Var exp(ad::Var a) { return ad::exp(t_, a); }
  ad::Var dx(ad::Var a) { return ad::diff_x(t_, a, ctx_.geometry()); }
  ad::Var dy(ad::Var a) { return ad::diff_y(t_, a, ctx_.geometry()); }
  ad::Var dp(ad::Var a) { return ad::diff_p(t_, a, ctx_.geometry()); }
  ad::Var integ(ad::Var a) { return ad::integrate_p(t_, a, ctx_.geometry(), ctx_.options().integral); }
  const Tensor& value(ad::Var a) const { return t_.value(a); }
  void note_switch(std::span<const unsigned char> mask) { t_.note_branch(mask); }

 private:
  ad::Tape& t_;
  const PhysicsContext& ctx_;
};

namespace detail {

GridLocation locate(const Shape& shape, std::size_t flat);

template <class V>
struct Derivatives {
  V x, y, p;
};

template <class B>
Derivatives<typename B::Value> derivatives(B& be, const typename B::Value& f) {
  return {be.dx(f), be.dy(f), be.dp(f)};
}

}  // namespace detail

/// w = -integral(du/dx + dv/dy) dp.
template <class B>
typename B::Value vertical_velocity_from(B& be, const typename B::Value& u_x, const typename B::Value& v_y) {
  return be.neg(be.integ(be.add(u_x, v_y)));
}

template <class B>
struct SaturationValues {
  typename B::Value e_s, q_s, f;
};

/// e_s, q_s and the condensation factor F; throws DomainError where
/// p <= 0.378 e_s.
template <class B>
SaturationValues<B> saturation_chain(B& be, const typename B::Value& t, const Tensor& p_hpa,
                                     const PhysicalConstants& c) {
  auto t_prime = be.add_scalar(t, -273.15);
  auto e_s = be.scale(be.exp(be.div(be.scale(t_prime, 17.67), be.add_scalar(t_prime, 243.5))), 6.112);
  auto q_den = be.add_const(be.scale(e_s, -0.378), p_hpa);
  const Tensor& den = be.value(q_den);
  for (std::size_t i = 0; i < den.size(); ++i) {
    if (!(den[i] > 0.0)) {
      throw DomainError("saturation humidity undefined: p <= 0.378 e_s", detail::locate(den.shape(), i), "q_s");
    }
  }
  auto q_s = be.div(be.scale(e_s, 0.622), q_den);
  auto latent_term = be.add_scalar(be.scale(t, -c.cp * c.r_vapor), c.latent_heat * c.r);
  auto f_num = be.mul(be.mul(q_s, t), latent_term);
  auto f_den = be.add(be.scale(be.mul(t, t), c.cp * c.r_vapor), be.scale(q_s, c.latent_heat * c.latent_heat));
  return {e_s, q_s, be.div(f_num, f_den)};
}

template <class B>
std::pair<typename B::Value, typename B::Value> momentum_tendencies(
    B& be, const UpperFields<typename B::Value>& s, const detail::Derivatives<typename B::Value>& du,
    const detail::Derivatives<typename B::Value>& dv, const detail::Derivatives<typename B::Value>& dphi,
    const typename B::Value& w, const PhysicsContext& ctx) {
  const double f = ctx.constants().f;
  auto du_dt = be.sub(be.add(be.sub(be.sub(be.neg(be.mul(s.u, du.x)), be.mul(s.v, du.y)), be.mul(w, du.p)),
                             be.scale(s.v, f)),
                      dphi.x);
  auto dv_dt = be.sub(be.sub(be.sub(be.sub(be.neg(be.mul(s.u, dv.x)), be.mul(s.v, dv.y)), be.mul(w, dv.p)),
                             be.scale(s.u, f)),
                      dphi.y);
  return {du_dt, dv_dt};
}

template <class B>
typename B::Value temperature_tendency(B& be, const UpperFields<typename B::Value>& s,
                                       const detail::Derivatives<typename B::Value>& dt,
                                       const typename B::Value& dphi_dp, const typename B::Value& w,
                                       const PhysicsContext& ctx) {
  const auto& c = ctx.constants();
  auto pw = be.mul(dphi_dp, w);
  typename B::Value numerator = ctx.options().temperature == TemperatureForm::as_printed
                                    ? be.sub(be.scale(pw, -c.latent_heat), pw)
                                    : be.add(be.scale(pw, -c.latent_heat), be.mul(be.mul_const(s.t, ctx.rd_over_p()), w));
  auto heating = be.scale(numerator, 1.0 / c.cp);
  return be.sub(be.sub(be.sub(heating, be.mul(s.u, dt.x)), be.mul(s.v, dt.y)), be.mul(w, dt.p));
}

/// dphi/dt = -integral((R/p) dT/dt) dp.
template <class B>
typename B::Value geopotential_tendency(B& be, const typename B::Value& dt_dt, const PhysicsContext& ctx) {
  return be.neg(be.integ(be.mul_const(dt_dt, ctx.r_over_p())));
}

/// 0 where dphi/dt < 0 and q >= q_s, 1 elsewhere.
Tensor condensation_switch(const Tensor& dphi_total, const Tensor& q, const Tensor& q_s);

template <class B>
typename B::Value humidity_tendency(B& be, const UpperFields<typename B::Value>& s,
                                    const detail::Derivatives<typename B::Value>& dq,
                                    const detail::Derivatives<typename B::Value>& dphi,
                                    const typename B::Value& w, const typename B::Value& dz_dt,
                                    const PhysicsContext& ctx) {
  const auto sat = saturation_chain(be, s.t, ctx.pressure_hpa(), ctx.constants());
  auto dphi_total = be.add(be.add(be.add(dz_dt, be.mul(s.u, dphi.x)), be.mul(s.v, dphi.y)), be.mul(w, dphi.p));
  const Tensor delta = condensation_switch(be.value(dphi_total), be.value(s.q), be.value(sat.q_s));
  std::vector<unsigned char> mask(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) mask[i] = delta[i] != 0.0;
  be.note_switch(mask);
  auto coef = be.div(be.mul_const(sat.f, delta), be.scale(s.t, ctx.constants().r));
  return be.sub(be.sub(be.sub(be.mul(coef, dphi_total), be.mul(s.u, dq.x)), be.mul(s.v, dq.y)), be.mul(w, dq.p));
}

/// All five tendencies in dependency order: w, momentum, temperature,
/// geopotential, humidity.
template <class B>
Tendencies<typename B::Value> compute_tendencies(B& be, const UpperFields<typename B::Value>& s,
                                                 const PhysicsContext& ctx) {
  const auto du = detail::derivatives(be, s.u);
  const auto dv = detail::derivatives(be, s.v);
  const auto dphi = detail::derivatives(be, s.z);
  const auto dt = detail::derivatives(be, s.t);
  const auto dq = detail::derivatives(be, s.q);
  auto w = vertical_velocity_from(be, du.x, dv.y);
  auto [du_dt, dv_dt] = momentum_tendencies(be, s, du, dv, dphi, w, ctx);
  auto dt_dt = temperature_tendency(be, s, dt, dphi.p, w, ctx);
  auto dz_dt = geopotential_tendency(be, dt_dt, ctx);
  auto dq_dt = humidity_tendency(be, s, dq, dphi, w, dz_dt, ctx);
  return {du_dt, dv_dt, dz_dt, dq_dt, dt_dt, w};
}

// ---------------------------------------------------------------------------
// Plain-tensor entry points.

UpperFields<Tensor> upper_fields(const WeatherState& state);
void store_upper_fields(WeatherState& state, const UpperFields<Tensor>& fields);

Tensor vertical_velocity(const Tensor& u, const Tensor& v, const GridGeometry& geom,
                         IntegralMode mode = IntegralMode::weighted);
/// T in K; p is the level pressure in hPa broadcast to T's shape.
MoistureDiagnostics saturation_humidity(const Tensor& t, const Tensor& p_hpa, const PhysicalConstants& consts = {});
std::pair<Tensor, Tensor> tendency_momentum(const WeatherState& state, const Tensor& w, const PhysicsContext& ctx);
Tensor tendency_temperature(const WeatherState& state, const Tensor& w, const PhysicsContext& ctx);
Tensor tendency_geopotential(const Tensor& dt_dt, const PhysicsContext& ctx);
Tensor tendency_humidity(const WeatherState& state, const Tensor& w, const Tensor& dz_dt, const PhysicsContext& ctx);
TendencySet s_pde(const WeatherState& state, const PhysicsContext& ctx);

}  // namespace gft
