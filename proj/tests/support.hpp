#pragma once

// Shared fixtures and independent scalar oracles for the test suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "gft/grid_state.hpp"
#include "gft/tensor.hpp"

namespace gft::testing {

inline Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

inline std::vector<double> five_levels() { return {300, 500, 700, 850, 1000}; }

// ---------------------------------------------------------------------------
// Scalar oracles written from the formulas, one grid point at a time.

struct ScalarSaturation {
  double e_s, q_s, f;
};

inline ScalarSaturation scalar_saturation(double t, double p_hpa) {
  const double tp = t - 273.15;
  const double es = 6.112 * std::exp(17.67 * tp / (tp + 243.5));
  const double qs = 0.622 * es / (p_hpa - 0.378 * es);
  const double l = 2.5e6, r = 8.314, cp = 1005.0, rv = 461.5;
  return {es, qs, qs * t * (l * r - cp * rv * t) / (cp * rv * t * t + l * l * qs)};
}

/// Smooth, physically plausible state with nonzero divergence and gradients
/// in every upper-air field. Small amplitudes keep q below saturation.
inline WeatherState smooth_state(const VariableLayout& layout, std::size_t rows, std::size_t cols,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> unit(0.5, 1.0);
  WeatherState s = WeatherState::zeros(layout, rows, cols);
  const auto& levels = layout.pressure_levels();
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const double p = levels[k];
    const double t_mean = 288.0 * std::pow(p / 1000.0, 0.19);
    const double z_mean = 287.0 * 250.0 * std::log(1000.0 / p);
    struct Wave {
      double amp, ph, py;
    };
    const auto wave = [&](double amp) { return Wave{amp * unit(rng), phase(rng), phase(rng)}; };
    const double q_base = 0.4 * scalar_saturation(t_mean - 3.0, p).q_s;
    const Wave wu = wave(5.0), wv = wave(5.0), wz = wave(200.0), wt = wave(2.0), wq = wave(0.2);
    for (std::size_t r = 0; r < rows; ++r) {
      const double y = 2.0 * std::numbers::pi * double(r) / double(rows);
      for (std::size_t c = 0; c < cols; ++c) {
        const double x = 2.0 * std::numbers::pi * double(c) / double(cols);
        const auto at = [&](const Wave& w) { return w.amp * std::sin(x + w.ph) * std::cos(y + w.py); };
        s.values.at(layout.channel("u", k), r, c) = 8.0 + at(wu);
        s.values.at(layout.channel("v", k), r, c) = at(wv);
        s.values.at(layout.channel("z", k), r, c) = z_mean + at(wz);
        s.values.at(layout.channel("T", k), r, c) = t_mean + at(wt);
        s.values.at(layout.channel("q", k), r, c) = q_base * (1.0 + at(wq));
      }
    }
  }
  return s;
}

inline WeatherState uniform_state(const VariableLayout& layout, std::size_t rows, std::size_t cols, double u,
                                  double v) {
  WeatherState s = WeatherState::zeros(layout, rows, cols);
  const auto fill = [&](const std::string& var, std::size_t k, double value) {
    auto ch = s.channel(layout.channel(var, k));
    std::fill(ch.begin(), ch.end(), value);
  };
  for (std::size_t k = 0; k < layout.level_count(); ++k) {
    const double p = layout.pressure_levels()[k];
    fill("u", k, u);
    fill("v", k, v);
    fill("z", k, 287.0 * 250.0 * std::log(1000.0 / p));
    fill("T", k, 288.0 * std::pow(p / 1000.0, 0.19));
    fill("q", k, 1e-3);
  }
  return s;
}

/// 4th-order first derivative at one point; x wraps, y and p repeat the two
/// edge slices, y and p differentiate toward decreasing index.
class PointDerivatives {
 public:
  PointDerivatives(const Tensor& f, const GridGeometry& g) : f_(f), g_(g) {}

  double x(std::size_t k, std::size_t i, std::size_t j) const {
    const long w = long(g_.cols);
    const auto v = [&](long d) { return f_.at(k, i, std::size_t(((long(j) + d) % w + w) % w)); };
    return (v(-2) - 8.0 * v(-1) + 8.0 * v(1) - v(2)) / 12.0 / g_.pixel_x[i];
  }
  double y(std::size_t k, std::size_t i, std::size_t j) const {
    const auto v = [&](long d) { return f_.at(k, edge(long(i) + d, long(g_.rows)), j); };
    return (-v(-2) + 8.0 * v(-1) - 8.0 * v(1) + v(2)) / 12.0 / g_.pixel_y;
  }
  double p(std::size_t k, std::size_t i, std::size_t j) const {
    const auto v = [&](long d) { return f_.at(edge(long(k) + d, long(g_.levels())), i, j); };
    return (-v(-2) + 8.0 * v(-1) - 8.0 * v(1) + v(2)) / 12.0 / -g_.level_spacing[k];
  }

 private:
  static std::size_t edge(long q, long n) { return std::size_t(q < 0 ? q + 2 : (q >= n ? q - 2 : q)); }
  const Tensor& f_;
  const GridGeometry& g_;
};

struct PointTendencies {
  double du, dv, dz, dq, dt, w;
  double dphi_total, delta, q_advection;
};

/// All five tendencies at (k, i, j), recomputed column by column from the
/// printed equations. Requires at least 5 levels.
inline PointTendencies scalar_tendencies(const WeatherState& s, const GridGeometry& g, std::size_t k, std::size_t i,
                                         std::size_t j) {
  const double f = 7.29e-5, l = 2.5e6, cp = 1005.0, r = 8.314;
  const auto& lay = s.layout;
  const std::size_t np = g.levels(), h = g.rows, wd = g.cols;
  const auto field = [&](const char* var) {
    Tensor t({np, h, wd});
    for (std::size_t m = 0; m < np; ++m) {
      auto ch = s.channel(lay.channel(var, m));
      std::copy(ch.begin(), ch.end(), t.data() + m * h * wd);
    }
    return t;
  };
  const Tensor u = field("u"), v = field("v"), z = field("z"), q = field("q"), t = field("T");
  const PointDerivatives du(u, g), dv(v, g), dz(z, g), dq(q, g), dt(t, g);

  std::vector<double> w(np, 0.0), dtdt(np, 0.0);
  for (std::size_t m = np; m-- > 0;) {
    const double div = du.x(m, i, j) + dv.y(m, i, j);
    w[m] = (m + 1 < np ? w[m + 1] : 0.0) - g.level_spacing[m] * div;
  }
  for (std::size_t m = 0; m < np; ++m) {
    const double pw = dz.p(m, i, j) * w[m];
    dtdt[m] = (-l * pw - pw) / cp - u.at(m, i, j) * dt.x(m, i, j) - v.at(m, i, j) * dt.y(m, i, j) -
              w[m] * dt.p(m, i, j);
  }
  double dzdt = 0.0;
  for (std::size_t m = np; m-- > k;) dzdt -= g.level_spacing[m] * r / (g.pressure_hpa[m] * 100.0) * dtdt[m];

  const double uu = u.at(k, i, j), vv = v.at(k, i, j), tt = t.at(k, i, j), qq = q.at(k, i, j);
  PointTendencies out{};
  out.w = w[k];
  out.dt = dtdt[k];
  out.dz = dzdt;
  out.du = -uu * du.x(k, i, j) - vv * du.y(k, i, j) - w[k] * du.p(k, i, j) + f * vv - dz.x(k, i, j);
  out.dv = -uu * dv.x(k, i, j) - vv * dv.y(k, i, j) - w[k] * dv.p(k, i, j) - f * uu - dz.y(k, i, j);
  const ScalarSaturation sat = scalar_saturation(tt, g.pressure_hpa[k]);
  const double total = dzdt + uu * dz.x(k, i, j) + vv * dz.y(k, i, j) + w[k] * dz.p(k, i, j);
  const double delta = (total < 0.0 && qq >= sat.q_s) ? 0.0 : 1.0;
  out.dphi_total = total;
  out.delta = delta;
  out.q_advection = -uu * dq.x(k, i, j) - vv * dq.y(k, i, j) - w[k] * dq.p(k, i, j);
  out.dq = delta * sat.f / (r * tt) * total + out.q_advection;
  return out;
}

inline double rel_diff(double a, double b, double scale) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), scale});
}

}  // namespace gft::testing
