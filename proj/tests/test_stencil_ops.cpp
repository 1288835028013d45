#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gft/error.hpp"
#include "gft/stencil_ops.hpp"
#include "support.hpp"

using namespace gft;

namespace {

const std::vector<double> kLevels3 = {500, 850, 1000};

// f(x) = sin(2 pi k x) on [0, 1) sampled with spacing 1 / w.
double sine_error(std::size_t w, int k) {
  const GridGeometry g = GridGeometry::uniform(1, w, kLevels3, 1.0 / double(w), 1.0);
  Tensor f({1, w});
  for (std::size_t j = 0; j < w; ++j) f[j] = std::sin(2.0 * std::numbers::pi * k * double(j) / double(w));
  const Tensor d = diff_x(f, g);
  double err = 0.0;
  for (std::size_t j = 0; j < w; ++j) {
    const double exact = 2.0 * std::numbers::pi * k * std::cos(2.0 * std::numbers::pi * k * double(j) / double(w));
    err = std::max(err, std::abs(d[j] - exact));
  }
  return err;
}

}  // namespace

TEST_SUITE("stencil_ops") {
  TEST_CASE("stencil coefficients") {
    const auto sx = Stencil5::for_axis(Axis::x);
    const auto sy = Stencil5::for_axis(Axis::y);
    CHECK(sx.coeffs == std::array<double, 5>{1, -8, 0, 8, -1});
    CHECK(sy.coeffs == std::array<double, 5>{-1, 8, 0, -8, 1});
    CHECK(Stencil5::for_axis(Axis::p).coeffs == sy.coeffs);
    for (const auto& s : {sx, sy}) {
      double sum = 0.0;
      for (std::size_t i = 0; i < 5; ++i) {
        sum += s.coeffs[i];
        CHECK(s.coeffs[i] == -s.coeffs[4 - i]);
      }
      CHECK(sum == 0.0);
      CHECK(s.divisor == 12.0);
    }
  }

  TEST_CASE("unit-spacing slope micro example") {
    const GridGeometry g = GridGeometry::unit(1, 5, kLevels3);
    const Tensor d = diff_x(Tensor({1, 5}, std::vector<double>{-2, -1, 0, 1, 2}), g);
    CHECK(d[2] == 1.0);
  }

  TEST_CASE("matrix integral micro example") {
    const Tensor x({3, 2}, std::vector<double>{1, 4, 2, 5, 3, 6});
    const Tensor y = CumulativeIntegralMatrix(2).right_multiply(x);
    CHECK(y == Tensor({3, 2}, std::vector<double>{1, 5, 2, 7, 3, 9}));
  }

  TEST_CASE("cumulative matrix layout") {
    const Tensor m = CumulativeIntegralMatrix(4).dense();
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) CHECK(m.at(i, j) == (i <= j ? 1.0 : 0.0));
    }
    const Tensor wm = CumulativeIntegralMatrix(3, {2.0, 3.0, 5.0}).dense();
    CHECK(wm.at(0, 2) == 2.0);
    CHECK(wm.at(1, 2) == 3.0);
    CHECK(wm.at(2, 2) == 5.0);
    CHECK(wm.at(2, 0) == 0.0);
  }

  TEST_CASE("constants are annihilated") {
    const GridGeometry g = build_geometry(16, 32, {300, 500, 700, 850, 1000});
    const Tensor c({5, 16, 32}, 42.0);
    CHECK(tensor::max_abs(diff_x(c, g)) == 0.0);
    CHECK(tensor::max_abs(diff_y(c, g)) == 0.0);
    CHECK(tensor::max_abs(diff_p(c, g)) == 0.0);
    const GridGeometry g3 = build_geometry(16, 32, kLevels3);
    CHECK(tensor::max_abs(diff_p(Tensor({3, 16, 32}, 7.0), g3)) == 0.0);
  }

  TEST_CASE("fourth-order convergence along x") {
    for (int k : {1, 2, 3}) {
      const double ratio = sine_error(64, k) / sine_error(128, k);
      CHECK(ratio >= 12.0);
      CHECK(ratio <= 20.0);
    }
  }

  TEST_CASE("y ramp follows the reference sign convention") {
    const GridGeometry g = GridGeometry::unit(9, 9, kLevels3);
    Tensor f({9, 9});
    for (std::size_t r = 0; r < 9; ++r) {
      for (std::size_t c = 0; c < 9; ++c) f.at(r, c) = 3.0 * double(r);
    }
    const Tensor d = diff_y(f, g);
    const Tensor oracle = naive_oracle_diff(f, Axis::y, g);
    for (std::size_t r = 2; r < 7; ++r) {
      for (std::size_t c = 0; c < 9; ++c) {
        CHECK(d.at(r, c) == -3.0);
        CHECK(oracle.at(r, c) == -3.0);
      }
    }
  }

  TEST_CASE("quadratic level profile is differentiated exactly") {
    const GridGeometry g = GridGeometry::unit(8, 8, {100, 200, 300, 400, 500, 600, 700});
    Tensor f({7, 8, 8});
    for (std::size_t k = 0; k < 7; ++k) {
      for (std::size_t i = 0; i < 64; ++i) f[k * 64 + i] = double(k * k) + 0.5 * double(k);
    }
    const Tensor d = diff_p(f, g);
    for (std::size_t k = 2; k < 5; ++k) CHECK(d.at(k, 3, 3) == doctest::Approx(2.0 * double(k) + 0.5).epsilon(1e-14));
  }

  TEST_CASE("three-level fallback is exact for linear profiles") {
    const GridGeometry g = build_geometry(8, 8, kLevels3);
    Tensor f({3, 8, 8});
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t i = 0; i < 64; ++i) f[k * 64 + i] = 2e-3 * kLevels3[k] * 100.0 + 1.0;
    }
    const Tensor d = diff_p(f, g);
    for (double v : d.values()) CHECK(v == doctest::Approx(2e-3).epsilon(1e-12));
  }

  TEST_CASE("conv operators agree with the loop oracle") {
    const GridGeometry g = build_geometry(13, 16, {50, 100, 200, 300, 500, 700, 850, 925, 1000});
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const Tensor f = testing::random_tensor({9, 13, 16}, seed, -100.0, 100.0);
      CHECK(tensor::max_abs_diff(diff_x(f, g), naive_oracle_diff(f, Axis::x, g)) <= 1e-12);
      CHECK(tensor::max_abs_diff(diff_y(f, g), naive_oracle_diff(f, Axis::y, g)) <= 1e-12);
      CHECK(tensor::max_abs_diff(diff_p(f, g), naive_oracle_diff(f, Axis::p, g)) <= 1e-12);
    }
  }

  TEST_CASE("loop oracle agrees with the scalar point oracle") {
    const GridGeometry g = build_geometry(16, 32, testing::five_levels());
    const Tensor f = testing::random_tensor({5, 16, 32}, 11);
    const testing::PointDerivatives pd(f, g);
    const Tensor ox = naive_oracle_diff(f, Axis::x, g), oy = naive_oracle_diff(f, Axis::y, g),
                 op = naive_oracle_diff(f, Axis::p, g);
    for (std::size_t k = 0; k < 5; ++k) {
      for (std::size_t i : {0, 1, 7, 14, 15}) {
        for (std::size_t j : {0, 1, 16, 31}) {
          CHECK(ox.at(k, i, j) == doctest::Approx(pd.x(k, i, j)).epsilon(1e-13));
          CHECK(oy.at(k, i, j) == doctest::Approx(pd.y(k, i, j)).epsilon(1e-13));
          CHECK(op.at(k, i, j) == doctest::Approx(pd.p(k, i, j)).epsilon(1e-13));
        }
      }
    }
  }

  TEST_CASE("linearity") {
    const GridGeometry g = build_geometry(16, 32, testing::five_levels());
    const Tensor f = testing::random_tensor({5, 16, 32}, 5), h = testing::random_tensor({5, 16, 32}, 6);
    const double a = 1.7, b = -0.3;
    const Tensor combo = tensor::add(tensor::scale(f, a), tensor::scale(h, b));
    for (auto op : {&diff_x, &diff_y, &diff_p}) {
      const Tensor lhs = op(combo, g);
      const Tensor rhs = tensor::add(tensor::scale(op(f, g), a), tensor::scale(op(h, g), b));
      CHECK(tensor::max_abs_diff(lhs, rhs) <= 1e-12 * std::max(1.0, tensor::max_abs(lhs)));
    }
  }

  TEST_CASE("circular shift equivariance in x") {
    const GridGeometry g = GridGeometry::unit(8, 16, kLevels3);
    const Tensor f = testing::random_tensor({3, 8, 16}, 9);
    const auto shift = [](const Tensor& t, std::size_t s) {
      Tensor out(t.shape());
      for (std::size_t k = 0; k < t.dim(0); ++k) {
        for (std::size_t i = 0; i < t.dim(1); ++i) {
          for (std::size_t j = 0; j < t.dim(2); ++j) out.at(k, i, (j + s) % t.dim(2)) = t.at(k, i, j);
        }
      }
      return out;
    };
    for (std::size_t s : {1, 5, 15}) CHECK(diff_x(shift(f, s), g) == shift(diff_x(f, g), s));
  }

  TEST_CASE("integrate_p") {
    const GridGeometry g = build_geometry(8, 8, kLevels3);
    SUBCASE("zero field") { CHECK(tensor::max_abs(integrate_p(Tensor({3, 8, 8}), g)) == 0.0); }
    SUBCASE("weighted constant field sums spacings to the last level") {
      const Tensor out = integrate_p(Tensor({3, 8, 8}, 2.0), g);
      CHECK(out.at(0, 4, 4) == 150000.0);
      CHECK(out.at(1, 4, 4) == 80000.0);
      CHECK(out.at(2, 4, 4) == 30000.0);
    }
    SUBCASE("unit mode counts levels") {
      const Tensor out = integrate_p(Tensor({3, 8, 8}, 2.0), g, IntegralMode::unit);
      CHECK(out.at(0, 0, 0) == 6.0);
      CHECK(out.at(1, 0, 0) == 4.0);
      CHECK(out.at(2, 0, 0) == 2.0);
    }
  }

  TEST_CASE("adjoints satisfy <A x, y> = <x, A^T y>") {
    const GridGeometry g = build_geometry(16, 32, testing::five_levels());
    const Tensor x = testing::random_tensor({5, 16, 32}, 21), y = testing::random_tensor({5, 16, 32}, 22);
    const auto dot = [](const Tensor& a, const Tensor& b) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
      return s;
    };
    CHECK(dot(diff_x(x, g), y) == doctest::Approx(dot(x, diff_x_adjoint(y, g))).epsilon(1e-12));
    CHECK(dot(diff_y(x, g), y) == doctest::Approx(dot(x, diff_y_adjoint(y, g))).epsilon(1e-12));
    CHECK(dot(diff_p(x, g), y) == doctest::Approx(dot(x, diff_p_adjoint(y, g))).epsilon(1e-12));
    CHECK(dot(integrate_p(x, g), y) == doctest::Approx(dot(x, integrate_p_adjoint(y, g))).epsilon(1e-12));
  }

  TEST_CASE("too-small axes are rejected") {
    CHECK_THROWS_AS(diff_x(Tensor({1, 4}), GridGeometry::unit(1, 4, kLevels3)), ValidationError);
    CHECK_THROWS_AS(diff_y(Tensor({4, 8}), GridGeometry::unit(4, 8, kLevels3)), ValidationError);
    CHECK_THROWS_AS(diff_p(Tensor({2, 8, 8}), GridGeometry::unit(8, 8, {500, 1000})), ValidationError);
  }
}
