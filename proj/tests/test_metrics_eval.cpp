#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "gft/error.hpp"
#include "gft/metrics_eval.hpp"
#include "support.hpp"

using namespace gft;
using gft::testing::random_tensor;

namespace {

WeatherState random_state(const VariableLayout& lay, std::uint64_t seed) {
  return WeatherState(lay, random_tensor({lay.channel_count(), 4, 8}, seed, -3.0, 3.0));
}

}  // namespace

TEST_SUITE("metrics_eval") {
  TEST_CASE("rmse examples") {
    const Tensor gt = Tensor::from({1.0, 2.0, 3.0, 4.0}).reshaped({2, 2});
    CHECK(rmse(gt, gt) == 0.0);
    CHECK(rmse(Tensor::from({1.0, 2.0, 6.0, 8.0}).reshaped({2, 2}), gt) == 2.5);
    CHECK(rmse(Tensor::from({-0.5, 0.5, 1.5, 2.5}).reshaped({2, 2}), gt) == 1.5);
    CHECK_THROWS_AS(rmse(Tensor({3, 2}), Tensor({2, 3})), ValidationError);
  }

  TEST_CASE("cos-lat weighting") {
    const std::vector<double> lat = {std::numbers::pi / 3.0, 0.0};
    // Row weights cos(lat) normalized to mean 1: {2/3, 4/3}.
    const Tensor gt({2, 1}, 0.0);
    const Tensor pred = Tensor::from({3.0, 0.0}).reshaped({2, 1});
    CHECK(rmse(pred, gt, RmseWeighting::cos_lat, lat) == doctest::Approx(std::sqrt(9.0 * (2.0 / 3.0) / 2.0)).epsilon(1e-14));
    const Tensor flat = Tensor::from({2.0, 2.0}).reshaped({2, 1});
    CHECK(rmse(flat, gt, RmseWeighting::cos_lat, lat) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(rmse(pred, gt, RmseWeighting::cos_lat, std::vector<double>{0.0}), ValidationError);
    CHECK(parse_rmse_weighting("cos-lat") == RmseWeighting::cos_lat);
    CHECK(parse_rmse_weighting("none") == RmseWeighting::none);
    CHECK_THROWS_AS(parse_rmse_weighting("area"), ValidationError);
  }

  TEST_CASE("bias examples") {
    const Tensor gt({4}, 10.0);
    CHECK(bias(gt, gt) == 0.0);
    CHECK(bias(Tensor({4}, 11.0), gt) == 1.0);
    CHECK(bias(Tensor::from({9.0, 11.0, 12.0, 12.0}), gt) == 1.0);
    CHECK_THROWS_AS(bias(Tensor({3}), gt), ValidationError);
  }

  TEST_CASE("csi examples") {
    // 4x4 pair with 6 hits, 2 misses, 2 false alarms and 6 correct negatives.
    const std::vector<double> gt = {1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0};
    const std::vector<double> pred = {1, 1, 1, 1, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0};
    const auto counts = contingency(pred, gt, 0.5);
    CHECK(counts.hits == 6);
    CHECK(counts.misses == 2);
    CHECK(counts.false_alarms == 2);
    CHECK(counts.correct_negatives == 6);
    CHECK(csi(pred, gt, 0.5) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(csi(gt, gt, 0.5) == 1.0);
    const std::vector<double> low(16, 0.1), high(16, 2.0);
    CHECK(csi(low, high, 0.5) == 0.0);
    CHECK(csi(low, low, 0.5) == 1.0);
    // Events are values at or above the threshold.
    CHECK(csi(std::vector<double>{0.5}, std::vector<double>{0.5}, 0.5) == 1.0);
    CHECK(contingency(std::vector<double>{0.5}, std::vector<double>{0.5}, 0.5).hits == 1);
  }

  TEST_CASE("csi is monotone in hits") {
    for (std::size_t h = 0; h < 10; ++h) {
      for (std::size_t m = 0; m < 5; ++m) {
        for (std::size_t f = 0; f < 5; ++f) {
          const ContingencyCounts a{h, m, f, 3}, b{h + 1, m, f, 3};
          CHECK(b.csi() >= a.csi());
          CHECK(a.csi() >= 0.0);
          CHECK(a.csi() <= 1.0);
        }
      }
    }
  }

  TEST_CASE("energy examples") {
    const VariableLayout lay = VariableLayout::with_levels({500, 850, 1000});
    WeatherState s = WeatherState::zeros(lay, 4, 8);
    CHECK(energy(s) == 0.0);
    for (std::size_t k = 0; k < 3; ++k) {
      auto ch = s.channel(lay.channel("T", k));
      std::fill(ch.begin(), ch.end(), 273.15);
    }
    CHECK(energy(s) == doctest::Approx(137257.875).epsilon(1e-14));
    PhysicalConstants warm;
    warm.t_ref = 300.0;
    CHECK(energy(s, warm) == doctest::Approx(1005.0 * 273.15 * 273.15 / 600.0).epsilon(1e-14));

    WeatherState w = s;
    for (std::size_t k = 0; k < 3; ++k) {
      auto u = w.channel(lay.channel("u", k));
      std::fill(u.begin(), u.end(), 3.0);
    }
    const double kinetic = energy(w) - energy(s);
    CHECK(kinetic == doctest::Approx(4.5).epsilon(1e-9));
    for (std::size_t k = 0; k < 3; ++k) {
      auto u = w.channel(lay.channel("u", k));
      std::fill(u.begin(), u.end(), 6.0);
    }
    CHECK(energy(w) - energy(s) == doctest::Approx(4.0 * kinetic).epsilon(1e-9));
  }

  TEST_CASE("metric properties over random states") {
    const VariableLayout lay = VariableLayout::with_levels({500, 850, 1000});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const WeatherState a = random_state(lay, seed), b = random_state(lay, seed + 100);
      const auto ab = rmse(a, b), ba = rmse(b, a), aa = rmse(a, a);
      for (const auto& [var, v] : ab) {
        CHECK(v > 0.0);
        CHECK(v == ba.at(var));
        CHECK(aa.at(var) == 0.0);
      }
      WeatherState shifted = a;
      for (double& x : shifted.values.values()) x += 0.25;
      const auto b0 = bias(a, b), b1 = bias(shifted, b);
      for (const auto& [var, v] : b0) CHECK(b1.at(var) == doctest::Approx(v + 0.25).epsilon(1e-12));

      // Rotating every (u, v) pair leaves the energy unchanged.
      WeatherState rotated = a;
      const double c = std::cos(0.7 + double(seed)), s = std::sin(0.7 + double(seed));
      for (std::size_t k = 0; k < 3; ++k) {
        auto u = rotated.channel(lay.channel("u", k));
        auto v = rotated.channel(lay.channel("v", k));
        for (std::size_t i = 0; i < u.size(); ++i) {
          const double u0 = u[i], v0 = v[i];
          u[i] = c * u0 - s * v0;
          v[i] = s * u0 + c * v0;
        }
      }
      CHECK(energy(rotated) == doctest::Approx(energy(a)).epsilon(1e-12));
    }
  }

  TEST_CASE("per-variable rmse spans all levels of an upper-air variable") {
    const VariableLayout lay = VariableLayout::with_levels({500, 850, 1000});
    WeatherState a = WeatherState::zeros(lay, 4, 8), b = a;
    auto t0 = b.channel(lay.channel("T", 0));
    std::fill(t0.begin(), t0.end(), 3.0);
    auto tp = b.channel(lay.surface_channel("tp"));
    std::fill(tp.begin(), tp.end(), 2.0);
    const auto r = rmse(a, b);
    CHECK(r.at("T") == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
    CHECK(r.at("tp") == 2.0);
    CHECK(r.at("u") == 0.0);
    CHECK(r.size() == 9);
  }

  TEST_CASE("report csv") {
    const VariableLayout lay = VariableLayout::with_levels({500, 850, 1000});
    WeatherState a = random_state(lay, 1), b = random_state(lay, 2);
    b.lead_seconds = 1800.0;
    const auto report = evaluate_forecast(a, b, "7");
    CHECK(report.lead_seconds == 1800.0);
    CHECK(report.csi.size() == kDefaultCsiThresholds.size());
    const std::string csv = metrics_csv({report, evaluate_forecast(b, a, "8")});
    const std::string header = csv.substr(0, csv.find('\n'));
    CHECK(header ==
          "sample,lead_seconds,weighting,rmse_u10,rmse_v10,rmse_t2m,rmse_tp,rmse_z,rmse_q,rmse_u,rmse_v,rmse_T,"
          "bias_u10,bias_v10,bias_t2m,bias_tp,bias_z,bias_q,bias_u,bias_v,bias_T,csi_0.5,csi_1.5,energy_pred,energy_gt");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.find("\n7,1800,none,") != std::string::npos);
    const auto weighted = evaluate_forecast(a, b, "7", RmseWeighting::cos_lat);
    CHECK(metrics_csv({weighted}).find(",cos-lat,") != std::string::npos);
    CHECK(metrics_csv({}) == "sample,lead_seconds,weighting\n");
  }
}
