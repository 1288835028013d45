#include <chrono>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "gft/error.hpp"
#include "gft/pde_kernel.hpp"
#include "gft/training.hpp"
#include "support.hpp"

using namespace gft;

namespace {

const VariableLayout kLayout5 = VariableLayout::with_levels(testing::five_levels());

WeatherState synthetic_input() {
  SyntheticConfig c;
  c.samples = 1;
  return gen_synthetic(c).samples[0].input;
}

}  // namespace

TEST_SUITE("pde_kernel") {
  TEST_CASE("time configuration") {
    TimeConfig t;
    CHECK(t.t_s() == 300.0);
    CHECK(t.t_block() == 900.0);
    CHECK(t.t_s() * t.m == t.t_data);
    t.m = 0;
    CHECK_THROWS_AS(t.validate(), ValidationError);
  }

  TEST_CASE("zeroed tendencies leave the state bit-identical") {
    const WeatherState s = testing::smooth_state(kLayout5, 16, 32, 3);
    const PhysicsContext ctx(build_geometry(16, 32, testing::five_levels()));
    KernelOptions opt;
    opt.zero_tendencies = true;
    CHECK(euler_step(s, ctx, 300.0, opt).values == s.values);
  }

  TEST_CASE("one step of inertial rotation") {
    const WeatherState s = testing::uniform_state(kLayout5, 16, 32, 10.0, 0.0);
    const PhysicsContext ctx(build_geometry(16, 32, testing::five_levels()));
    const WeatherState out = euler_step(s, ctx, 300.0);
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(out.values.at(kLayout5.channel("v", k), 4, 4) == doctest::Approx(-0.2187).epsilon(1e-14));
      CHECK(out.values.at(kLayout5.channel("u", k), 4, 4) == 10.0);
      CHECK(out.values.at(kLayout5.channel("T", k), 4, 4) == s.values.at(kLayout5.channel("T", k), 4, 4));
    }
  }

  TEST_CASE("48 small steps track the analytic rotation") {
    const double u0 = 10.0, v0 = 5.0, ts = 300.0, f = 7.29e-5;
    const std::size_t n = 48;
    const WeatherState s = testing::uniform_state(kLayout5, 16, 32, u0, v0);
    const PhysicsContext ctx(build_geometry(16, 32, testing::five_levels()));
    const WeatherState out = evolve(s, n, ctx, ts).state;
    const double a = f * double(n) * ts;
    const double ue = u0 * std::cos(a) + v0 * std::sin(a), ve = -u0 * std::sin(a) + v0 * std::cos(a);
    const double speed = std::hypot(u0, v0);
    const double bound = 5.0 * double(n) * (f * ts) * (f * ts);
    const double err = std::hypot(out.values.at(kLayout5.channel("u", 2), 3, 3) - ue,
                                  out.values.at(kLayout5.channel("v", 2), 3, 3) - ve) / speed;
    CHECK(err <= bound);
    CHECK(err > 0.0);
  }

  TEST_CASE("surface channels pass through") {
    WeatherState s = synthetic_input();
    const PhysicsContext ctx(build_geometry(s.rows(), s.cols(), s.layout.pressure_levels()));
    const WeatherState out = euler_step(s, ctx, 300.0);
    for (const auto& var : s.layout.surface_vars()) {
      const std::size_t c = s.layout.surface_channel(var);
      for (std::size_t i = 0; i < s.rows() * s.cols(); ++i) CHECK(out.channel(c)[i] == s.channel(c)[i]);
    }
  }

  TEST_CASE("evolve identity and composition") {
    const WeatherState s = synthetic_input();
    const PhysicsContext ctx(build_geometry(s.rows(), s.cols(), s.layout.pressure_levels()));
    CHECK(evolve(s, 0, ctx, 300.0).state.values == s.values);
    const WeatherState a = evolve(evolve(s, 3, ctx, 300.0).state, 4, ctx, 300.0).state;
    const WeatherState b = evolve(s, 7, ctx, 300.0).state;
    CHECK(a.values == b.values);
    CHECK(a.lead_seconds == b.lead_seconds);
  }

  TEST_CASE("one dataset hour on the synthetic data stays finite") {
    const WeatherState s = synthetic_input();
    const PhysicsContext ctx(build_geometry(s.rows(), s.cols(), s.layout.pressure_levels()));
    const TimeConfig tc;
    const EvolveResult r = evolve(s, std::size_t(tc.m), ctx, tc.t_s());
    CHECK(r.state.values.all_finite());
    CHECK(r.report.stable);
    CHECK(r.report.nan_count == 0);
    CHECK(*r.state.lead_seconds == 3600.0);
  }

  TEST_CASE("stability_check") {
    SUBCASE("calm state") {
      const WeatherState s = testing::uniform_state(kLayout5, 16, 32, 0.0, 0.0);
      const auto r = stability_check(s, build_geometry(16, 32, testing::five_levels()), 300.0);
      CHECK(r.cfl_estimate == 0.0);
      CHECK(r.stable);
      CHECK_FALSE(r.warning);
    }
    SUBCASE("the boundary case is flagged") {
      const WeatherState s = testing::uniform_state(kLayout5, 16, 32, 50.0, 0.0);
      const auto r = stability_check(s, GridGeometry::uniform(16, 32, testing::five_levels(), 15000.0, 15000.0), 300.0);
      CHECK(r.cfl_estimate == doctest::Approx(1.0).epsilon(1e-15));
      CHECK_FALSE(r.stable);
    }
    SUBCASE("warning band below the bound") {
      const WeatherState s = testing::uniform_state(kLayout5, 16, 32, 45.0, 0.0);
      const auto r = stability_check(s, GridGeometry::uniform(16, 32, testing::five_levels(), 15000.0, 15000.0), 300.0);
      CHECK(r.stable);
      CHECK(r.warning);
    }
    SUBCASE("one NaN") {
      WeatherState s = testing::uniform_state(kLayout5, 16, 32, 1.0, 0.0);
      s.values.at(7, 2, 3) = std::numeric_limits<double>::quiet_NaN();
      const auto r = stability_check(s, build_geometry(16, 32, testing::five_levels()), 300.0);
      CHECK(r.nan_count == 1);
      CHECK_FALSE(r.stable);
    }
  }

  TEST_CASE("non-finite input aborts with a location") {
    WeatherState s = testing::smooth_state(kLayout5, 16, 32, 2);
    s.values.at(kLayout5.channel("T", 1), 5, 6) = std::numeric_limits<double>::quiet_NaN();
    const PhysicsContext ctx(build_geometry(16, 32, testing::five_levels()));
    try {
      evolve(s, 3, ctx, 300.0);
      FAIL("expected a stability error");
    } catch (const StabilityError& e) {
      CHECK(e.step() == 0);
      REQUIRE(e.location().has_value());
      CHECK(e.location()->level == kLayout5.channel("T", 1));
      CHECK(e.location()->row == 5);
      CHECK(e.location()->col == 6);
    }
  }

  TEST_CASE("a violent run aborts instead of returning garbage") {
    WeatherState s = testing::smooth_state(kLayout5, 16, 32, 2);
    for (const char* var : {"u", "v"}) {
      for (std::size_t k = 0; k < 5; ++k) {
        for (double& x : s.channel(kLayout5.channel(var, k))) x *= 60.0;
      }
    }
    const PhysicsContext ctx(build_geometry(16, 32, testing::five_levels()));
    bool threw = false;
    try {
      const auto r = evolve(s, 200, ctx, 3600.0);
      CHECK(r.state.values.all_finite());
    } catch (const StabilityError& e) {
      threw = true;
      CHECK(e.step() < 200);
      CHECK(e.location().has_value());
    }
    CHECK(threw);
  }

  TEST_CASE("runtime grows linearly with the step count") {
    const WeatherState s = synthetic_input();
    const PhysicsContext ctx(build_geometry(s.rows(), s.cols(), s.layout.pressure_levels()));
    const auto time = [&](std::size_t n) {
      const auto t0 = std::chrono::steady_clock::now();
      evolve(s, n, ctx, 300.0);
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    time(2);
    const double t4 = time(4), t16 = time(16);
    CHECK(t16 / t4 > 2.0);
    CHECK(t16 / t4 < 8.0);
  }
}
