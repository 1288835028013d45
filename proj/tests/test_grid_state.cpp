#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gft/error.hpp"
#include "gft/grid_state.hpp"
#include "support.hpp"

using namespace gft;

TEST_SUITE("grid_state") {
  TEST_CASE("default layout has 69 channels in variable-major order") {
    VariableLayout lay;
    CHECK(lay.channel_count() == 69);
    CHECK(lay.surface_channel("u10") == 0);
    CHECK(lay.surface_channel("tp") == 3);
    CHECK(lay.first_channel("z") == 4);
    CHECK(lay.channel("z", 12) == 16);
    CHECK(lay.channel("T", 0) == 56);
    CHECK(lay.level_index(850) == 10);
  }

  TEST_CASE("channel map is a bijection") {
    VariableLayout lay;
    std::vector<int> seen(lay.channel_count(), 0);
    for (const auto& var : lay.surface_vars()) ++seen[lay.surface_channel(var)];
    for (const auto& var : lay.upper_vars()) {
      for (std::size_t k = 0; k < lay.level_count(); ++k) ++seen[lay.channel(var, k)];
    }
    for (int n : seen) CHECK(n == 1);
    for (std::size_t c = 0; c < lay.channel_count(); ++c) {
      const auto [var, level] = lay.describe(c);
      CHECK((level ? lay.channel(var, *level) : lay.surface_channel(var)) == c);
    }
  }

  TEST_CASE("spherical geometry metrics") {
    const VariableLayout lay;
    const GridGeometry g = build_geometry(128, 256, lay.pressure_levels());
    CHECK(g.pixel_y == doctest::Approx(156367.86559391071).epsilon(1e-14));
    CHECK(g.latitudes[63] == doctest::Approx(0.012271846303085088).epsilon(1e-14));
    CHECK(g.pixel_x[63] == doctest::Approx(156356.09138121459).epsilon(1e-14));
    CHECK(g.latitudes.front() == doctest::Approx(std::numbers::pi / 2 - 0.5 * std::numbers::pi / 128));
    CHECK(g.latitudes.front() == doctest::Approx(-g.latitudes.back()));
  }

  TEST_CASE("pressure spacings in Pa") {
    const GridGeometry g = build_geometry(8, 8, {500, 850, 1000});
    REQUIRE(g.pixel_p.size() == 2);
    CHECK(g.pixel_p[0] == 35000.0);
    CHECK(g.pixel_p[1] == 15000.0);
    CHECK(g.level_spacing == std::vector<double>{35000.0, 25000.0, 15000.0});
  }

  TEST_CASE("pixel_x stays positive on every row") {
    for (std::size_t h = 8; h <= 64; h += 7) {
      const GridGeometry g = build_geometry(h, 16, {500, 850, 1000});
      CHECK(*std::min_element(g.pixel_x.begin(), g.pixel_x.end()) > 0.0);
    }
  }

  TEST_CASE("geometry rejects bad inputs") {
    CHECK_THROWS_AS(build_geometry(8, 8, {850, 1000}), ValidationError);
    CHECK_THROWS_AS(build_geometry(8, 8, {500, 500, 1000}), ValidationError);
    CHECK_THROWS_AS(build_geometry(8, 8, {1000, 850, 500}), ValidationError);
    CHECK_THROWS_AS(build_geometry(7, 8, {500, 850, 1000}), ValidationError);
  }

  TEST_CASE("reshape_to_levels gives P x H x W and round-trips exactly") {
    const VariableLayout lay;
    WeatherState s(lay, testing::random_tensor({69, 128, 256}, 1));
    const Tensor z = reshape_to_levels(s, "z");
    CHECK(z.shape() == Shape{13, 128, 256});
    CHECK(z.at(4, 7, 9) == s.values.at(lay.channel("z", 4), 7, 9));
    WeatherState copy = WeatherState::zeros(lay, 128, 256);
    copy.values = s.values;
    for (const auto& var : lay.upper_vars()) assign_levels(copy, var, reshape_to_levels(s, var));
    CHECK(copy.values == s.values);
  }

  TEST_CASE("surface variables have no level axis") {
    const WeatherState s = WeatherState::zeros(VariableLayout(), 8, 8);
    CHECK_THROWS_WITH_AS(reshape_to_levels(s, "t2m"), doctest::Contains("no level axis"), ValidationError);
  }

  TEST_CASE("standardize") {
    const VariableLayout lay;
    const std::size_t c = lay.channel_count();
    SUBCASE("a field equal to its channel mean maps to zero") {
      NormStats st{std::vector<double>(c, 3.5), std::vector<double>(c, 2.0)};
      WeatherState s(lay, Tensor({c, 8, 16}, 3.5));
      CHECK(tensor::max_abs(standardize(s, st).values) == 0.0);
    }
    SUBCASE("identity stats are the identity map") {
      WeatherState s(lay, testing::random_tensor({c, 8, 16}, 2));
      CHECK(standardize(s, NormStats::identity(c)).values == s.values);
    }
    SUBCASE("round-trip on a random 69 x 8 x 16 state") {
      WeatherState s(lay, testing::random_tensor({c, 8, 16}, 3, -500.0, 500.0));
      const NormStats st = NormStats::compute({s});
      const WeatherState back = destandardize(standardize(s, st), st);
      CHECK(tensor::max_abs_diff(back.values, s.values) < 1e-12);
    }
    SUBCASE("zero std is rejected") {
      NormStats st{std::vector<double>(c, 0.0), std::vector<double>(c, 1.0)};
      st.std[5] = 0.0;
      WeatherState s(lay, Tensor({c, 8, 16}));
      CHECK_THROWS_AS(standardize(s, st), ValidationError);
    }
    SUBCASE("channel count must match") {
      WeatherState s(lay, Tensor({c, 8, 16}));
      CHECK_THROWS_AS(standardize(s, NormStats::identity(c - 1)), ValidationError);
    }
  }

  TEST_CASE("clamp_humidity only touches q") {
    const VariableLayout lay = VariableLayout::with_levels({500, 850, 1000});
    WeatherState s(lay, Tensor({lay.channel_count(), 8, 8}, -1.0));
    const WeatherState out = clamp_humidity(s);
    for (std::size_t c = 0; c < lay.channel_count(); ++c) {
      const bool is_q = lay.describe(c).first == "q";
      CHECK(out.values.at(c, 3, 3) == (is_q ? 0.0 : -1.0));
    }
  }
}
