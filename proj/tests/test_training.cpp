#include <cmath>
#include <cstdlib>
#include <numbers>

#include "doctest.h"
#include "gft/error.hpp"
#include "gft/training.hpp"
#include "gft/stencil_ops.hpp"
#include "support.hpp"

using namespace gft;

namespace {

SyntheticConfig toy_data_config() {
  SyntheticConfig d;
  d.rows = 8;
  d.cols = 16;
  d.samples = 2;
  d.leads_seconds = {1800, 3600};
  return d;
}

TrainConfig toy_train_config() {
  TrainConfig t;
  t.model.rows = 8;
  t.model.cols = 16;
  t.model.levels_hpa = {500, 850, 1000};
  t.model.blocks = 4;
  t.model.patch = 1;
  t.model.latent_dim = 16;
  t.model.train_taps = {2, 4};
  t.model.seed = 3;
  t.taps = {2, 4};
  t.steps = 4;
  t.lr0 = 1e-3;
  t.data = toy_data_config();
  return t;
}

WeatherState constant_state(const VariableLayout& lay, double v) {
  return WeatherState(lay, Tensor({lay.channel_count(), 8, 16}, v));
}

Objective loss_objective(const ModelParams& base, const Sample& sample, const std::vector<std::size_t>& taps) {
  return [base, &sample, taps](const ParamStore& arrays) {
    ModelParams p = base;
    p.arrays = arrays;
    const auto ev = evaluate_sample(HybridModel(p), sample, taps, std::vector<double>(taps.size(), 1.0), false);
    return Evaluation{ev.loss, ev.signature};
  };
}

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("multi-lead loss") {
    const VariableLayout lay = VariableLayout::with_levels({500, 850, 1000});
    const NormStats id = NormStats::identity(lay.channel_count());
    const auto bundle_of = [&](std::vector<double> values) {
      ForecastBundle b;
      for (std::size_t i = 0; i < values.size(); ++i) b.forecasts.push_back({i + 1, 0.0, {}, constant_state(lay, values[i])});
      return b;
    };
    const std::vector<WeatherState> zeros(3, constant_state(lay, 0.0));
    CHECK(multi_lead_loss(bundle_of({0.0, 0.0, 0.0}), zeros, {1, 1, 1}, id) == 0.0);
    CHECK(multi_lead_loss(bundle_of({0.7}), {zeros[0]}, {1}, id) == doctest::Approx(0.49).epsilon(1e-12));
    CHECK(multi_lead_loss(bundle_of({1.0, std::sqrt(2.0), std::sqrt(3.0)}), zeros, {1, 1, 1}, id) ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(multi_lead_loss(bundle_of({0.0, 0.0}), zeros, {1, 1, 1}, id), ValidationError);
  }

  TEST_CASE("scalar probe of the tape") {
    ad::Tape tape;
    const auto x = tape.leaf(Tensor::scalar(3.0));
    const auto y = ad::mul(tape, x, x);
    tape.backward(y);
    CHECK(tape.grad(x)[0] == 6.0);
  }

  TEST_CASE("finite differences of a linear function") {
    ParamStore p;
    p.add("a.x", Tensor::from({0.3, -2.0, 5.0}));
    const std::vector<double> slope = {1.5, -4.0, 0.25};
    const auto g = finite_diff_grad(
        [&](const ParamStore& q) {
          double s = 0.0;
          for (std::size_t i = 0; i < 3; ++i) s += slope[i] * q.at("a.x")[i];
          return s;
        },
        p, 1e-5);
    for (std::size_t i = 0; i < 3; ++i) CHECK(g.at("a.x")[i] == doctest::Approx(slope[i]).epsilon(1e-10));
    CHECK_THROWS_AS(finite_diff_grad([](const ParamStore&) { return 0.0; }, p, 0.0), ValidationError);
  }

  TEST_CASE("reverse-mode gradients agree with central differences") {
    const TrainConfig tc = toy_train_config();
    const auto ds = gen_synthetic(tc.data);
    const ModelParams params = init_params(tc.model, NormStats::compute(ds.inputs()));
    const auto ev = evaluate_sample(HybridModel(params), ds.samples[0], tc.taps, {1, 1}, true);
    REQUIRE(ev.grads);
    const Objective fn = loss_objective(params, ds.samples[0], tc.taps);

    SUBCASE("router weights and the lead-time embedding, every coordinate") {
      const auto coords = sample_coordinates(params.arrays, 1000, 1, [](const std::string& n) {
        const auto g = param_group(n);
        return g == "router_r" || g == "lead";
      });
      CHECK(coords.size() == 4 * 2 + 16);
      for (const auto& g : compare_gradients(*ev.grads, finite_diff_grad(fn, params.arrays, 1e-5, coords))) {
        CAPTURE(g.group);
        CHECK(g.compared > 0);
        CHECK(g.relative_error <= 1e-4);
      }
    }
    SUBCASE("sampled coordinates of the remaining groups") {
      const auto coords = sample_coordinates(params.arrays, 3, 2);
      for (const auto& g : compare_gradients(*ev.grads, finite_diff_grad(fn, params.arrays, 1e-5, coords))) {
        CAPTURE(g.group);
        CHECK(g.compared > 0);
        CHECK(g.relative_error <= 1e-4);
      }
    }
    SUBCASE("two step sizes agree on smooth coordinates") {
      const auto coords = sample_coordinates(params.arrays, 4, 3, [](const std::string& n) {
        const auto g = param_group(n);
        return g == "decoder" || g == "lead" || g == "router_r";
      });
      const auto a = finite_diff_grad(fn, params.arrays, 1e-4, coords);
      const auto b = finite_diff_grad(fn, params.arrays, 1e-6, coords);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i].value - b[i].value) * (a[i].value - b[i].value);
        den += b[i].value * b[i].value;
      }
      CHECK(std::sqrt(num / den) <= 1e-3);
    }
    SUBCASE("gradient shapes mirror the parameters") {
      CHECK(ev.grads->names() == params.arrays.names());
      for (const auto& n : params.arrays.names()) {
        CHECK(ev.grads->at(n).shape() == params.arrays.at(n).shape());
        CHECK(ev.grads->at(n).all_finite());
      }
    }
  }

  TEST_CASE("batch evaluation does not depend on the thread count") {
    const TrainConfig tc = toy_train_config();
    SyntheticConfig d = tc.data;
    d.samples = 3;
    const auto ds = gen_synthetic(d);
    const HybridModel m(init_params(tc.model, NormStats::compute(ds.inputs())));
    std::vector<const Sample*> batch;
    for (const auto& s : ds.samples) batch.push_back(&s);
    ::setenv("GFT_THREADS", "1", 1);
    const auto one = evaluate_batch(m, batch, tc.taps, {1, 1}, true);
    ::setenv("GFT_THREADS", "3", 1);
    const auto three = evaluate_batch(m, batch, tc.taps, {1, 1}, true);
    ::unsetenv("GFT_THREADS");
    CHECK(one.loss == three.loss);
    CHECK(*one.grads == *three.grads);
  }

  TEST_CASE("cosine schedule") {
    CHECK(cosine_lr(0, 100, 5e-4) == 5e-4);
    CHECK(cosine_lr(100, 100, 5e-4) == doctest::Approx(0.0).scale(1e-20));
    CHECK(cosine_lr(50, 100, 5e-4) == doctest::Approx(2.5e-4).epsilon(1e-15));
    CHECK_THROWS_AS(cosine_lr(0, 0, 1.0), ValidationError);
    CHECK_THROWS_AS(cosine_lr(5, 4, 1.0), ValidationError);
  }

  TEST_CASE("synthetic datasets") {
    SUBCASE("solid-body advection with whole-cell drift is an exact circular shift") {
      SyntheticConfig d = toy_data_config();
      d.wind = WindProfile::solid_body;
      d.cells_per_hour = 2.0;
      d.leads_seconds = {1800, 3600, 7200};
      const auto ds = gen_synthetic(d);
      for (const auto& s : ds.samples) {
        for (std::size_t li = 0; li < 3; ++li) {
          const long n = long(d.cells_per_hour * d.leads_seconds[li] / 3600.0);
          const auto& t = s.targets[li];
          for (std::size_t c = 0; c < t.channels(); ++c) {
            for (std::size_t r = 0; r < 8; ++r) {
              for (std::size_t col = 0; col < 16; ++col) {
                const std::size_t src = std::size_t(((long(col) - n) % 16 + 16) % 16);
                CHECK(t.values.at(c, r, col) == s.input.values.at(c, r, src));
              }
            }
          }
        }
      }
    }
    SUBCASE("balanced advection is geostrophic under the engine's stencil") {
      const auto x = gen_synthetic(toy_data_config()).samples[0].input;
      const GridGeometry g = build_geometry(8, 16, {500, 850, 1000});
      CHECK(tensor::max_abs(reshape_to_levels(x, "v")) == 0.0);
      for (std::size_t k = 0; k < 3; ++k) {
        Tensor z({8, 16});
        for (std::size_t r = 0; r < 8; ++r) {
          for (std::size_t c = 0; c < 16; ++c) z.at(r, c) = x.values.at(x.layout.channel("z", k), r, c);
        }
        const Tensor dz = diff_y(z, g);
        for (std::size_t r = 0; r < 8; ++r) {
          for (std::size_t c = 0; c < 16; ++c) {
            CHECK(x.values.at(x.layout.channel("u", k), r, c) == doctest::Approx(-dz.at(r, 0) / 7.29e-5).epsilon(1e-12));
          }
        }
      }
    }
    SUBCASE("rotation targets follow the inertial solution") {
      SyntheticConfig d = toy_data_config();
      d.kind = SyntheticKind::rotation;
      const auto ds = gen_synthetic(d);
      const double f = 7.29e-5;
      for (const auto& s : ds.samples) {
        for (std::size_t li = 0; li < 2; ++li) {
          const double a = f * d.leads_seconds[li];
          for (std::size_t k = 0; k < 3; ++k) {
            const double u0 = s.input.values.at(s.input.layout.channel("u", k), 0, 0);
            const double v0 = s.input.values.at(s.input.layout.channel("v", k), 0, 0);
            const auto& t = s.targets[li];
            CHECK(t.values.at(t.layout.channel("u", k), 3, 5) ==
                  doctest::Approx(u0 * std::cos(a) + v0 * std::sin(a)).epsilon(1e-14));
            CHECK(t.values.at(t.layout.channel("v", k), 3, 5) ==
                  doctest::Approx(-u0 * std::sin(a) + v0 * std::cos(a)).epsilon(1e-14));
          }
        }
      }
    }
    SUBCASE("blended data regenerates bit-identically") {
      SyntheticConfig d = toy_data_config();
      d.kind = SyntheticKind::blended;
      d.samples = 1;
      const auto a = gen_synthetic(d), b = gen_synthetic(d);
      CHECK(a.samples[0].input.values == b.samples[0].input.values);
      CHECK(a.samples[0].targets[1].values == b.samples[0].targets[1].values);
      d.seed = 2;
      CHECK_FALSE(gen_synthetic(d).samples[0].input.values == a.samples[0].input.values);
    }
    SUBCASE("surface channels are diagnosed from the lowest level") {
      const auto x = gen_synthetic(toy_data_config()).samples[0].input;
      const auto& lay = x.layout;
      CHECK(x.values.at(lay.surface_channel("t2m"), 2, 2) == x.values.at(lay.channel("T", 2), 2, 2) + 1.5);
      CHECK(x.values.at(lay.surface_channel("u10"), 2, 2) == 0.7 * x.values.at(lay.channel("u", 2), 2, 2));
      CHECK(x.values.at(lay.surface_channel("tp"), 2, 2) == 250.0 * x.values.at(lay.channel("q", 2), 2, 2));
    }
    SUBCASE("desk-scale bounds") {
      SyntheticConfig d = toy_data_config();
      d.rows = 64;
      CHECK_THROWS_AS(gen_synthetic(d), ValidationError);
      d = toy_data_config();
      d.levels_hpa = {100, 200, 300, 400, 500, 600};
      CHECK_THROWS_AS(gen_synthetic(d), ValidationError);
    }
  }

  TEST_CASE("zero learning rate leaves parameters and loss unchanged") {
    TrainConfig tc = toy_train_config();
    tc.lr0 = 0.0;
    tc.steps = 3;
    tc.batch_size = 2;
    const auto ds = gen_synthetic(tc.data);
    const ModelParams start = init_params(tc.model, NormStats::compute(ds.inputs()));
    const auto r = train_toy(tc, ds, start);
    CHECK(r.params.arrays == start.arrays);
    for (const auto& row : r.log.rows) CHECK(row.loss_total == r.log.rows.front().loss_total);
  }

  TEST_CASE("training log and determinism") {
    TrainConfig tc = toy_train_config();
    tc.lr0 = 1e-5;
    tc.momentum = 0.5;
    const auto ds = gen_synthetic(tc.data);
    const auto a = train_toy(tc, ds), b = train_toy(tc, ds);
    CHECK(a.log.csv() == b.log.csv());
    CHECK(a.params.arrays == b.params.arrays);
    REQUIRE(a.log.rows.size() == tc.steps + 1);
    const std::string header = a.log.csv().substr(0, a.log.csv().find('\n'));
    CHECK(header ==
          "step,lr,loss_total,loss_tap_2,loss_tap_4,r_phys_block_1,r_phys_block_2,r_phys_block_3,r_phys_block_4,"
          "r_ai_block_1,r_ai_block_2,r_ai_block_3,r_ai_block_4");
    for (const auto& row : a.log.rows) {
      CHECK(row.router.size() == 4);
      CHECK(row.tap_losses.size() == 2);
    }
    CHECK(a.log.rows.back().lr == 0.0);
    CHECK(a.log.rows[0].lr == tc.lr0);
  }

  TEST_CASE("training only the decoder bias reaches the least-squares optimum") {
    TrainConfig tc = toy_train_config();
    tc.schedule = "constant";
    tc.steps = 40;
    tc.batch_size = 2;
    tc.lr_scale = {{"encoder", 0.0}, {"align", 0.0}, {"correction", 0.0}, {"router_r", 0.0},
                   {"router_mlp", 0.0}, {"decoder", 0.0}, {"lead", 0.0}, {names::decoder_bias, 1.0}};
    const auto ds = gen_synthetic(tc.data);
    const ModelParams start = init_params(tc.model, NormStats::compute(ds.inputs()));
    const std::size_t c = start.config.channels(), tokens = start.config.tokens();
    // The loss is a per-channel quadratic in the bias with curvature 2 / c.
    tc.lr0 = 0.5 * double(c) / 2.0;

    std::vector<double> optimum(c, 0.0);
    const HybridModel m0(start);
    double n = 0.0;
    for (const auto& s : ds.samples) {
      const auto b = model_forward(m0, s.input, tc.taps);
      for (std::size_t i = 0; i < b.forecasts.size(); ++i) {
        const Tensor pred = standardize(b.forecasts[i].state, start.stats).values;
        const Tensor gt = standardize(s.targets[i], start.stats).values;
        for (std::size_t ch = 0; ch < c; ++ch) {
          for (std::size_t t = 0; t < tokens; ++t) optimum[ch] += gt[ch * tokens + t] - pred[ch * tokens + t];
        }
        n += double(tokens);
      }
    }
    const Tensor& b0 = start.arrays.at(names::decoder_bias);
    for (std::size_t ch = 0; ch < c; ++ch) optimum[ch] = b0[ch] + optimum[ch] / n;

    const auto r = train_toy(tc, ds, start);
    const Tensor& b = r.params.arrays.at(names::decoder_bias);
    for (std::size_t ch = 0; ch < c; ++ch) CHECK(b[ch] == doctest::Approx(optimum[ch]).epsilon(1e-6).scale(1e-6));
    for (const auto& name : start.arrays.names()) {
      if (name != names::decoder_bias) CHECK(r.params.arrays.at(name) == start.arrays.at(name));
    }
    for (std::size_t i = 1; i < r.log.rows.size(); ++i) CHECK(r.log.rows[i].loss_total <= r.log.rows[i - 1].loss_total * (1.0 + 1e-12));
  }

  TEST_CASE("divergence aborts with the step index") {
    TrainConfig tc = toy_train_config();
    tc.lr0 = 1e4;
    tc.schedule = "constant";
    tc.steps = 5;
    const auto ds = gen_synthetic(tc.data);
    try {
      train_toy(tc, ds);
      FAIL("expected training to diverge");
    } catch (const StabilityError& e) {
      CHECK(e.step() >= 1);
      CHECK(e.step() <= tc.steps);
      CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
  }

  TEST_CASE("configuration checks") {
    TrainConfig tc = toy_train_config();
    tc.lr0 = -1.0;
    CHECK_THROWS_AS(tc.validate(), ValidationError);
    tc = toy_train_config();
    tc.taps = {};
    CHECK_THROWS_AS(tc.validate(), ValidationError);
    tc = toy_train_config();
    tc.lr_scale["bogus"] = 1.0;
    CHECK_THROWS_AS(tc.validate(), ValidationError);
    tc = toy_train_config();
    tc.lr_scale["block1.nothing"] = 1.0;
    CHECK_THROWS_AS(train_toy(tc, gen_synthetic(tc.data)), ValidationError);
    CHECK(param_group(names::block(3, "router.r")) == "router_r");
    CHECK(param_group(names::block(3, "router.w1")) == "router_mlp");
    CHECK(param_group(names::block(1, "align_in.weight")) == "align");
    CHECK(param_group(names::block(1, "correction.b2")) == "correction");
    CHECK(param_group(names::lead_w) == "lead");
  }

  TEST_CASE("toy advection preset") {
    const TrainConfig tc = toy_advection_config();
    tc.validate();
    CHECK(tc.model.rows == 16);
    CHECK(tc.model.cols == 32);
    CHECK(tc.model.blocks == 8);
    CHECK(tc.taps == std::vector<std::size_t>{2, 4, 8});
    CHECK(tc.steps == 300);
  }
}
