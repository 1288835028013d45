#include "gft/cli.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "gft/cli_io.hpp"
#include "gft/error.hpp"
#include "gft/metrics_eval.hpp"
#include "gft/pde_kernel.hpp"
#include "gft/stencil_ops.hpp"

namespace gft {

namespace fs = std::filesystem;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(std::string("bad number '") + item + "' in " + what);
    }
  }
  if (out.empty()) throw ValidationError(std::string(what) + " is empty");
  return out;
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw ValidationError("missing file '" + path + "'");
}

WeatherState load_state(const std::string& path) {
  require_file(path);
  return read_gft(path);
}

void require_model_grid(const ModelConfig& cfg, const WeatherState& s) {
  if (s.rows() != cfg.rows || s.cols() != cfg.cols || !(s.layout == cfg.layout())) {
    throw ValidationError("input grid " + std::to_string(s.channels()) + "x" + std::to_string(s.rows()) + "x" +
                          std::to_string(s.cols()) + " does not match the checkpoint's model (" +
                          std::to_string(cfg.channels()) + "x" + std::to_string(cfg.rows) + "x" +
                          std::to_string(cfg.cols) + ")");
  }
}

// ---------------------------------------------------------------------------

int cmd_ops_check(std::ostream& out) {
  bool all = true;
  for (const auto& c : run_ops_checks()) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) out << "  " << c.detail;
    out << '\n';
    all = all && c.passed;
  }
  return all ? 0 : 2;
}

struct EvolveArgs {
  std::string input, output;
  std::size_t steps = 12;
  double t_s = 300.0;
  double cfl_bound = 1.0;
};

int cmd_evolve(const EvolveArgs& a, std::ostream& out) {
  if (!(a.t_s > 0.0)) throw ValidationError("--t-s must be positive");
  const WeatherState input = load_state(a.input);
  const PhysicsContext ctx(build_geometry(input.rows(), input.cols(), input.layout.pressure_levels()));
  KernelOptions opts;
  opts.cfl_bound = a.cfl_bound;
  const auto res = evolve(input, a.steps, ctx, a.t_s, opts);
  out << "evolved " << a.steps << " steps of " << g17(a.t_s) << " s (" << g17(double(a.steps) * a.t_s) << " s)\n";
  out << res.report.summary() << '\n';
  if (!a.output.empty()) {
    write_gft(clamp_humidity(res.state), a.output);
    out << "wrote " << a.output << '\n';
  }
  return 0;
}

struct ForecastArgs {
  std::string input, checkpoint, lead, output;
  bool trace = false;
};

int cmd_forecast(const ForecastArgs& a, std::ostream& out) {
  const double lead = parse_lead(a.lead);
  require_file(a.checkpoint);
  Checkpoint ck = load_checkpoint(a.checkpoint);
  const std::size_t block = lead_to_block(lead, ck.params.config);
  const WeatherState input = load_state(a.input);
  require_model_grid(ck.params.config, input);
  const HybridModel model(std::move(ck.params));
  const auto bundle = model_forward(model, input, {block});
  const auto& fc = bundle.at_block(block);
  out << "forecast lead " << g17(fc.lead_seconds) << " s from block " << fc.block << '\n';
  if (a.trace) {
    for (const auto& t : bundle.trace) {
      out << "trace block=" << t.block << " lead_seconds=" << g17(t.lead_seconds)
          << " t_emb_hours=" << g17(t.t_emb.back()) << " latent_hash=" << hex64(t.latent_hash) << '\n';
    }
    for (std::size_t j = 0; j < bundle.router.size(); ++j) {
      out << "router block=" << j + 1 << " r_phys=" << g17(bundle.router[j][0]) << " r_ai=" << g17(bundle.router[j][1])
          << '\n';
    }
  }
  if (!a.output.empty()) {
    write_gft(clamp_humidity(fc.state), a.output);
    out << "wrote " << a.output << '\n';
  }
  return 0;
}

struct TrainArgs {
  std::string config, checkpoint = "checkpoint.gftc", log = "train_log.csv";
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  require_file(a.config);
  const auto bytes = read_file(a.config);
  const TrainConfig cfg = parse_train_config(std::string(bytes.begin(), bytes.end()));
  const SyntheticDataset data = gen_synthetic(cfg.data);
  const auto result = train_toy(cfg, data);

  std::ofstream log(a.log, std::ios::binary | std::ios::trunc);
  if (!log) throw FormatError(FormatErrorKind::io, "cannot write '" + a.log + "'");
  log << result.log.csv();
  save_checkpoint({kEngineVersion, result.params, cfg}, a.checkpoint);

  out << "steps " << cfg.steps << " initial_loss " << g17(result.log.initial_loss()) << " final_loss "
      << g17(result.log.final_loss()) << '\n';
  if (cfg.holdout_samples > 0) {
    SyntheticConfig held = cfg.data;
    held.seed = cfg.data.seed + 1;
    held.samples = cfg.holdout_samples;
    const SyntheticDataset test = gen_synthetic(held);
    const HybridModel model(result.params);
    const std::size_t tap = *std::max_element(cfg.taps.begin(), cfg.taps.end());
    const double lead = model.config().lead_seconds(tap);
    double hybrid = 0.0, physics = 0.0;
    for (const auto& s : test.samples) {
      const WeatherState* target = nullptr;
      for (const auto& t : s.targets) {
        if (t.lead_seconds && std::abs(*t.lead_seconds - lead) < 1e-6) target = &t;
      }
      if (!target) throw ValidationError("held-out data has no target at the last tap's lead");
      hybrid += standardized_rmse(model_forward(model, s.input, {tap}).at_block(tap).state, *target, result.params.stats);
      const auto pure = pure_physics_forecast(s.input, tap * TimeConfig::kernels_per_block, model.config().time.t_s(),
                                              model.config().physics);
      physics += standardized_rmse(pure, *target, result.params.stats);
    }
    const double n = double(test.samples.size());
    out << "holdout block " << tap << " rmse_hybrid " << g17(hybrid / n) << " rmse_physics " << g17(physics / n)
        << " ratio " << g17(hybrid / physics) << '\n';
  }
  out << "wrote " << a.checkpoint << " and " << a.log << '\n';
  return 0;
}

struct EvalArgs {
  std::string pred, gt, output, thresholds = "0.5,1.5", weighting = "none";
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto thresholds = parse_list(a.thresholds, "--thresholds");
  std::vector<RmseWeighting> modes;
  if (a.weighting == "both") {
    modes = {RmseWeighting::none, RmseWeighting::cos_lat};
  } else {
    modes = {parse_rmse_weighting(a.weighting)};
  }
  const WeatherState pred = load_state(a.pred), gt = load_state(a.gt);
  std::vector<MetricReport> reports;
  for (auto m : modes) reports.push_back(evaluate_forecast(pred, gt, fs::path(a.pred).stem().string(), m, thresholds));
  const std::string csv = metrics_csv(reports);
  if (a.output.empty()) {
    out << csv;
  } else {
    write_file(a.output, std::vector<unsigned char>(csv.begin(), csv.end()));
    out << "wrote " << a.output << '\n';
  }
  return 0;
}

struct ExportArgs {
  std::string input, var, output, palette = "viridis";
  double level = 0.0;
  bool has_level = false;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
  const WeatherState s = load_state(a.input);
  const auto& lay = s.layout;
  std::size_t ch = 0;
  if (lay.is_surface(a.var)) {
    ch = lay.surface_channel(a.var);
  } else if (lay.is_upper(a.var)) {
    if (!a.has_level) throw ValidationError("--level is required for upper-air variable " + a.var);
    ch = lay.channel(a.var, lay.level_index(a.level));
  } else {
    throw ValidationError("unknown variable '" + a.var + "'");
  }
  Tensor field({s.rows(), s.cols()});
  const auto src = s.channel(ch);
  std::copy(src.begin(), src.end(), field.data());
  const auto info = export_heatmap(field, a.output, parse_palette(a.palette));
  out << "wrote " << a.output << " min " << g17(info.min) << " max " << g17(info.max)
      << (info.degenerate ? " (degenerate range)" : "") << '\n';
  return 0;
}

struct SynthArgs {
  std::string kind = "advection", out_dir = ".", levels = "500,850,1000", leads = "1800,3600,7200";
  std::size_t rows = 16, cols = 32, samples = 1;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticConfig c;
  c.kind = parse_synthetic_kind(a.kind);
  c.rows = a.rows;
  c.cols = a.cols;
  c.levels_hpa = parse_list(a.levels, "--levels");
  c.leads_seconds = parse_list(a.leads, "--leads");
  c.samples = a.samples;
  c.seed = a.seed;
  const auto ds = gen_synthetic(c);
  fs::create_directories(a.out_dir);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    const std::string stem = (fs::path(a.out_dir) / ("sample" + std::to_string(i))).string();
    write_gft(s.input, stem + "_input.gft");
    for (const auto& t : s.targets) {
      write_gft(t, stem + "_lead" + std::to_string(std::llround(t.lead_seconds.value_or(0.0))) + ".gft");
    }
  }
  out << "wrote " << ds.samples.size() << " " << ds.generator << " samples to " << a.out_dir << '\n';
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<OpsCheck> run_ops_checks() {
  std::vector<OpsCheck> out;
  const auto check = [&](const std::string& name, auto&& fn) {
    OpsCheck c{name, false, {}};
    try {
      c.passed = fn(c.detail);
    } catch (const std::exception& e) {
      c.detail = e.what();
    }
    out.push_back(std::move(c));
  };

  check("stencil micro example", [](std::string& detail) {
    const Tensor f({1, 5}, {-2, -1, 0, 1, 2});
    const double d = diff_x(f, GridGeometry::unit(1, 5, {1, 2, 3})).at(0, 2);
    detail = "center derivative " + g17(d);
    return d == 1.0;
  });
  check("integral micro example", [](std::string& detail) {
    const Tensor x({3, 2}, {1, 4, 2, 5, 3, 6});
    const Tensor y = CumulativeIntegralMatrix(2).right_multiply(x);
    detail = "[[" + g17(y.at(0, 0)) + "," + g17(y.at(0, 1)) + "],...]";
    return y == Tensor({3, 2}, {1, 5, 2, 7, 3, 9});
  });
  check("diff operators match loop oracle", [](std::string& detail) {
    const std::vector<double> levels = {50, 100, 150, 200, 250, 300, 400, 500, 600, 700, 850, 925, 1000};
    const GridGeometry g = build_geometry(32, 64, levels);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      Tensor f({13, 32, 64});
      for (auto& v : f.storage()) v = n(rng);
      worst = std::max({worst, tensor::max_abs(tensor::sub(diff_x(f, g), naive_oracle_diff(f, Axis::x, g))),
                        tensor::max_abs(tensor::sub(diff_y(f, g), naive_oracle_diff(f, Axis::y, g))),
                        tensor::max_abs(tensor::sub(diff_p(f, g), naive_oracle_diff(f, Axis::p, g)))});
    }
    detail = "max abs diff " + g17(worst);
    return worst <= 1e-12;
  });
  check("uniform state tendencies", [](std::string& detail) {
    const std::vector<double> levels = {500, 850, 1000};
    const PhysicsContext ctx(build_geometry(8, 16, levels));
    WeatherState s = WeatherState::zeros(VariableLayout::with_levels(levels), 8, 16);
    for (std::size_t k = 0; k < 3; ++k) {
      for (auto [v, x] : {std::pair{"u", 10.0}, {"v", -5.0}, {"z", 3.0e4}, {"T", 260.0}, {"q", 1e-3}}) {
        auto ch = s.channel(s.layout.channel(v, k));
        std::fill(ch.begin(), ch.end(), x);
      }
    }
    const auto t = s_pde(s, ctx);
    const double f = ctx.constants().f;
    double err = std::max({tensor::max_abs(t.dt_dt), tensor::max_abs(t.dz_dt), tensor::max_abs(t.dq_dt)});
    for (double v : t.du_dt.values()) err = std::max(err, std::abs(v - f * -5.0));
    for (double v : t.dv_dt.values()) err = std::max(err, std::abs(v + f * 10.0));
    detail = "max deviation " + g17(err);
    return err <= 1e-15;
  });
  check("saturation chain", [](std::string& detail) {
    const auto p = saturation_point(273.15, 1000.0);
    const double oracle = 0.622 * 6.112 / (1000.0 - 0.378 * 6.112);
    detail = "e_s " + g17(p.e_s) + " q_s " + g17(p.q_s);
    return p.e_s == 6.112 && std::abs(p.q_s - oracle) <= 1e-12 * oracle;
  });
  check("lead grammar", [](std::string& detail) {
    const ModelConfig cfg;
    const std::size_t b = lead_to_block(parse_lead("30m"), cfg);
    bool rejected = false;
    try {
      lead_to_block(parse_lead("7m"), cfg);
    } catch (const ValidationError&) {
      rejected = true;
    }
    detail = "30m -> block " + std::to_string(b);
    return b == 2 && rejected;
  });
  return out;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hybrid physics and learned-correction weather engine"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  app.add_subcommand("ops-check", "Run the operator self-checks");

  EvolveArgs ev;
  auto* evolve_cmd = app.add_subcommand("evolve", "Pure-physics evolution of a grid file");
  evolve_cmd->add_option("--input", ev.input, "Input .gft file")->required();
  evolve_cmd->add_option("--steps", ev.steps, "Number of Euler steps")->capture_default_str();
  evolve_cmd->add_option("--t-s", ev.t_s, "Step length in seconds")->capture_default_str();
  evolve_cmd->add_option("--cfl-bound", ev.cfl_bound, "CFL bound for the stability report")->capture_default_str();
  evolve_cmd->add_option("--out", ev.output, "Output .gft file");

  ForecastArgs fc;
  auto* forecast_cmd = app.add_subcommand("forecast", "Hybrid forecast at one lead time");
  forecast_cmd->add_option("--input", fc.input, "Input .gft file")->required();
  forecast_cmd->add_option("--checkpoint", fc.checkpoint, "Checkpoint file")->required();
  forecast_cmd->add_option("--lead", fc.lead, "Lead time: 30m, 1h, 3h, 6h or any multiple of 15m")->required();
  forecast_cmd->add_option("--out", fc.output, "Output .gft file");
  forecast_cmd->add_flag("--trace", fc.trace, "Print the tapped block, lead embedding and latent hash");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Toy multi-lead training on synthetic data");
  train_cmd->add_option("--config", tr.config, "JSON training config")->required();
  train_cmd->add_option("--checkpoint", tr.checkpoint, "Checkpoint output")->capture_default_str();
  train_cmd->add_option("--log", tr.log, "CSV log output")->capture_default_str();

  EvalArgs evl;
  auto* eval_cmd = app.add_subcommand("eval", "Metric report for a forecast against ground truth");
  eval_cmd->add_option("--pred", evl.pred, "Forecast .gft")->required();
  eval_cmd->add_option("--gt", evl.gt, "Ground truth .gft")->required();
  eval_cmd->add_option("--thresholds", evl.thresholds, "CSI thresholds in mm/h, comma separated")->capture_default_str();
  eval_cmd->add_option("--weighting", evl.weighting, "RMSE weighting: none, cos-lat or both")->capture_default_str();
  eval_cmd->add_option("--out", evl.output, "CSV output (default stdout)");

  ExportArgs ex;
  auto* export_cmd = app.add_subcommand("export", "Write one field as a PPM heatmap");
  export_cmd->add_option("--input", ex.input, "Input .gft")->required();
  export_cmd->add_option("--var", ex.var, "Variable name")->required();
  auto* level_opt = export_cmd->add_option("--level", ex.level, "Pressure level in hPa");
  export_cmd->add_option("--out", ex.output, "Output .ppm")->required();
  export_cmd->add_option("--palette", ex.palette, "gray, heat or viridis")->capture_default_str();

  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset as grid files");
  synth_cmd->add_option("--kind", sy.kind, "advection, rotation or blended")->capture_default_str();
  synth_cmd->add_option("--rows", sy.rows)->capture_default_str();
  synth_cmd->add_option("--cols", sy.cols)->capture_default_str();
  synth_cmd->add_option("--levels", sy.levels, "Levels in hPa, comma separated")->capture_default_str();
  synth_cmd->add_option("--leads", sy.leads, "Lead times in seconds, comma separated")->capture_default_str();
  synth_cmd->add_option("--samples", sy.samples)->capture_default_str();
  synth_cmd->add_option("--seed", sy.seed)->capture_default_str();
  synth_cmd->add_option("--out-dir", sy.out_dir)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  ex.has_level = level_opt->count() > 0;

  try {
    if (app.got_subcommand("ops-check")) return cmd_ops_check(out);
    if (app.got_subcommand(evolve_cmd)) return cmd_evolve(ev, out);
    if (app.got_subcommand(forecast_cmd)) return cmd_forecast(fc, out);
    if (app.got_subcommand(train_cmd)) return cmd_train(tr, out);
    if (app.got_subcommand(eval_cmd)) return cmd_eval(evl, out);
    if (app.got_subcommand(export_cmd)) return cmd_export(ex, out);
    if (app.got_subcommand(synth_cmd)) return cmd_synth(sy, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const StabilityError& e) {
    err << "stability error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("gft");
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace gft
