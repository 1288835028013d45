#include "gft/metrics_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "gft/error.hpp"

namespace gft {

RmseWeighting parse_rmse_weighting(const std::string& name) {
  if (name == "none") return RmseWeighting::none;
  if (name == "cos-lat" || name == "coslat") return RmseWeighting::cos_lat;
  throw ValidationError("unknown RMSE weighting '" + name + "' (expected none or cos-lat)");
}

std::string to_string(RmseWeighting w) { return w == RmseWeighting::cos_lat ? "cos-lat" : "none"; }

namespace {

void require_match(const Tensor& pred, const Tensor& gt, const char* op) {
  if (!pred.same_shape(gt)) {
    throw ValidationError(std::string(op) + ": shape mismatch " + shape_to_string(pred.shape()) + " vs " +
                          shape_to_string(gt.shape()));
  }
  if (pred.empty()) throw ValidationError(std::string(op) + ": empty field");
}

void require_match(const WeatherState& pred, const WeatherState& gt, const char* op) {
  if (!(pred.layout == gt.layout)) throw ValidationError(std::string(op) + ": layouts differ");
  require_match(pred.values, gt.values, op);
}

std::vector<double> row_weights(std::size_t rows, RmseWeighting weighting, std::span<const double> latitudes) {
  std::vector<double> w(rows, 1.0);
  if (weighting == RmseWeighting::none) return w;
  if (latitudes.size() != rows) throw ValidationError("cos-lat weighting needs one latitude per row");
  double sum = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    w[r] = std::cos(latitudes[r]);
    sum += w[r];
  }
  for (auto& x : w) x *= double(rows) / sum;
  return w;
}

/// Channels of `var` in the layout, one for a surface variable.
std::pair<std::size_t, std::size_t> channel_range(const VariableLayout& lay, const std::string& var) {
  if (lay.is_surface(var)) return {lay.surface_channel(var), 1};
  return {lay.first_channel(var), lay.level_count()};
}

Tensor slice_channels(const WeatherState& s, std::size_t first, std::size_t count) {
  const std::size_t hw = s.rows() * s.cols();
  Tensor out({count, s.rows(), s.cols()});
  std::copy_n(s.values.data() + first * hw, count * hw, out.data());
  return out;
}

std::vector<std::string> all_vars(const VariableLayout& lay) {
  std::vector<std::string> v = lay.surface_vars();
  v.insert(v.end(), lay.upper_vars().begin(), lay.upper_vars().end());
  return v;
}

}  // namespace

double rmse(const Tensor& pred, const Tensor& gt, RmseWeighting weighting, std::span<const double> latitudes) {
  require_match(pred, gt, "rmse");
  if (pred.rank() != 2 && pred.rank() != 3) throw ValidationError("rmse expects a 2-D or 3-D field");
  const std::size_t rows = pred.dim(pred.rank() - 2), cols = pred.dim(pred.rank() - 1);
  const std::size_t planes = pred.size() / (rows * cols);
  const auto w = row_weights(rows, weighting, latitudes);
  double acc = 0.0;
  for (std::size_t k = 0; k < planes; ++k) {
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = (k * rows + r) * cols;
      for (std::size_t c = 0; c < cols; ++c) {
        const double d = pred[base + c] - gt[base + c];
        acc += w[r] * d * d;
      }
    }
  }
  return std::sqrt(acc / double(pred.size()));
}

std::map<std::string, double> rmse(const WeatherState& pred, const WeatherState& gt, RmseWeighting weighting) {
  require_match(pred, gt, "rmse");
  std::vector<double> lats;
  if (weighting == RmseWeighting::cos_lat) {
    lats.resize(pred.rows());
    for (std::size_t i = 0; i < pred.rows(); ++i) {
      lats[i] = std::numbers::pi / 2 - (double(i) + 0.5) * std::numbers::pi / double(pred.rows());
    }
  }
  std::map<std::string, double> out;
  for (const auto& var : all_vars(pred.layout)) {
    const auto [first, count] = channel_range(pred.layout, var);
    out[var] = rmse(slice_channels(pred, first, count), slice_channels(gt, first, count), weighting, lats);
  }
  return out;
}

double bias(const Tensor& pred, const Tensor& gt) {
  require_match(pred, gt, "bias");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += pred[i] - gt[i];
  return acc / double(pred.size());
}

std::map<std::string, double> bias(const WeatherState& pred, const WeatherState& gt) {
  require_match(pred, gt, "bias");
  std::map<std::string, double> out;
  for (const auto& var : all_vars(pred.layout)) {
    const auto [first, count] = channel_range(pred.layout, var);
    out[var] = bias(slice_channels(pred, first, count), slice_channels(gt, first, count));
  }
  return out;
}

double ContingencyCounts::csi() const {
  const std::size_t denom = hits + misses + false_alarms;
  if (denom == 0) return 1.0;
  return double(hits) / double(denom);
}

ContingencyCounts contingency(std::span<const double> pred, std::span<const double> gt, double th) {
  if (pred.size() != gt.size()) throw ValidationError("csi: field sizes differ");
  if (!(th > 0.0)) throw ValidationError("csi threshold must be positive");
  ContingencyCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] >= th, g = gt[i] >= th;
    if (p && g) ++c.hits;
    else if (!p && g) ++c.misses;
    else if (p && !g) ++c.false_alarms;
    else ++c.correct_negatives;
  }
  return c;
}

double csi(std::span<const double> pred, std::span<const double> gt, double th) {
  return contingency(pred, gt, th).csi();
}

double csi(const WeatherState& pred, const WeatherState& gt, double th) {
  require_match(pred, gt, "csi");
  if (!pred.layout.is_surface("tp")) throw ValidationError("csi needs a tp channel");
  const std::size_t ch = pred.layout.surface_channel("tp");
  return csi(pred.channel(ch), gt.channel(ch), th);
}

double energy(const WeatherState& state, const PhysicalConstants& consts) {
  const auto& lay = state.layout;
  for (const char* v : {"u", "v", "T"}) {
    if (!lay.is_upper(v)) throw ValidationError(std::string("energy needs upper-air ") + v);
  }
  const std::size_t cu = lay.first_channel("u"), cv = lay.first_channel("v"), ct = lay.first_channel("T");
  const std::size_t hw = state.rows() * state.cols(), n = lay.level_count() * hw;
  const double* u = state.values.data() + cu * hw;
  const double* v = state.values.data() + cv * hw;
  const double* t = state.values.data() + ct * hw;
  const double k = consts.cp / (2.0 * consts.t_ref);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += 0.5 * (u[i] * u[i] + v[i] * v[i]) + k * t[i] * t[i];
  return acc / double(n);
}

double standardized_rmse(const WeatherState& pred, const WeatherState& gt, const NormStats& stats) {
  require_match(pred, gt, "standardized_rmse");
  return rmse(standardize(pred, stats).values, standardize(gt, stats).values);
}

MetricReport evaluate_forecast(const WeatherState& pred, const WeatherState& gt, const std::string& sample,
                               RmseWeighting weighting, const std::vector<double>& thresholds,
                               const PhysicalConstants& consts) {
  MetricReport r;
  r.sample = sample;
  r.lead_seconds = pred.lead_seconds ? pred.lead_seconds : gt.lead_seconds;
  r.weighting = weighting;
  r.variables = all_vars(pred.layout);
  r.rmse = rmse(pred, gt, weighting);
  r.bias = bias(pred, gt);
  if (pred.layout.is_surface("tp")) {
    for (double th : thresholds) r.csi.emplace_back(th, csi(pred, gt, th));
  }
  r.energy_pred = energy(pred, consts);
  r.energy_gt = energy(gt, consts);
  return r;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string metrics_csv(const std::vector<MetricReport>& reports) {
  std::ostringstream os;
  os << "sample,lead_seconds,weighting";
  if (reports.empty()) {
    os << '\n';
    return os.str();
  }
  const auto& first = reports.front();
  for (const auto& var : first.variables) os << ",rmse_" << var;
  for (const auto& var : first.variables) os << ",bias_" << var;
  for (const auto& [th, _] : first.csi) os << ",csi_" << num(th);
  os << ",energy_pred,energy_gt\n";
  for (const auto& r : reports) {
    if (r.variables != first.variables || r.csi.size() != first.csi.size()) {
      throw ValidationError("metric reports disagree on columns");
    }
    os << r.sample << ',' << (r.lead_seconds ? num(*r.lead_seconds) : "") << ',' << to_string(r.weighting);
    for (const auto& var : r.variables) os << ',' << num(r.rmse.at(var));
    for (const auto& var : r.variables) os << ',' << num(r.bias.at(var));
    for (const auto& [_, v] : r.csi) os << ',' << num(v);
    os << ',' << num(r.energy_pred) << ',' << num(r.energy_gt) << '\n';
  }
  return os.str();
}

}  // namespace gft
