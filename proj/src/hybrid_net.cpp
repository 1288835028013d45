#include "gft/hybrid_net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "gft/error.hpp"

namespace gft {

VariableLayout ModelConfig::layout() const { return VariableLayout(surface_vars, upper_vars, levels_hpa); }

void ModelConfig::validate() const {
  const VariableLayout lay = layout();
  for (const char* v : {"u", "v", "z", "q", "T"}) {
    if (!lay.is_upper(v)) throw ValidationError(std::string("upper-air variable '") + v + "' is required");
  }
  if (levels_hpa.size() < 3) throw ValidationError("the physics branch needs at least 3 pressure levels");
  if (patch == 0) throw ValidationError("patch size must be positive");
  if (rows % patch != 0 || cols % patch != 0) {
    throw ValidationError("grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " is not divisible by patch size " + std::to_string(patch));
  }
  if (token_rows() < 8 || token_cols() < 8) throw ValidationError("token grid must be at least 8x8");
  if (blocks == 0) throw ValidationError("at least one HybridBlock is required");
  if (latent_dim == 0 || mlp_ratio == 0 || embedding_size == 0) {
    throw ValidationError("latent_dim, mlp_ratio and embedding_size must be positive");
  }
  if (train_taps.empty()) throw ValidationError("tap set must not be empty");
  for (std::size_t t : train_taps) {
    if (t < 1 || t > blocks) throw ValidationError("tap " + std::to_string(t) + " outside 1.." + std::to_string(blocks));
  }
  time.validate();
  if (init == InitScheme::passthrough && latent_dim < patch_features()) {
    throw ValidationError("passthrough init needs latent_dim >= channels * patch^2 (" +
                          std::to_string(patch_features()) + ")");
  }
}

void ParamStore::add(const std::string& name, Tensor value) {
  if (contains(name)) throw ValidationError("duplicate parameter '" + name + "'");
  order_.push_back(name);
  arrays_.emplace(name, std::move(value));
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw ValidationError("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw ValidationError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [_, t] : arrays_) n += t.size();
  return n;
}

namespace names {
std::string block(std::size_t j, const std::string& leaf) { return "blocks." + std::to_string(j) + "." + leaf; }
}  // namespace names

namespace {

struct Shapes {
  std::vector<std::pair<std::string, Shape>> list;
};

Shapes expected_shapes(const ModelConfig& c) {
  const std::size_t d = c.latent_dim, ch = c.channels(), hid = c.mlp_ratio * d;
  Shapes s;
  s.list.push_back({names::encoder_weight, {d, c.patch_features()}});
  s.list.push_back({names::encoder_bias, {d}});
  s.list.push_back({names::encoder_pos, {d, c.tokens()}});
  for (std::size_t j = 1; j <= c.blocks; ++j) {
    s.list.push_back({names::block(j, "align_in.weight"), {ch, d}});
    s.list.push_back({names::block(j, "align_in.bias"), {ch}});
    s.list.push_back({names::block(j, "align_out.weight"), {d, ch}});
    s.list.push_back({names::block(j, "align_out.bias"), {d}});
    s.list.push_back({names::block(j, "correction.w1"), {hid, d}});
    s.list.push_back({names::block(j, "correction.b1"), {hid}});
    s.list.push_back({names::block(j, "correction.w2"), {d, hid}});
    s.list.push_back({names::block(j, "correction.b2"), {d}});
    s.list.push_back({names::block(j, "router.r"), {2}});
    s.list.push_back({names::block(j, "router.w1"), {d, d}});
    s.list.push_back({names::block(j, "router.b1"), {d}});
    s.list.push_back({names::block(j, "router.w2"), {d, d}});
    s.list.push_back({names::block(j, "router.b2"), {d}});
  }
  s.list.push_back({names::decoder_weight, {c.patch_features(), d + c.embedding_length()}});
  s.list.push_back({names::decoder_bias, {c.patch_features()}});
  s.list.push_back({names::lead_w, {c.embedding_size}});
  return s;
}

class Init {
 public:
  explicit Init(std::uint64_t seed) : rng_(seed) {}

  Tensor gaussian(const Shape& shape, double sd) {
    Tensor t(shape);
    for (double& v : t.values()) v = sd * normal_(rng_);
    return t;
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

Tensor selection(std::size_t out, std::size_t in) {
  Tensor t({out, in});
  for (std::size_t i = 0; i < std::min(out, in); ++i) t.at(i, i) = 1.0;
  return t;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, NormStats stats) {
  config.validate();
  stats.validate();
  if (stats.channels() != config.channels()) throw ValidationError("norm stats channel count does not match config");
  Init init(config.seed);
  const bool pass = config.init == InitScheme::passthrough;
  const std::size_t p2 = config.patch * config.patch;
  ModelParams mp{config, {}, std::move(stats)};
  for (const auto& [name, shape] : expected_shapes(config).list) {
    const auto ends_with = [&](const char* suffix) {
      const std::size_t n = std::strlen(suffix);
      return name.size() >= n && name.compare(name.size() - n, n, suffix) == 0;
    };
    Tensor t(shape);
    if (name == names::encoder_weight) {
      t = pass ? selection(shape[0], shape[1]) : init.gaussian(shape, 1.0 / std::sqrt(double(shape[1])));
    } else if (name == names::encoder_pos) {
      if (!pass) t = init.gaussian(shape, 0.02);
    } else if (ends_with("align_in.weight")) {
      if (pass) {
        for (std::size_t c = 0; c < shape[0]; ++c) {
          for (std::size_t k = 0; k < p2; ++k) t.at(c, c * p2 + k) = 1.0 / double(p2);
        }
      } else {
        t = init.gaussian(shape, config.align_init_scale / std::sqrt(double(shape[1])));
      }
    } else if (ends_with("align_out.weight")) {
      if (pass) {
        for (std::size_t c = 0; c < shape[1]; ++c) {
          for (std::size_t k = 0; k < p2; ++k) t.at(c * p2 + k, c) = 1.0;
        }
      } else {
        t = init.gaussian(shape, 1.0 / std::sqrt(double(shape[1])));
      }
    } else if (ends_with("correction.w1") || ends_with("router.w1")) {
      t = init.gaussian(shape, 1.0 / std::sqrt(double(shape[1])));
    } else if (ends_with("correction.w2") || ends_with("router.w2")) {
      if (!pass) t = init.gaussian(shape, config.mlp_out_scale / std::sqrt(double(shape[1])));
    } else if (ends_with("router.r")) {
      t = Tensor::from({0.5, 0.5});
    } else if (name == names::decoder_weight) {
      t = pass ? selection(shape[0], shape[1]) : init.gaussian(shape, 1.0 / std::sqrt(double(shape[1])));
    } else if (name == names::lead_w) {
      t = init.gaussian(shape, 1.0);
    }
    mp.arrays.add(name, std::move(t));
  }
  return mp;
}

HybridModel::HybridModel(ModelParams params) : params_(std::move(params)) {
  const ModelConfig& c = params_.config;
  c.validate();
  params_.stats.validate();
  if (params_.stats.channels() != c.channels()) throw ValidationError("norm stats channel count does not match config");
  const auto expected = expected_shapes(c);
  if (params_.arrays.count() != expected.list.size()) throw ValidationError("parameter set does not match config");
  for (const auto& [name, shape] : expected.list) {
    if (params_.arrays.at(name).shape() != shape) {
      throw ValidationError("parameter '" + name + "' has shape " + shape_to_string(params_.arrays.at(name).shape()) +
                            ", expected " + shape_to_string(shape));
    }
  }
  physics_ = std::make_shared<const PhysicsContext>(build_geometry(c.token_rows(), c.token_cols(), c.levels_hpa),
                                                    PhysicalConstants{}, c.physics);
}

ad::Var BoundParams::operator()(const std::string& name) const {
  auto it = vars.find(name);
  if (it == vars.end()) throw ValidationError("parameter '" + name + "' is not bound");
  return it->second;
}

BoundParams bind_params(ad::Tape& tape, const ParamStore& arrays, bool requires_grad) {
  BoundParams b;
  for (const auto& name : arrays.names()) b.vars.emplace(name, tape.leaf(arrays.at(name), requires_grad));
  return b;
}

namespace {

/// Flat index maps between C x H x W fields and (C p^2) x T patch matrices.
std::vector<std::size_t> patchify_index(const ModelConfig& c) {
  const std::size_t p = c.patch, h = c.rows, w = c.cols, tc = c.token_cols(), t = c.tokens();
  std::vector<std::size_t> idx(c.patch_features() * t);
  for (std::size_t ch = 0; ch < c.channels(); ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t feature = ch * p * p + (y % p) * p + (x % p);
        const std::size_t token = (y / p) * tc + x / p;
        idx[feature * t + token] = (ch * h + y) * w + x;
      }
    }
  }
  return idx;
}

std::vector<std::size_t> unpatchify_index(const ModelConfig& c) {
  const std::size_t p = c.patch, h = c.rows, w = c.cols, tc = c.token_cols(), t = c.tokens();
  std::vector<std::size_t> idx(c.channels() * h * w);
  for (std::size_t ch = 0; ch < c.channels(); ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t feature = ch * p * p + (y % p) * p + (x % p);
        const std::size_t token = (y / p) * tc + x / p;
        idx[(ch * h + y) * w + x] = feature * t + token;
      }
    }
  }
  return idx;
}

Tensor broadcast_rows(const std::vector<double>& per_row, std::size_t n) {
  Tensor t({per_row.size(), n});
  for (std::size_t i = 0; i < per_row.size(); ++i) std::fill(t.data() + i * n, t.data() + (i + 1) * n, per_row[i]);
  return t;
}

void require_finite(const ad::Tape& tape, ad::Var v, std::size_t block, const std::string& what) {
  const Tensor& t = tape.value(v);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      throw StabilityError("block " + std::to_string(block) + ": non-finite " + what, block,
                           detail::locate(t.shape(), i));
    }
  }
}

}  // namespace

ad::Var encode(ad::Tape& tape, const BoundParams& p, const ModelConfig& cfg, const Tensor& standardized) {
  if (standardized.shape() != Shape{cfg.channels(), cfg.rows, cfg.cols}) {
    throw ValidationError("encode: expected state of shape " +
                          shape_to_string({cfg.channels(), cfg.rows, cfg.cols}) + ", got " +
                          shape_to_string(standardized.shape()));
  }
  auto x = tape.constant(standardized);
  auto patches = ad::gather(tape, x, patchify_index(cfg), {cfg.patch_features(), cfg.tokens()});
  auto z = ad::affine(tape, p(names::encoder_weight), p(names::encoder_bias), patches);
  return ad::add(tape, z, p(names::encoder_pos));
}

ad::Var embed_lead_time(ad::Tape& tape, ad::Var w, double hours) {
  auto arg = ad::scale(tape, w, std::numbers::pi * hours);
  auto t = tape.constant(Tensor::scalar(hours));
  return ad::concat(tape, {ad::sin(tape, arg), ad::cos(tape, arg), t});
}

ad::Var decode(ad::Tape& tape, const BoundParams& p, const ModelConfig& cfg, ad::Var latent, ad::Var t_emb) {
  if (tape.value(latent).shape() != Shape{cfg.latent_dim, cfg.tokens()}) {
    throw ValidationError("decode: latent shape " + shape_to_string(tape.value(latent).shape()) + " does not match config");
  }
  if (tape.value(t_emb).size() != cfg.embedding_length()) {
    throw ValidationError("decode: lead-time embedding has length " + std::to_string(tape.value(t_emb).size()) +
                          ", expected " + std::to_string(cfg.embedding_length()));
  }
  auto cond = ad::concat_rows(tape, latent, ad::broadcast_cols(tape, t_emb, cfg.tokens()));
  auto patches = ad::affine(tape, p(names::decoder_weight), p(names::decoder_bias), cond);
  return ad::gather(tape, patches, unpatchify_index(cfg), {cfg.channels(), cfg.rows, cfg.cols});
}

RouterOutput route_fuse(ad::Tape& tape, const BoundParams& p, std::size_t block, ad::Var x_n, ad::Var x_p) {
  if (tape.value(x_n).shape() != tape.value(x_p).shape()) {
    throw ValidationError("route_fuse: branch shapes " + shape_to_string(tape.value(x_n).shape()) + " and " +
                          shape_to_string(tape.value(x_p).shape()) + " differ");
  }
  auto r = p(names::block(block, "router.r"));
  auto lin = ad::add(tape, ad::scale_by(tape, ad::select(tape, r, 0), x_p), ad::scale_by(tape, ad::select(tape, r, 1), x_n));
  auto h = ad::relu(tape, ad::affine(tape, p(names::block(block, "router.w1")), p(names::block(block, "router.b1")), lin));
  auto m = ad::affine(tape, p(names::block(block, "router.w2")), p(names::block(block, "router.b2")), h);
  return {lin, ad::add(tape, lin, m)};
}

ad::Var correction_branch(ad::Tape& tape, const BoundParams& p, std::size_t block, ad::Var latent) {
  auto h = ad::gelu(tape, ad::affine(tape, p(names::block(block, "correction.w1")),
                                     p(names::block(block, "correction.b1")), latent));
  auto m = ad::affine(tape, p(names::block(block, "correction.w2")), p(names::block(block, "correction.b2")), h);
  return ad::add(tape, latent, m);
}

ad::Var physics_branch(ad::Tape& tape, const BoundParams& p, const HybridModel& model, std::size_t block,
                       ad::Var latent, const ForwardOptions& options) {
  const ModelConfig& cfg = model.config();
  const NormStats& stats = model.params().stats;
  const PhysicsContext& ctx = model.token_physics();
  const VariableLayout lay = cfg.layout();
  const std::size_t t_count = cfg.tokens(), levels = lay.level_count();
  const Shape field{levels, cfg.token_rows(), cfg.token_cols()};

  auto s = ad::affine(tape, p(names::block(block, "align_in.weight")), p(names::block(block, "align_in.bias")), latent);
  auto phys = ad::add_const(tape, ad::mul_const(tape, s, broadcast_rows(stats.std, t_count)),
                            broadcast_rows(stats.mean, t_count));

  const auto rows_of = [&](ad::Var src, std::size_t first, std::size_t n, Shape shape) {
    std::vector<std::size_t> idx(n * t_count);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = first * t_count + i;
    return ad::gather(tape, src, std::move(idx), std::move(shape));
  };
  const auto level_stats = [&](const std::string& var, bool inverse_std) {
    const std::size_t first = lay.first_channel(var);
    Tensor t(field);
    const std::size_t plane = t_count;
    for (std::size_t k = 0; k < levels; ++k) {
      const double v = inverse_std ? 1.0 / stats.std[first + k] : -stats.mean[first + k];
      std::fill(t.data() + k * plane, t.data() + (k + 1) * plane, v);
    }
    return t;
  };

  UpperFields<ad::Var> f{rows_of(phys, lay.first_channel("u"), levels, field),
                         rows_of(phys, lay.first_channel("v"), levels, field),
                         rows_of(phys, lay.first_channel("z"), levels, field),
                         rows_of(phys, lay.first_channel("q"), levels, field),
                         rows_of(phys, lay.first_channel("T"), levels, field)};
  if (!options.zero_tendencies) {
    TapeBackend be(tape, ctx);
    const double t_s = cfg.time.t_s();
    for (std::size_t step = 0; step < TimeConfig::kernels_per_block; ++step) {
      try {
        f = euler_fields(be, f, ctx, t_s);
      } catch (const DomainError& e) {
        throw StabilityError("block " + std::to_string(block) + ", kernel " + std::to_string(step + 1) + ": " + e.reason() +
                                 (e.field().empty() ? "" : " at " + e.field()),
                             block, e.location());
      }
      for (auto [v, name] : {std::pair{f.u, "u"}, {f.v, "v"}, {f.z, "z"}, {f.q, "q"}, {f.t, "T"}}) {
        require_finite(tape, v, block, std::string(name) + " after kernel " + std::to_string(step + 1));
      }
    }
  }

  const auto by_name = [&](const std::string& var) {
    if (var == "u") return f.u;
    if (var == "v") return f.v;
    if (var == "z") return f.z;
    if (var == "q") return f.q;
    if (var == "T") return f.t;
    throw ValidationError("physics branch cannot evolve variable '" + var + "'");
  };
  std::vector<ad::Var> parts;
  const std::size_t n_surface = lay.surface_vars().size();
  if (n_surface > 0) parts.push_back(rows_of(s, 0, n_surface, {n_surface * t_count}));
  for (const auto& var : lay.upper_vars()) {
    auto restd = ad::mul_const(tape, ad::add_const(tape, by_name(var), level_stats(var, false)), level_stats(var, true));
    parts.push_back(restd);
  }
  auto back = ad::reshape(tape, ad::concat(tape, parts), {cfg.channels(), t_count});
  return ad::affine(tape, p(names::block(block, "align_out.weight")), p(names::block(block, "align_out.bias")), back);
}

ad::Var hybrid_block_forward(ad::Tape& tape, const BoundParams& p, const HybridModel& model, std::size_t block,
                             ad::Var latent, const ForwardOptions& options) {
  auto x_p = physics_branch(tape, p, model, block, latent, options);
  auto x_n = correction_branch(tape, p, block, latent);
  return route_fuse(tape, p, block, x_n, x_p).fused;
}

std::vector<std::size_t> normalize_taps(const ModelConfig& cfg, std::vector<std::size_t> taps) {
  if (taps.empty()) throw ValidationError("at least one tap is required");
  for (std::size_t t : taps) {
    if (t < 1 || t > cfg.blocks) {
      throw ValidationError("tap " + std::to_string(t) + " outside 1.." + std::to_string(cfg.blocks));
    }
  }
  std::sort(taps.begin(), taps.end());
  taps.erase(std::unique(taps.begin(), taps.end()), taps.end());
  return taps;
}

namespace {

Tensor standardized_input(const HybridModel& model, const WeatherState& input) {
  const ModelConfig& cfg = model.config();
  if (!(input.layout == cfg.layout())) throw ValidationError("input layout does not match the model layout");
  if (input.rows() != cfg.rows || input.cols() != cfg.cols) {
    throw ValidationError("input grid " + std::to_string(input.rows()) + "x" + std::to_string(input.cols()) +
                          " does not match the model grid " + std::to_string(cfg.rows) + "x" + std::to_string(cfg.cols));
  }
  return standardize(input, model.params().stats).values;
}

std::array<double, 2> router_values(const ad::Tape& tape, const BoundParams& p, std::size_t block) {
  const Tensor& r = tape.value(p(names::block(block, "router.r")));
  return {r[0], r[1]};
}

}  // namespace

TapedForward forward_taped(ad::Tape& tape, const BoundParams& p, const HybridModel& model, const WeatherState& input,
                           const std::vector<std::size_t>& taps, const ForwardOptions& options) {
  const ModelConfig& cfg = model.config();
  TapedForward out;
  out.taps = normalize_taps(cfg, taps);
  auto latent = encode(tape, p, cfg, standardized_input(model, input));
  std::size_t next = 0;
  for (std::size_t b = 1; b <= out.taps.back(); ++b) {
    latent = hybrid_block_forward(tape, p, model, b, latent, options);
    out.router.push_back(router_values(tape, p, b));
    if (out.taps[next] != b) continue;
    const double lead = cfg.lead_seconds(b);
    auto emb = embed_lead_time(tape, p(names::lead_w), lead / 3600.0);
    out.latents.push_back(latent);
    out.outputs.push_back(decode(tape, p, cfg, latent, emb));
    const auto& ev = tape.value(emb).storage();
    out.trace.push_back({b, lead, ev, tensor_hash(tape.value(latent))});
    ++next;
  }
  return out;
}

std::vector<double> embed_lead_time(double lead_seconds, std::span<const double> w) {
  if (!(lead_seconds >= 0.0)) throw ValidationError("lead time must be non-negative");
  const double hours = lead_seconds / 3600.0;
  std::vector<double> out(2 * w.size() + 1);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double a = std::numbers::pi * hours * w[i];
    out[i] = std::sin(a);
    out[w.size() + i] = std::cos(a);
  }
  out.back() = hours;
  return out;
}

Tensor encode_state(const HybridModel& model, const WeatherState& state) {
  ad::Tape tape;
  const auto p = bind_params(tape, model.params().arrays, false);
  return tape.value(encode(tape, p, model.config(), standardized_input(model, state)));
}

WeatherState decode_latent(const HybridModel& model, const Tensor& latent, std::span<const double> t_emb) {
  const ModelConfig& cfg = model.config();
  ad::Tape tape;
  const auto p = bind_params(tape, model.params().arrays, false);
  Tensor emb({t_emb.size()}, std::vector<double>(t_emb.begin(), t_emb.end()));
  auto out = decode(tape, p, cfg, tape.constant(latent), tape.constant(emb));
  std::optional<double> lead;
  if (!t_emb.empty()) lead = t_emb.back() * 3600.0;
  return destandardize(WeatherState(cfg.layout(), tape.value(out), lead), model.params().stats);
}

RouterOutputValues route_fuse_values(const HybridModel& model, std::size_t block, const Tensor& x_n, const Tensor& x_p) {
  ad::Tape tape;
  const auto p = bind_params(tape, model.params().arrays, false);
  const auto r = route_fuse(tape, p, block, tape.constant(x_n), tape.constant(x_p));
  return {tape.value(r.linear), tape.value(r.fused)};
}

Tensor block_forward_values(const HybridModel& model, std::size_t block, const Tensor& latent,
                            const ForwardOptions& options) {
  if (block < 1 || block > model.config().blocks) throw ValidationError("block index out of range");
  ad::Tape tape;
  const auto p = bind_params(tape, model.params().arrays, false);
  return tape.value(hybrid_block_forward(tape, p, model, block, tape.constant(latent), options));
}

const Forecast& ForecastBundle::at_block(std::size_t block) const {
  for (const auto& f : forecasts) {
    if (f.block == block) return f;
  }
  throw ValidationError("no forecast for block " + std::to_string(block));
}

Tensor latent_after(const HybridModel& model, const WeatherState& input, std::size_t n, const ForwardOptions& options) {
  if (n > model.config().blocks) throw ValidationError("block index out of range");
  Tensor latent = encode_state(model, input);
  for (std::size_t b = 1; b <= n; ++b) latent = block_forward_values(model, b, latent, options);
  return latent;
}

ForecastBundle model_forward(const HybridModel& model, const WeatherState& input, const std::vector<std::size_t>& taps,
                             const ForwardOptions& options) {
  // One tape per block keeps inference memory bounded by a single block.
  const ModelConfig& cfg = model.config();
  const auto sorted = normalize_taps(cfg, taps);
  const auto& w = model.params().arrays.at(names::lead_w).storage();
  ForecastBundle bundle;
  Tensor latent = encode_state(model, input);
  std::size_t next = 0;
  for (std::size_t b = 1; b <= sorted.back(); ++b) {
    latent = block_forward_values(model, b, latent, options);
    const Tensor& r = model.params().arrays.at(names::block(b, "router.r"));
    bundle.router.push_back({r[0], r[1]});
    if (sorted[next] != b) continue;
    const double lead = cfg.lead_seconds(b);
    auto emb = embed_lead_time(lead, w);
    WeatherState state = decode_latent(model, latent, emb);
    state.lead_seconds = lead;
    bundle.trace.push_back({b, lead, emb, tensor_hash(latent)});
    bundle.forecasts.push_back({b, lead, std::move(emb), std::move(state)});
    ++next;
  }
  return bundle;
}

std::uint64_t tensor_hash(const Tensor& t) {
  std::uint64_t h = 1469598103934665603ull;
  for (double v : t.values()) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  for (std::size_t d : t.shape()) {
    h ^= d;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace gft
