#include "gft/cli_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gft/error.hpp"

namespace gft {

using json = nlohmann::ordered_json;

namespace {

std::uint32_t crc32_of(const unsigned char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    out_.insert(out_.end(), c, c + n);
  }
  template <class U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
  }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void crc() { uint(crc32_of(out_.data(), out_.size())); }
  std::vector<unsigned char> take() { return std::move(out_); }

 private:
  std::vector<unsigned char> out_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<unsigned char>& b, const char* what) : b_(b), what_(what) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }

  void need(std::size_t n, FormatErrorKind kind) const {
    if (remaining() < n) throw FormatError(kind, std::string(what_) + ": truncated payload");
  }
  template <class U>
  U uint(FormatErrorKind kind = FormatErrorKind::truncated_payload) {
    need(sizeof(U), kind);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(b_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string text(std::size_t n) {
    need(n, FormatErrorKind::truncated_payload);
    std::string s(b_.begin() + static_cast<long>(pos_), b_.begin() + static_cast<long>(pos_ + n));
    pos_ += n;
    return s;
  }

 private:
  const std::vector<unsigned char>& b_;
  const char* what_;
  std::size_t pos_ = 0;
};

void check_crc(const std::vector<unsigned char>& bytes, std::size_t body_end, const char* what) {
  if (bytes.size() != body_end + 4) {
    if (bytes.size() < body_end + 4) throw FormatError(FormatErrorKind::truncated_payload, std::string(what) + ": truncated payload");
    throw FormatError(FormatErrorKind::malformed_header, std::string(what) + ": trailing bytes after checksum");
  }
  std::uint32_t stored = 0;
  for (std::size_t i = 0; i < 4; ++i) stored |= std::uint32_t(bytes[body_end + i]) << (8 * i);
  if (stored != crc32_of(bytes.data(), body_end)) {
    throw FormatError(FormatErrorKind::checksum_mismatch, std::string(what) + ": checksum mismatch");
  }
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += fmt(items[i]);
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

std::string describe_layout(const WeatherState& s) {
  const auto& lay = s.layout;
  std::ostringstream os;
  os << "surface=" << join(lay.surface_vars(), [](const std::string& v) { return v; }) << '\n';
  os << "upper=" << join(lay.upper_vars(), [](const std::string& v) { return v; }) << '\n';
  os << "levels_hpa=" << join(lay.pressure_levels(), fmt_double) << '\n';
  os << "registration=cell-centered\n";
  if (s.lead_seconds) os << "lead_seconds=" << fmt_double(*s.lead_seconds) << '\n';
  return os.str();
}

double parse_number(const std::string& s, const char* key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(FormatErrorKind::malformed_header, std::string("bad number for ") + key + ": '" + s + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<unsigned char> encode_gft(const WeatherState& state) {
  const std::size_t c = state.channels(), h = state.rows(), w = state.cols();
  if (c != state.layout.channel_count()) throw ValidationError("state does not match its layout");
  if (!state.values.all_finite()) throw ValidationError("refusing to write non-finite values");
  const std::string desc = describe_layout(state);
  ByteWriter out;
  out.bytes("GFT1", 4);
  out.uint<std::uint16_t>(kGridFileVersion);
  out.uint<std::uint32_t>(static_cast<std::uint32_t>(c));
  out.uint<std::uint32_t>(static_cast<std::uint32_t>(h));
  out.uint<std::uint32_t>(static_cast<std::uint32_t>(w));
  out.uint<std::uint32_t>(static_cast<std::uint32_t>(desc.size()));
  out.bytes(desc.data(), desc.size());
  for (double v : state.values.values()) out.f32(static_cast<float>(v));
  out.crc();
  return out.take();
}

WeatherState decode_gft(const std::vector<unsigned char>& bytes) {
  ByteReader r(bytes, "grid file");
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "GFT1", 4) != 0) {
    throw FormatError(FormatErrorKind::bad_magic, "grid file: bad magic (expected GFT1)");
  }
  r.text(4);
  const auto version = r.uint<std::uint16_t>();
  if (version != kGridFileVersion) {
    throw FormatError(FormatErrorKind::unsupported_version, "grid file: unsupported version " + std::to_string(version));
  }
  const std::size_t c = r.uint<std::uint32_t>(), h = r.uint<std::uint32_t>(), w = r.uint<std::uint32_t>();
  const std::size_t n = r.uint<std::uint32_t>();
  const std::string desc = r.text(n);
  const std::size_t payload = c * h * w * 4;
  check_crc(bytes, r.pos() + payload, "grid file");

  std::vector<std::string> surface, upper;
  std::vector<double> levels;
  std::optional<double> lead;
  bool have_surface = false, have_upper = false, have_levels = false;
  for (const auto& line : split(desc, '\n')) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(FormatErrorKind::malformed_header, "grid file: bad descriptor line '" + line + "'");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "surface") {
      surface = split(value, ',');
      have_surface = true;
    } else if (key == "upper") {
      upper = split(value, ',');
      have_upper = true;
    } else if (key == "levels_hpa") {
      for (const auto& s : split(value, ',')) levels.push_back(parse_number(s, "levels_hpa"));
      have_levels = true;
    } else if (key == "lead_seconds") {
      lead = parse_number(value, "lead_seconds");
    } else if (key == "registration") {
      if (value != "cell-centered") throw FormatError(FormatErrorKind::malformed_header, "grid file: unsupported registration " + value);
    }
  }
  if (!have_surface || !have_upper || !have_levels) {
    throw FormatError(FormatErrorKind::malformed_header, "grid file: descriptor lacks surface, upper or levels");
  }
  VariableLayout layout = [&] {
    try {
      return VariableLayout(surface, upper, levels);
    } catch (const ValidationError& e) {
      throw FormatError(FormatErrorKind::malformed_header, std::string("grid file: ") + e.what());
    }
  }();
  if (layout.channel_count() != c) {
    throw FormatError(FormatErrorKind::malformed_header, "grid file: channel count disagrees with descriptor");
  }
  Tensor values({c, h, w});
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(r.f32());
  return WeatherState(std::move(layout), std::move(values), lead);
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrorKind::io, "cannot open '" + path.string() + "'");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrorKind::io, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatErrorKind::io, "write failed for '" + path.string() + "'");
}

void write_gft(const WeatherState& state, const std::filesystem::path& path) { write_file(path, encode_gft(state)); }

WeatherState read_gft(const std::filesystem::path& path) { return decode_gft(read_file(path)); }

// ---------------------------------------------------------------------------
// JSON configuration.

namespace {

class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ValidationError(where_ + ": expected a JSON object");
  }
  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ValidationError(where_ + ": unknown key '" + key + "'");
    }
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ValidationError(where_ + "." + key + ": " + e.what());
    }
  }
  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::string integral_name(IntegralMode m) { return m == IntegralMode::unit ? "unit" : "weighted"; }
IntegralMode parse_integral(const std::string& s) {
  if (s == "unit") return IntegralMode::unit;
  if (s == "weighted") return IntegralMode::weighted;
  throw ValidationError("unknown integral mode '" + s + "'");
}
std::string temperature_name(TemperatureForm f) { return f == TemperatureForm::as_printed ? "as_printed" : "gas_law_alpha"; }
TemperatureForm parse_temperature(const std::string& s) {
  if (s == "as_printed") return TemperatureForm::as_printed;
  if (s == "gas_law_alpha") return TemperatureForm::gas_law_alpha;
  throw ValidationError("unknown temperature form '" + s + "'");
}
std::string init_name(InitScheme s) { return s == InitScheme::passthrough ? "passthrough" : "random"; }
InitScheme parse_init(const std::string& s) {
  if (s == "random") return InitScheme::random;
  if (s == "passthrough") return InitScheme::passthrough;
  throw ValidationError("unknown init scheme '" + s + "'");
}
std::string wind_name(WindProfile w) { return w == WindProfile::balanced ? "balanced" : "solid_body"; }
WindProfile parse_wind(const std::string& s) {
  if (s == "balanced") return WindProfile::balanced;
  if (s == "solid_body") return WindProfile::solid_body;
  throw ValidationError("unknown wind profile '" + s + "'");
}

json to_json(const ModelConfig& c) {
  return json{{"surface_vars", c.surface_vars},
              {"upper_vars", c.upper_vars},
              {"levels_hpa", c.levels_hpa},
              {"rows", c.rows},
              {"cols", c.cols},
              {"blocks", c.blocks},
              {"latent_dim", c.latent_dim},
              {"patch", c.patch},
              {"mlp_ratio", c.mlp_ratio},
              {"embedding_size", c.embedding_size},
              {"train_taps", c.train_taps},
              {"t_data", c.time.t_data},
              {"m", c.time.m},
              {"integral", integral_name(c.physics.integral)},
              {"temperature", temperature_name(c.physics.temperature)},
              {"init", init_name(c.init)},
              {"align_init_scale", c.align_init_scale},
              {"mlp_out_scale", c.mlp_out_scale},
              {"seed", c.seed}};
}

ModelConfig model_from_json(const json& j) {
  ModelConfig c;
  Fields f(j, "model");
  f.get("surface_vars", c.surface_vars);
  f.get("upper_vars", c.upper_vars);
  f.get("levels_hpa", c.levels_hpa);
  f.get("rows", c.rows);
  f.get("cols", c.cols);
  f.get("blocks", c.blocks);
  f.get("latent_dim", c.latent_dim);
  f.get("patch", c.patch);
  f.get("mlp_ratio", c.mlp_ratio);
  f.get("embedding_size", c.embedding_size);
  f.get("train_taps", c.train_taps);
  f.get("t_data", c.time.t_data);
  f.get("m", c.time.m);
  std::string s = integral_name(c.physics.integral);
  f.get("integral", s);
  c.physics.integral = parse_integral(s);
  s = temperature_name(c.physics.temperature);
  f.get("temperature", s);
  c.physics.temperature = parse_temperature(s);
  s = init_name(c.init);
  f.get("init", s);
  c.init = parse_init(s);
  f.get("align_init_scale", c.align_init_scale);
  f.get("mlp_out_scale", c.mlp_out_scale);
  f.get("seed", c.seed);
  f.finish();
  return c;
}

json to_json(const SyntheticConfig& c) {
  return json{{"kind", to_string(c.kind)},
              {"rows", c.rows},
              {"cols", c.cols},
              {"levels_hpa", c.levels_hpa},
              {"samples", c.samples},
              {"seed", c.seed},
              {"leads_seconds", c.leads_seconds},
              {"cells_per_hour", c.cells_per_hour},
              {"wavenumbers", c.wavenumbers},
              {"t_wave_amplitude", c.t_wave_amplitude},
              {"q_relative_amplitude", c.q_relative_amplitude},
              {"wind", wind_name(c.wind)},
              {"reference_substeps", c.reference_substeps},
              {"reference_t_s", c.reference_t_s}};
}

SyntheticConfig data_from_json(const json& j) {
  SyntheticConfig c;
  Fields f(j, "data");
  std::string s = to_string(c.kind);
  f.get("kind", s);
  c.kind = parse_synthetic_kind(s);
  f.get("rows", c.rows);
  f.get("cols", c.cols);
  f.get("levels_hpa", c.levels_hpa);
  f.get("samples", c.samples);
  f.get("seed", c.seed);
  f.get("leads_seconds", c.leads_seconds);
  f.get("cells_per_hour", c.cells_per_hour);
  f.get("wavenumbers", c.wavenumbers);
  f.get("t_wave_amplitude", c.t_wave_amplitude);
  f.get("q_relative_amplitude", c.q_relative_amplitude);
  s = wind_name(c.wind);
  f.get("wind", s);
  c.wind = parse_wind(s);
  f.get("reference_substeps", c.reference_substeps);
  f.get("reference_t_s", c.reference_t_s);
  f.finish();
  return c;
}

json to_json(const TrainConfig& c) {
  json scales = json::object();
  for (const auto& [k, v] : c.lr_scale) scales[k] = v;
  return json{{"lr0", c.lr0},
              {"schedule", c.schedule},
              {"steps", c.steps},
              {"batch_size", c.batch_size},
              {"momentum", c.momentum},
              {"seed", c.seed},
              {"taps", c.taps},
              {"tap_weights", c.tap_weights},
              {"lr_scale", scales},
              {"holdout_samples", c.holdout_samples},
              {"model", to_json(c.model)},
              {"data", to_json(c.data)}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  Fields f(j, "config");
  f.get("lr0", c.lr0);
  f.get("schedule", c.schedule);
  f.get("steps", c.steps);
  f.get("batch_size", c.batch_size);
  f.get("momentum", c.momentum);
  f.get("seed", c.seed);
  f.get("taps", c.taps);
  f.get("tap_weights", c.tap_weights);
  f.get("lr_scale", c.lr_scale);
  f.get("holdout_samples", c.holdout_samples);
  if (const json* m = f.sub("model")) c.model = model_from_json(*m);
  if (const json* d = f.sub("data")) c.data = data_from_json(*d);
  f.finish();
  return c;
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string model_config_json(const ModelConfig& cfg) { return to_json(cfg).dump(2); }
ModelConfig parse_model_config(const std::string& text) { return model_from_json(parse_json(text, "model config")); }
std::string train_config_json(const TrainConfig& cfg) { return to_json(cfg).dump(2); }
TrainConfig parse_train_config(const std::string& text) {
  TrainConfig c = train_from_json(parse_json(text, "training config"));
  c.validate();
  c.data.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Checkpoints.

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  const auto& p = ckpt.params;
  json arrays = json::array();
  std::size_t offset = 0;
  const auto entry = [&](const std::string& name, const Shape& shape, std::size_t size) {
    arrays.push_back(json{{"name", name}, {"shape", shape}, {"offset", offset}});
    offset += size;
  };
  for (const auto& name : p.arrays.names()) entry(name, p.arrays.at(name).shape(), p.arrays.at(name).size());
  entry("stats.mean", {p.stats.mean.size()}, p.stats.mean.size());
  entry("stats.std", {p.stats.std.size()}, p.stats.std.size());

  json header{{"engine_version", ckpt.engine_version},
              {"model", to_json(p.config)},
              {"arrays", arrays},
              {"payload_values", offset}};
  if (ckpt.train_config) header["train_config"] = to_json(*ckpt.train_config);
  const std::string text = header.dump();

  ByteWriter out;
  out.bytes("GFTC", 4);
  out.uint<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
  out.bytes(text.data(), text.size());
  for (const auto& name : p.arrays.names()) {
    for (double v : p.arrays.at(name).values()) out.f64(v);
  }
  for (double v : p.stats.mean) out.f64(v);
  for (double v : p.stats.std) out.f64(v);
  out.crc();
  return out.take();
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "GFTC", 4) != 0) {
    throw FormatError(FormatErrorKind::bad_magic, "checkpoint: bad magic (expected GFTC)");
  }
  ByteReader r(bytes, "checkpoint");
  r.text(4);
  const std::size_t n = r.uint<std::uint32_t>();
  const std::string text = r.text(n);
  json header;
  try {
    header = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(FormatErrorKind::malformed_header, std::string("checkpoint header: ") + e.what());
  }
  try {
    const std::size_t values = header.at("payload_values").get<std::size_t>();
    check_crc(bytes, r.pos() + values * 8, "checkpoint");

    Checkpoint ck;
    ck.engine_version = header.at("engine_version").get<std::string>();
    ck.params.config = model_from_json(header.at("model"));
    if (header.contains("train_config")) ck.train_config = train_from_json(header.at("train_config"));
    const std::size_t base = r.pos();
    for (const auto& a : header.at("arrays")) {
      const auto name = a.at("name").get<std::string>();
      const auto shape = a.at("shape").get<Shape>();
      Tensor t(shape);
      const auto offset = a.at("offset").get<std::size_t>();
      if (base + offset * 8 != r.pos() || offset + t.size() > values) {
        throw FormatError(FormatErrorKind::malformed_header, "checkpoint: array offset out of range");
      }
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.f64();
      if (name == "stats.mean") {
        ck.params.stats.mean = t.storage();
      } else if (name == "stats.std") {
        ck.params.stats.std = t.storage();
      } else {
        ck.params.arrays.add(name, std::move(t));
      }
    }
    return ck;
  } catch (const json::exception& e) {
    throw FormatError(FormatErrorKind::malformed_header, std::string("checkpoint header: ") + e.what());
  } catch (const ValidationError& e) {
    throw FormatError(FormatErrorKind::malformed_header, std::string("checkpoint header: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

// ---------------------------------------------------------------------------
// Heatmaps.

Palette parse_palette(const std::string& name) {
  if (name == "gray") return Palette::gray;
  if (name == "heat") return Palette::heat;
  if (name == "viridis") return Palette::viridis;
  throw ValidationError("unknown palette '" + name + "' (gray, heat, viridis)");
}

std::string to_string(Palette p) {
  switch (p) {
    case Palette::gray: return "gray";
    case Palette::heat: return "heat";
    case Palette::viridis: return "viridis";
  }
  return "unknown";
}

std::array<unsigned char, 3> palette_color(Palette palette, double t) {
  using Stop = std::array<double, 3>;
  static const std::vector<Stop> gray = {{0, 0, 0}, {255, 255, 255}};
  static const std::vector<Stop> heat = {{33, 102, 172}, {247, 247, 247}, {178, 24, 43}};
  static const std::vector<Stop> viridis = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  const auto& stops = palette == Palette::gray ? gray : palette == Palette::heat ? heat : viridis;
  t = std::clamp(t, 0.0, 1.0);
  const double x = t * double(stops.size() - 1);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(x), stops.size() - 2);
  const double a = x - double(i);
  std::array<unsigned char, 3> rgb{};
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<unsigned char>(std::lround(stops[i][c] + a * (stops[i + 1][c] - stops[i][c])));
  }
  return rgb;
}

HeatmapInfo export_heatmap(const Tensor& field, const std::filesystem::path& path, Palette palette) {
  if (field.rank() != 2 || field.empty()) throw ValidationError("heatmap needs a non-empty H x W field");
  if (!field.all_finite()) throw ValidationError("heatmap field has non-finite values");
  const std::size_t h = field.dim(0), w = field.dim(1);
  HeatmapInfo info;
  const auto [lo, hi] = std::minmax_element(field.values().begin(), field.values().end());
  info.min = *lo;
  info.max = *hi;
  info.degenerate = !(info.max > info.min);

  std::string head = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<unsigned char> bytes(head.begin(), head.end());
  bytes.reserve(bytes.size() + h * w * 3);
  for (std::size_t i = 0; i < h * w; ++i) {
    const double t = info.degenerate ? 0.5 : (field[i] - info.min) / (info.max - info.min);
    const auto rgb = palette_color(palette, t);
    bytes.insert(bytes.end(), rgb.begin(), rgb.end());
  }
  write_file(path, bytes);

  std::ostringstream side;
  side << "min=" << fmt_double(info.min) << "\nmax=" << fmt_double(info.max) << "\npalette=" << to_string(palette)
       << "\nrows=" << h << "\ncols=" << w << '\n';
  if (info.degenerate) side << "note=degenerate range, uniform mid color\n";
  const std::string s = side.str();
  auto sidecar = path;
  sidecar += ".txt";
  write_file(sidecar, std::vector<unsigned char>(s.begin(), s.end()));
  return info;
}

// ---------------------------------------------------------------------------

double parse_lead(const std::string& text) {
  static const std::regex re(R"(^([0-9]+)(m|min|h)$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) {
    throw ValidationError("bad lead time '" + text + "' (expected e.g. 30m, 45min or 6h)");
  }
  const double n = std::stod(m[1].str());
  if (n <= 0) throw ValidationError("lead time must be positive");
  return m[2].str() == "h" ? n * 3600.0 : n * 60.0;
}

std::size_t lead_to_block(double lead_seconds, const ModelConfig& cfg) {
  const double tb = cfg.time.t_block();
  const double k = lead_seconds / tb;
  if (!(lead_seconds > 0.0) || std::abs(k - std::round(k)) > 1e-9) {
    throw ValidationError("lead time " + fmt_double(lead_seconds / 60.0) + " min is not a multiple of t_block (" +
                          fmt_double(tb / 60.0) + " min)");
  }
  const auto block = static_cast<std::size_t>(std::llround(k));
  if (block > cfg.blocks) {
    throw ValidationError("lead time needs block " + std::to_string(block) + " but the model has " +
                          std::to_string(cfg.blocks));
  }
  return block;
}

}  // namespace gft
