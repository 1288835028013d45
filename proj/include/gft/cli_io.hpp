#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gft/grid_state.hpp"
#include "gft/hybrid_net.hpp"
#include "gft/training.hpp"

namespace gft {

inline constexpr const char* kEngineVersion = "0.1.0";

// ---------------------------------------------------------------------------
// GFT1 grid files.
//
//   "GFT1" | u16 version | u32 C | u32 H | u32 W | u32 n | n bytes descriptor
//   | C*H*W f32 payload | u32 CRC-32 of everything before it
//
// Integers and floats are little-endian. The descriptor is UTF-8 text with
// one key=value per line.

inline constexpr std::uint16_t kGridFileVersion = 1;

std::vector<unsigned char> encode_gft(const WeatherState& state);
WeatherState decode_gft(const std::vector<unsigned char>& bytes);

void write_gft(const WeatherState& state, const std::filesystem::path& path);
WeatherState read_gft(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Checkpoints: "GFTC" | u32 n | n bytes JSON header | f64 payload | u32 CRC-32.
// The header names every array with its shape and payload offset.

struct Checkpoint {
  std::string engine_version = kEngineVersion;
  ModelParams params;
  std::optional<TrainConfig> train_config;
};

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// JSON views of the configuration types. Missing keys keep their defaults;
// unknown keys are rejected.

std::string model_config_json(const ModelConfig& cfg);
ModelConfig parse_model_config(const std::string& json);
std::string train_config_json(const TrainConfig& cfg);
TrainConfig parse_train_config(const std::string& json);

// ---------------------------------------------------------------------------
// Heatmaps.

enum class Palette { gray, heat, viridis };
Palette parse_palette(const std::string& name);
std::string to_string(Palette p);

struct HeatmapInfo {
  double min = 0.0;
  double max = 0.0;
  bool degenerate = false;
};

/// Binary P6 image of an H x W field (row 0 at the top) with a linear min-max
/// mapping, plus `<path>.txt` recording the range.
HeatmapInfo export_heatmap(const Tensor& field, const std::filesystem::path& path, Palette palette = Palette::viridis);

/// RGB of a normalized value in [0, 1].
std::array<unsigned char, 3> palette_color(Palette palette, double t);

// ---------------------------------------------------------------------------
// Lead-time grammar: "<n>m", "<n>min" or "<n>h" with a positive integer n.

double parse_lead(const std::string& text);
/// Block index for a lead; rejects leads that are not whole multiples of t_block.
std::size_t lead_to_block(double lead_seconds, const ModelConfig& cfg);

std::vector<unsigned char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

}  // namespace gft
