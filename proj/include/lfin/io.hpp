#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lfin/image_ops.hpp"
#include "lfin/model.hpp"

namespace lfin {

// ---- images ----

/// Reads an 8- or 16-bit PNG (gray, gray+alpha, RGB, RGBA) into [0, 1] planes.
/// Gray is replicated to all three planes; alpha is dropped.
RgbImage read_png(const std::filesystem::path& path);
/// Writes an 8-bit RGB PNG; values are clamped to [0, 1] and rounded.
void write_png(const std::filesystem::path& path, const RgbImage& img);

// ---- scenes ----

enum class Layout { views_dir, sai_grid, macpi };
Layout parse_layout(const std::string& s);
std::string to_string(Layout l);

struct SceneSource {
  std::filesystem::path path;
  Layout layout = Layout::views_dir;
  /// Views per angular axis; 0 means infer (views-dir only).
  int ang_res = 0;
};

/// Colour light field with its Y channel.
struct Scene {
  std::array<LightField, 3> rgb;
  LightField y;
};

/// views-dir: exactly A^2 files view_UU_VV.png (1-based, zero-padded).
/// Throws LoadError on missing views, inconsistent sizes or a declared A that
/// disagrees with the files; ShapeError when extents are not divisible by A.
Scene load_scene(const SceneSource& src);
void save_scene(const Scene& scene, const std::filesystem::path& path, Layout layout);
std::string view_file_name(int u, int v);  // 0-based in, 1-based in the name

Scene make_scene(std::array<LightField, 3> rgb);
Scene crop_scene_angular(const Scene& s, int ang_res);
Scene resize_scene(const Scene& s, Scale scale);

struct DatasetEntry {
  std::string name;
  SceneSource source;
};
/// Sub-directories are views-dir scenes; *.png files are sai-grid scenes with
/// `grid_ang_res` views per axis. Sorted by name.
std::vector<DatasetEntry> list_dataset(const std::filesystem::path& dir, int grid_ang_res);

// ---- weights ----

struct WeightFile {
  NetConfig config;
  ModelParams<float> params;
};

std::vector<std::uint8_t> encode_weights(const NetConfig& cfg, const ModelParams<float>& params);
/// Throws FormatError ("magic", "version", "crc", "truncated", "format")
/// or ShapeError when tensors disagree with the embedded config.
WeightFile decode_weights(const std::vector<std::uint8_t>& bytes);

void save_weights(const std::filesystem::path& path, const NetConfig& cfg, const ModelParams<float>& params);
WeightFile load_weights(const std::filesystem::path& path);
/// Also requires the file's architecture to equal `expected` (ShapeError otherwise).
WeightFile load_weights(const std::filesystem::path& path, const NetConfig& expected);

// ---- config ----

/// Applies one key=value setting (n, k, c, angres, scale, variant,
/// ang_upsample, interactions, block_relu). Throws ConfigError.
void apply_config_setting(NetConfig& cfg, const std::string& key, const std::string& value);
/// Reads `key=value` lines; '#' starts a comment.
NetConfig read_config_file(const std::filesystem::path& path, NetConfig base = {});

}  // namespace lfin
