#include "lfin/io.hpp"

#include <png.h>
#include <zlib.h>

#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <regex>
#include <set>
#include <sstream>

namespace lfin {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- PNG

RgbImage read_png(const fs::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw LoadError("cannot open '" + path.string() + "'");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw LoadError("'" + path.string() + "' is not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw LoadError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw LoadError("corrupt PNG '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_png(png, info, PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_STRIP_ALPHA | PNG_TRANSFORM_GRAY_TO_RGB, nullptr);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int channels = png_get_channels(png, info);
  png_bytepp rows = png_get_rows(png, info);

  RgbImage out{Image(h, w), Image(h, w), Image(h, w)};
  Image* planes[3] = {&out.r, &out.g, &out.b};
  const bool ok = channels == 3 && (depth == 8 || depth == 16);
  if (ok) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) {
          const int i = x * 3 + c;
          const float val = depth == 8 ? rows[y][i] / 255.0f
                                       : ((rows[y][2 * i] << 8) | rows[y][2 * i + 1]) / 65535.0f;
          planes[c]->at(y, x) = val;
        }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) throw LoadError("unsupported PNG pixel format in '" + path.string() + "'");
  return out;
}

void write_png(const fs::path& path, const RgbImage& img) {
  const int h = img.r.rows, w = img.r.cols;
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(h) * w * 3);
  const Image* planes[3] = {&img.r, &img.g, &img.b};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(planes[c]->at(y, x), 0.0f, 1.0f);
        buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(w);
  pi.height = static_cast<png_uint_32>(h);
  pi.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&pi, path.c_str(), 0, buf.data(), 0, nullptr))
    throw LoadError("cannot write '" + path.string() + "': " + pi.message);
}

// ---------------------------------------------------------------- scenes

Layout parse_layout(const std::string& s) {
  if (s == "views-dir") return Layout::views_dir;
  if (s == "sai-grid") return Layout::sai_grid;
  if (s == "macpi") return Layout::macpi;
  throw ConfigError("unknown layout '" + s + "'");
}

std::string to_string(Layout l) {
  switch (l) {
    case Layout::views_dir: return "views-dir";
    case Layout::sai_grid: return "sai-grid";
    case Layout::macpi: return "macpi";
  }
  return "?";
}

std::string view_file_name(int u, int v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "view_%02d_%02d.png", u + 1, v + 1);
  return buf;
}

Scene make_scene(std::array<LightField, 3> rgb) {
  const auto& r = rgb[0];
  LightField y(r.ang_res(), r.height(), r.width());
  for (int u = 0; u < r.ang_res(); ++u)
    for (int v = 0; v < r.ang_res(); ++v)
      set_view(y, u, v, rgb_to_y({extract_view(rgb[0], u, v), extract_view(rgb[1], u, v), extract_view(rgb[2], u, v)}));
  return Scene{std::move(rgb), std::move(y)};
}

Scene crop_scene_angular(const Scene& s, int ang_res) {
  return Scene{{center_crop_angular(s.rgb[0], ang_res), center_crop_angular(s.rgb[1], ang_res),
                center_crop_angular(s.rgb[2], ang_res)},
               center_crop_angular(s.y, ang_res)};
}

Scene resize_scene(const Scene& s, Scale scale) {
  return make_scene({resize_views(s.rgb[0], scale), resize_views(s.rgb[1], scale), resize_views(s.rgb[2], scale)});
}

namespace {

Scene load_views_dir(const SceneSource& src) {
  if (!fs::is_directory(src.path)) throw LoadError("'" + src.path.string() + "' is not a directory");
  static const std::regex pattern(R"(view_(\d+)_(\d+)\.png)");
  std::set<std::pair<int, int>> found;
  for (const auto& e : fs::directory_iterator(src.path)) {
    std::smatch m;
    const std::string name = e.path().filename().string();
    if (std::regex_match(name, m, pattern)) found.emplace(std::stoi(m[1]), std::stoi(m[2]));
  }
  if (found.empty()) throw LoadError("no view_UU_VV.png files in '" + src.path.string() + "'");
  const int a = static_cast<int>(std::lround(std::sqrt(static_cast<double>(found.size()))));
  if (a * a != static_cast<int>(found.size()))
    throw LoadError(std::to_string(found.size()) + " view files in '" + src.path.string() + "' is not a square count");
  if (src.ang_res != 0 && src.ang_res != a)
    throw LoadError("declared A=" + std::to_string(src.ang_res) + " but '" + src.path.string() + "' holds " +
                    std::to_string(found.size()) + " views");

  std::array<LightField, 3> rgb;
  for (int u = 0; u < a; ++u)
    for (int v = 0; v < a; ++v) {
      const fs::path file = src.path / view_file_name(u, v);
      if (!found.count({u + 1, v + 1})) throw LoadError("missing view file '" + file.string() + "'");
      const RgbImage img = read_png(file);
      if (u == 0 && v == 0)
        for (auto& lf : rgb) lf = LightField(a, img.r.rows, img.r.cols);
      if (img.r.rows != rgb[0].height() || img.r.cols != rgb[0].width())
        throw LoadError("view '" + file.string() + "' differs in size from view_01_01.png");
      set_view(rgb[0], u, v, img.r);
      set_view(rgb[1], u, v, img.g);
      set_view(rgb[2], u, v, img.b);
    }
  return make_scene(std::move(rgb));
}

Scene load_single_image(const SceneSource& src) {
  if (src.ang_res < 1)
    throw LoadError("angular resolution must be given for " + to_string(src.layout) + " input '" +
                    src.path.string() + "'");
  const RgbImage img = read_png(src.path);
  std::array<LightField, 3> rgb;
  const Image* planes[3] = {&img.r, &img.g, &img.b};
  for (int c = 0; c < 3; ++c)
    rgb[c] = src.layout == Layout::sai_grid ? sai_array_to_lf(as_sai_array(*planes[c], src.ang_res))
                                            : macpi_to_lf(as_macpi(*planes[c], src.ang_res));
  return make_scene(std::move(rgb));
}

}  // namespace

Scene load_scene(const SceneSource& src) {
  if (src.layout == Layout::views_dir) return load_views_dir(src);
  return load_single_image(src);
}

void save_scene(const Scene& scene, const fs::path& path, Layout layout) {
  const auto& r = scene.rgb[0];
  if (layout == Layout::views_dir) {
    fs::create_directories(path);
    for (int u = 0; u < r.ang_res(); ++u)
      for (int v = 0; v < r.ang_res(); ++v)
        write_png(path / view_file_name(u, v), {extract_view(scene.rgb[0], u, v), extract_view(scene.rgb[1], u, v),
                                                 extract_view(scene.rgb[2], u, v)});
    return;
  }
  RgbImage img;
  Image* planes[3] = {&img.r, &img.g, &img.b};
  for (int c = 0; c < 3; ++c)
    *planes[c] = layout == Layout::sai_grid ? lf_to_sai_array(scene.rgb[c]).image : lf_to_macpi(scene.rgb[c]).image;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_png(path, img);
}

std::vector<DatasetEntry> list_dataset(const fs::path& dir, int grid_ang_res) {
  if (!fs::is_directory(dir)) throw LoadError("dataset '" + dir.string() + "' is not a directory");
  std::vector<DatasetEntry> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory())
      out.push_back({e.path().filename().string(), {e.path(), Layout::views_dir, 0}});
    else if (e.path().extension() == ".png")
      out.push_back({e.path().stem().string(), {e.path(), Layout::sai_grid, grid_ang_res}});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  if (out.empty()) throw LoadError("dataset '" + dir.string() + "' contains no scenes");
  return out;
}

// ---------------------------------------------------------------- weights

namespace {

constexpr char kMagic[4] = {'L', 'F', 'I', 'N'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}
  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    const auto* b = take(2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    const auto* b = take(4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    const auto* b = take(n);
    return std::string(reinterpret_cast<const char*>(b), n);
  }
  std::size_t remaining() const { return n_ - pos_; }

 private:
  const std::uint8_t* take(std::size_t k) {
    if (pos_ + k > n_) throw FormatError("truncated", "weight file ends early");
    const auto* b = p_ + pos_;
    pos_ += k;
    return b;
  }
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* p, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), p, static_cast<uInt>(n)));
}

void write_tensor(Writer& w, const std::string& name, const Tensor<float>& t) {
  w.u16(static_cast<std::uint16_t>(name.size()));
  w.bytes(name.data(), name.size());
  w.u8(static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.dims()) w.u32(static_cast<std::uint32_t>(d));
  for (float v : t.values()) w.f32(v);
}

}  // namespace

std::vector<std::uint8_t> encode_weights(const NetConfig& cfg, const ModelParams<float>& params) {
  check_params(params, cfg);
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  for (int v : {cfg.n_groups, cfg.blocks_per_group, cfg.channels, cfg.ang_res, cfg.scale}) {
    if (v > 0xFFFF) throw ConfigError("config value exceeds u16 range");
    w.u16(static_cast<std::uint16_t>(v));
  }
  w.u8(static_cast<std::uint8_t>(cfg.variant));
  w.u8(static_cast<std::uint8_t>(cfg.ang_upsample));
  w.u32(static_cast<std::uint32_t>(params.size() * 2));
  for (const auto& [name, layer] : params) {
    write_tensor(w, name + ".weight", layer.kernel);
    write_tensor(w, name + ".bias", layer.bias);
  }
  auto& buf = w.buffer();
  const std::uint32_t crc = crc_of(buf.data(), buf.size());
  w.u32(crc);
  return std::move(buf);
}

WeightFile decode_weights(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8) throw FormatError("truncated", "weight file too short");
  if (!std::equal(kMagic, kMagic + 4, bytes.begin())) throw FormatError("magic", "not an LFIN weight file");
  Reader header(bytes.data() + 4, 4);
  const std::uint32_t version = header.u32();
  if (version != kVersion) throw FormatError("version", "unsupported weight file version " + std::to_string(version));
  if (bytes.size() < 12) throw FormatError("truncated", "weight file too short");
  Reader crc_reader(bytes.data() + bytes.size() - 4, 4);
  if (crc_reader.u32() != crc_of(bytes.data(), bytes.size() - 4))
    throw FormatError("crc", "weight file checksum mismatch");

  Reader r(bytes.data() + 8, bytes.size() - 12);
  WeightFile out;
  auto& cfg = out.config;
  cfg.n_groups = r.u16();
  cfg.blocks_per_group = r.u16();
  cfg.channels = r.u16();
  cfg.ang_res = r.u16();
  cfg.scale = r.u16();
  const std::uint8_t variant = r.u8(), upsample = r.u8();
  if (variant > 2 || upsample > 2) throw FormatError("format", "unknown variant/upsampling code");
  cfg.variant = static_cast<Variant>(variant);
  cfg.ang_upsample = static_cast<AngUpsample>(upsample);

  const std::uint32_t count = r.u32();
  std::map<std::string, Tensor<float>> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str(r.u16());
    const std::uint8_t ndims = r.u8();
    std::vector<std::size_t> dims(ndims);
    for (auto& d : dims) d = r.u32();
    Tensor<float> t(dims);
    if (t.size() * 4 > r.remaining()) throw FormatError("truncated", "tensor '" + name + "' payload truncated");
    for (auto& v : t.values()) v = r.f32();
    if (!tensors.emplace(name, std::move(t)).second) throw FormatError("format", "duplicate tensor '" + name + "'");
  }
  if (r.remaining() != 0) throw FormatError("format", "trailing bytes after tensors");

  // Groups without interaction carry no afe layers.
  if (cfg.variant != Variant::spatial_only) {
    cfg.interactions.assign(cfg.n_groups, true);
    bool all = true;
    for (int g = 1; g <= cfg.n_groups; ++g) {
      cfg.interactions[g - 1] = tensors.count("g" + std::to_string(g) + ".b1.afe.weight") > 0;
      all = all && cfg.interactions[g - 1];
    }
    if (all) cfg.interactions.clear();
  }
  cfg.validate();

  for (const auto& spec : layer_specs(cfg)) {
    auto kw = tensors.find(spec.name + ".weight");
    auto kb = tensors.find(spec.name + ".bias");
    if (kw == tensors.end() || kb == tensors.end())
      throw ShapeError("weight file lacks layer '" + spec.name + "'");
    out.params.emplace(spec.name, ConvWeights<float>{std::move(kw->second), std::move(kb->second), spec.geometry});
    tensors.erase(kw);
    tensors.erase(spec.name + ".bias");
  }
  if (!tensors.empty()) throw ShapeError("weight file has unexpected tensor '" + tensors.begin()->first + "'");
  check_params(out.params, cfg);
  return out;
}

void save_weights(const fs::path& path, const NetConfig& cfg, const ModelParams<float>& params) {
  const auto bytes = encode_weights(cfg, params);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot write '" + path.string() + "'");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw LoadError("write failed for '" + path.string() + "'");
}

WeightFile load_weights(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

WeightFile load_weights(const fs::path& path, const NetConfig& expected) {
  WeightFile wf = load_weights(path);
  const auto& c = wf.config;
  auto mismatch = [&](const char* what, int file, int want) {
    throw ShapeError(std::string("weight file has ") + what + "=" + std::to_string(file) + ", requested " +
                     std::to_string(want));
  };
  if (c.n_groups != expected.n_groups) mismatch("N", c.n_groups, expected.n_groups);
  if (c.blocks_per_group != expected.blocks_per_group) mismatch("K", c.blocks_per_group, expected.blocks_per_group);
  if (c.channels != expected.channels) mismatch("C", c.channels, expected.channels);
  if (c.ang_res != expected.ang_res) mismatch("A", c.ang_res, expected.ang_res);
  if (c.scale != expected.scale) mismatch("scale", c.scale, expected.scale);
  if (c.variant != expected.variant || c.ang_upsample != expected.ang_upsample)
    throw ShapeError("weight file variant/upsampling differs from the requested config");
  check_params(wf.params, expected);
  wf.config.block_relu = expected.block_relu;
  return wf;
}

// ---------------------------------------------------------------- config

namespace {

int parse_positive(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size() || v < 1) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' needs a positive integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw ConfigError("'" + key + "' needs a boolean, got '" + value + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

void apply_config_setting(NetConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "n") cfg.n_groups = parse_positive(key, value);
  else if (key == "k") cfg.blocks_per_group = parse_positive(key, value);
  else if (key == "c") cfg.channels = parse_positive(key, value);
  else if (key == "angres") cfg.ang_res = parse_positive(key, value);
  else if (key == "scale") cfg.scale = parse_positive(key, value);
  else if (key == "variant") cfg.variant = parse_variant(value);
  else if (key == "ang_upsample" || key == "ang-upsample") cfg.ang_upsample = parse_ang_upsample(value);
  else if (key == "block_relu" || key == "block-relu") cfg.block_relu = parse_bool(key, value);
  else if (key == "interactions") {
    cfg.interactions.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) cfg.interactions.push_back(parse_bool(key, trim(item)));
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

NetConfig read_config_file(const fs::path& path, NetConfig base) {
  std::ifstream f(path);
  if (!f) throw LoadError("cannot open config file '" + path.string() + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    apply_config_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  base.validate();
  return base;
}

}  // namespace lfin
