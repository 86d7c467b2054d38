#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include <zlib.h>

#include "lfin/errors.hpp"
#include "lfin/io.hpp"
#include "test_support.hpp"

using namespace lfin;
using namespace lfin::test;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("lfin_io_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Random 8-bit content so PNG quantization is lossless.
std::array<LightField, 3> quantized_rgb(int a, int h, int w, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, 255);
  std::array<LightField, 3> rgb{LightField(a, h, w), LightField(a, h, w), LightField(a, h, w)};
  for (auto& p : rgb)
    for (auto& x : p.data()) x = static_cast<float>(d(rng)) / 255.0f;
  return rgb;
}

NetConfig small_net() {
  NetConfig c;
  c.n_groups = 2;
  c.blocks_per_group = 1;
  c.channels = 3;
  c.ang_res = 5;
  c.scale = 2;
  return c;
}

int error_kind(const std::vector<std::uint8_t>& bytes, std::string& kind) {
  try {
    decode_weights(bytes);
  } catch (const Error& e) {
    kind = e.kind();
    return 1;
  }
  return 0;
}

}  // namespace

TEST_CASE("PNG round trip at 8 bits") {
  TempDir tmp;
  std::mt19937_64 rng(1);
  const auto rgb = quantized_rgb(1, 7, 9, rng);
  const RgbImage img{extract_view(rgb[0], 0, 0), extract_view(rgb[1], 0, 0), extract_view(rgb[2], 0, 0)};
  write_png(tmp.path / "a.png", img);
  const auto back = read_png(tmp.path / "a.png");
  CHECK(back.r == img.r);
  CHECK(back.g == img.g);
  CHECK(back.b == img.b);
  CHECK_THROWS_AS(read_png(tmp.path / "missing.png"), LoadError);
}

TEST_CASE("views-dir scene round trip is bit-exact") {
  TempDir tmp;
  std::mt19937_64 rng(2);
  const auto scene = make_scene(quantized_rgb(3, 6, 8, rng));
  save_scene(scene, tmp.path / "scene", Layout::views_dir);
  CHECK(fs::exists(tmp.path / "scene" / "view_01_01.png"));
  CHECK(fs::exists(tmp.path / "scene" / "view_03_02.png"));
  const auto back = load_scene({tmp.path / "scene", Layout::views_dir, 0});
  for (int c = 0; c < 3; ++c) CHECK(back.rgb[c].data() == scene.rgb[c].data());
  CHECK(back.y.data() == scene.y.data());
  CHECK(view_file_name(0, 11) == "view_01_12.png");

  // a declared A that disagrees with the files
  CHECK_THROWS_AS(load_scene({tmp.path / "scene", Layout::views_dir, 2}), LoadError);
  // a missing view
  fs::remove(tmp.path / "scene" / "view_02_02.png");
  CHECK_THROWS_AS(load_scene({tmp.path / "scene", Layout::views_dir, 3}), LoadError);
}

TEST_CASE("views-dir with inconsistent view sizes") {
  TempDir tmp;
  std::mt19937_64 rng(3);
  save_scene(make_scene(quantized_rgb(2, 4, 4, rng)), tmp.path / "s", Layout::views_dir);
  write_png(tmp.path / "s" / "view_02_01.png", RgbImage{Image(5, 4), Image(5, 4), Image(5, 4)});
  CHECK_THROWS_AS(load_scene({tmp.path / "s", Layout::views_dir, 0}), LoadError);
}

TEST_CASE("sai-grid and macpi layouts") {
  TempDir tmp;
  // constant-view example: view (u, v) holds 10u + v grey levels
  const auto lf = constant_view_lf(2, 3, 4);
  LightField scaled = lf;
  for (auto& x : scaled.data()) x /= 255.0f;
  const auto grid = lf_to_sai_array(scaled);
  write_png(tmp.path / "grid.png", RgbImage{grid.image, grid.image, grid.image});
  const auto s = load_scene({tmp.path / "grid.png", Layout::sai_grid, 2});
  CHECK(s.rgb[0].data() == scaled.data());
  CHECK(s.rgb[0].at(1, 0, 2, 3) == 21.0f / 255.0f);
  CHECK_THROWS_AS(load_scene({tmp.path / "grid.png", Layout::sai_grid, 4}), ShapeError);
  CHECK_THROWS(load_scene({tmp.path / "grid.png", Layout::sai_grid, 0}));

  std::mt19937_64 rng(4);
  const auto scene = make_scene(quantized_rgb(3, 4, 5, rng));
  for (Layout l : {Layout::sai_grid, Layout::macpi}) {
    const auto p = tmp.path / ("x_" + to_string(l) + ".png");
    save_scene(scene, p, l);
    const auto back = load_scene({p, l, 3});
    for (int c = 0; c < 3; ++c) CHECK(back.rgb[c].data() == scene.rgb[c].data());
  }
  CHECK(parse_layout("views-dir") == Layout::views_dir);
  CHECK_THROWS_AS(parse_layout("lenslet"), ConfigError);
}

TEST_CASE("angular crop and dataset listing") {
  TempDir tmp;
  std::mt19937_64 rng(5);
  const auto scene = make_scene(quantized_rgb(5, 4, 4, rng));
  const auto c = crop_scene_angular(scene, 3);
  CHECK(c.y.ang_res() == 3);
  CHECK(extract_view(c.y, 0, 0) == extract_view(scene.y, 1, 1));

  save_scene(scene, tmp.path / "b_scene", Layout::views_dir);
  save_scene(scene, tmp.path / "a_grid.png", Layout::sai_grid);
  std::ofstream(tmp.path / "notes.txt") << "ignored";
  const auto entries = list_dataset(tmp.path, 5);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].name == "a_grid");
  CHECK(entries[0].source.layout == Layout::sai_grid);
  CHECK(entries[1].name == "b_scene");
  CHECK(entries[1].source.layout == Layout::views_dir);
}

TEST_CASE("weight file round trip") {
  TempDir tmp;
  NetConfig cfg = small_net();
  cfg.variant = Variant::full;
  cfg.ang_upsample = AngUpsample::bilinear;
  cfg.interactions = {true, false};
  const auto params = init_params(cfg, 3);
  save_weights(tmp.path / "w.lfin", cfg, params);
  const auto wf = load_weights(tmp.path / "w.lfin");
  CHECK(wf.config.n_groups == 2);
  CHECK(wf.config.ang_upsample == AngUpsample::bilinear);
  CHECK(wf.config.interaction_enabled(1));
  CHECK_FALSE(wf.config.interaction_enabled(2));
  REQUIRE(wf.params.size() == params.size());
  for (const auto& [name, w] : params) {
    CHECK(wf.params.at(name).kernel == w.kernel);
    CHECK(wf.params.at(name).bias == w.bias);
  }
  CHECK(encode_weights(wf.config, wf.params) == encode_weights(cfg, params));
}

TEST_CASE("weight file error kinds") {
  const NetConfig cfg = small_net();
  const auto bytes = encode_weights(cfg, init_params(cfg, 4));
  std::string kind;

  auto bad = bytes;
  bad[bytes.size() / 2] ^= 0x40;
  CHECK(error_kind(bad, kind) == 1);
  CHECK(kind == "crc");

  bad = bytes;
  bad[0] = 'X';
  CHECK(error_kind(bad, kind) == 1);
  CHECK(kind == "magic");

  bad = bytes;
  bad[4] = 2;
  CHECK(error_kind(bad, kind) == 1);
  CHECK(kind == "version");

  bad.assign(bytes.begin(), bytes.begin() + 10);
  CHECK(error_kind(bad, kind) == 1);
  CHECK(kind == "truncated");

  // tensors that disagree with the embedded config
  // (header: magic 4, version 4, N 2, K 2, then C as u16 at offset 12)
  auto mixed = bytes;
  mixed[12] = 4;
  const uLong crc = crc32(0L, mixed.data(), static_cast<uInt>(mixed.size() - 4));
  for (int i = 0; i < 4; ++i) mixed[mixed.size() - 4 + i] = static_cast<std::uint8_t>(crc >> (8 * i));
  CHECK(error_kind(mixed, kind) == 1);
  CHECK(kind == "shape");
}

TEST_CASE("loading against an expected architecture") {
  TempDir tmp;
  const NetConfig cfg = small_net();
  save_weights(tmp.path / "w.lfin", cfg, init_params(cfg, 5));
  CHECK_NOTHROW(load_weights(tmp.path / "w.lfin", cfg));
  NetConfig want = cfg;
  want.ang_res = 3;
  CHECK_THROWS_AS(load_weights(tmp.path / "w.lfin", want), ShapeError);
  CHECK_THROWS_AS(load_weights(tmp.path / "none.lfin"), LoadError);
}

TEST_CASE("config settings and files") {
  NetConfig c;
  apply_config_setting(c, "c", "32");
  apply_config_setting(c, "variant", "spatial-only");
  apply_config_setting(c, "interactions", "1,0,1,1");
  CHECK(c.channels == 32);
  CHECK(c.variant == Variant::spatial_only);
  CHECK_FALSE(c.interaction_enabled(2));
  CHECK_THROWS_AS(apply_config_setting(c, "depth", "3"), ConfigError);
  CHECK_THROWS_AS(apply_config_setting(c, "n", "four"), ConfigError);

  TempDir tmp;
  std::ofstream(tmp.path / "net.cfg") << "# tiny\nn = 2\nk=3\n\nscale=2  # comment\nang_upsample=nearest\n";
  const auto f = read_config_file(tmp.path / "net.cfg");
  CHECK(f.n_groups == 2);
  CHECK(f.blocks_per_group == 3);
  CHECK(f.scale == 2);
  CHECK(f.ang_upsample == AngUpsample::nearest);
  std::ofstream(tmp.path / "bad.cfg") << "n 2\n";
  CHECK_THROWS_AS(read_config_file(tmp.path / "bad.cfg"), ConfigError);
}
