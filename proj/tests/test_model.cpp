#include <doctest.h>

#include <cmath>
#include <set>

#include "gradcheck.hpp"
#include "lfin/model.hpp"
#include "test_support.hpp"

using namespace lfin;
using namespace lfin::test;

namespace {

NetConfig tiny(Variant v = Variant::full, AngUpsample up = AngUpsample::pixel_shuffle) {
  NetConfig c;
  c.n_groups = 2;
  c.blocks_per_group = 2;
  c.channels = 3;
  c.ang_res = 2;
  c.scale = 2;
  c.variant = v;
  c.ang_upsample = up;
  return c;
}

ModelParams<double> random_params(const NetConfig& cfg, std::uint64_t seed, double bias_scale = 0.1) {
  auto p = cast_params<float, double>(init_params(cfg, seed));
  std::mt19937_64 rng(seed + 1000);
  std::uniform_real_distribution<double> d(-bias_scale, bias_scale);
  for (auto& [name, w] : p)
    for (auto& b : w.bias.values()) b = d(rng);
  return p;
}

ModelParams<double> zero_params(const NetConfig& cfg) {
  auto p = cast_params<float, double>(init_params(cfg, 0));
  for (auto& [name, w] : p) {
    w.kernel = TensorD(w.kernel.dims());
    w.bias = TensorD(w.bias.dims());
  }
  return p;
}

// ---- straight-line oracle built from the plain tensor ops ----

TensorD conv(const TensorD& x, const ModelParams<double>& p, const std::string& name) {
  return conv2d_forward(x, p.at(name));
}

TensorD up(const TensorD& fa, const ModelParams<double>& p, const NetConfig& cfg, const std::string& name, bool relu) {
  auto y = conv1x1_forward(fa, p.at(name));
  if (relu) y = relu_forward(y);
  if (cfg.ang_upsample == AngUpsample::pixel_shuffle) return pixel_shuffle(y, cfg.ang_res);
  if (cfg.ang_upsample == AngUpsample::nearest) return upsample_nearest(y, cfg.ang_res);
  return upsample_bilinear(y, cfg.ang_res);
}

TensorD cat(std::vector<TensorD> xs) { return concat_channels<double>(xs); }

TensorD oracle_forward(const TensorD& x, const ModelParams<double>& p, const NetConfig& cfg) {
  const int a = cfg.ang_res;
  const bool ang = cfg.variant != Variant::spatial_only;
  TensorD fa, fs0 = relu_forward(conv(x, p, "init.sfe"));
  if (ang) fa = relu_forward(afe_forward(x, p.at("init.afe"), a));
  TensorD fs = fs0;
  std::vector<TensorD> angulars, spatials;
  for (int g = 1; g <= cfg.n_groups; ++g) {
    for (int b = 1; b <= cfg.blocks_per_group; ++b) {
      const std::string pre = "g" + std::to_string(g) + ".b" + std::to_string(b) + ".";
      if (!ang) {
        fs = residual_add(relu_forward(conv(fs, p, pre + "sfe")), fs);
      } else if (!cfg.interaction_enabled(g)) {
        auto s = relu_forward(conv(fs, p, pre + "sfe"));
        auto f = relu_forward(conv1x1_forward(fa, p.at(pre + "fuse1x1")));
        fa = residual_add(f, fa);
        fs = residual_add(s, fs);
      } else {
        auto u = up(fa, p, cfg, pre + "up1x1", true);
        auto s = relu_forward(conv(cat({fs, u}), p, pre + "sfe"));
        auto na = relu_forward(afe_forward(fs, p.at(pre + "afe"), a));
        auto f = relu_forward(conv1x1_forward(cat({fa, na}), p.at(pre + "fuse1x1")));
        fa = residual_add(f, fa);
        fs = residual_add(s, fs);
      }
    }
    if (ang) angulars.push_back(fa);
    spatials.push_back(fs);
  }
  auto parts = spatials;
  if (ang) {
    auto squeezed = relu_forward(conv1x1_forward(cat(angulars), p.at("bottleneck.squeeze1x1")));
    parts.push_back(up(squeezed, p, cfg, "bottleneck.up1x1", false));
  }
  auto fused = residual_add(conv(cat(parts), p, "bottleneck.sfe"), fs0);
  auto expanded = conv(fused, p, "recon.sfe");
  auto shuffled = pixel_shuffle(macpi_to_sai_tensor(expanded, a), cfg.scale);
  return conv1x1_forward(shuffled, p.at("recon.final1x1"));
}

TensorD run(const TensorD& x, const ModelParams<double>& p, const NetConfig& cfg) {
  ag::NoGradGuard guard;
  return forward(ag::leaf(x), make_param_vars(p, false), cfg).value();
}

}  // namespace

TEST_CASE("config validation and name parsing") {
  NetConfig c;
  CHECK_NOTHROW(c.validate());
  c.channels = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = NetConfig{};
  c.interactions = {true, false};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(parse_variant("spatial-only") == Variant::spatial_only);
  CHECK(parse_variant("angular_only") == Variant::angular_only);
  CHECK(parse_ang_upsample("bilinear") == AngUpsample::bilinear);
  CHECK_THROWS_AS(parse_variant("both"), ConfigError);
}

TEST_CASE("layer naming scheme") {
  NetConfig c = tiny();
  c.interactions = {true, false};
  std::set<std::string> names;
  for (const auto& s : layer_specs(c)) names.insert(s.name);
  const std::set<std::string> want{"init.afe",          "init.sfe",          "g1.b1.up1x1",          "g1.b1.sfe",
                                   "g1.b1.afe",         "g1.b1.fuse1x1",     "g1.b2.up1x1",          "g1.b2.sfe",
                                   "g1.b2.afe",         "g1.b2.fuse1x1",     "g2.b1.sfe",            "g2.b1.fuse1x1",
                                   "g2.b2.sfe",         "g2.b2.fuse1x1",     "bottleneck.squeeze1x1", "bottleneck.up1x1",
                                   "bottleneck.sfe",    "recon.sfe",         "recon.final1x1"};
  CHECK(names == want);
}

TEST_CASE("init_params: Xavier variance, zero biases, determinism") {
  NetConfig c;
  c.variant = Variant::spatial_only;
  const auto p = init_params(c, 7);
  const auto& k = p.at("g1.b1.sfe").kernel;
  REQUIRE(k.size() == 9 * 64 * 64);
  double mean = 0.0, var = 0.0;
  for (float v : k.values()) mean += v;
  mean /= k.size();
  for (float v : k.values()) var += (v - mean) * (v - mean);
  var /= k.size();
  const double want = 2.0 / (576.0 + 576.0);
  CHECK(std::abs(var - want) <= 0.1 * want);

  for (const auto& [name, w] : p)
    for (float b : w.bias.values()) CHECK(b == 0.0f);

  const auto q = init_params(c, 7);
  bool same = true;
  for (const auto& [name, w] : p) same = same && w.kernel == q.at(name).kernel;
  CHECK(same);
  CHECK_FALSE(init_params(c, 8).at("init.sfe").kernel == p.at("init.sfe").kernel);
}

TEST_CASE("count_params equals the enumerated element count") {
  for (Variant v : {Variant::full, Variant::spatial_only, Variant::angular_only})
    for (AngUpsample u : {AngUpsample::pixel_shuffle, AngUpsample::nearest}) {
      NetConfig c;
      c.variant = v;
      c.ang_upsample = u;
      c.interactions = {true, false, true, true};
      std::uint64_t n = 0;
      for (const auto& [name, w] : init_params(c, 1)) n += w.kernel.size() + w.bias.size();
      CHECK(count_params(c) == n);
    }
}

TEST_CASE("budgets match the reference model sizes") {
  struct Row {
    int c, scale;
    double params, gflops;
  };
  for (const Row r : {Row{32, 2, 1.20e6, 11.87}, Row{32, 4, 1.31e6, 12.53}, Row{64, 2, 4.80e6, 47.46},
                      Row{64, 4, 5.23e6, 50.10}}) {
    NetConfig c;
    c.channels = r.c;
    c.scale = r.scale;
    const double params = static_cast<double>(count_params(c));
    const double gflops = static_cast<double>(count_flops(c, 32, 32)) / 1e9;
    CAPTURE(r.c);
    CAPTURE(r.scale);
    CHECK(std::abs(params - r.params) <= 0.10 * r.params);
    CHECK(std::abs(gflops - r.gflops) <= 0.15 * r.gflops);
  }
}

TEST_CASE("FLOPs grow with N, K, C and A") {
  const NetConfig base;
  const auto f0 = count_flops(base, 32, 32);
  NetConfig c = base;
  c.n_groups = 5;
  CHECK(count_flops(c, 32, 32) > f0);
  c = base;
  c.blocks_per_group = 5;
  CHECK(count_flops(c, 32, 32) > f0);
  c = base;
  c.channels = 65;
  CHECK(count_flops(c, 32, 32) > f0);
  c = base;
  c.ang_res = 6;
  CHECK(count_flops(c, 32, 32) > f0);
}

TEST_CASE("shape contracts") {
  NetConfig c;
  auto pv = make_param_vars(init_params(c, 1), false);
  ag::NoGradGuard guard;
  const auto f0 = initial_extract(ag::leaf(TensorF({1, 160, 160})), pv, c);
  CHECK(f0.angular.value().dims() == std::vector<std::size_t>{64, 32, 32});
  CHECK(f0.spatial.value().dims() == std::vector<std::size_t>{64, 160, 160});
  CHECK_THROWS_AS(initial_extract(ag::leaf(TensorF({1, 161, 160})), pv, c), ShapeError);

  // full-resolution output extent, on a narrow network to keep the test quick
  NetConfig n = c;
  n.n_groups = 1;
  n.blocks_per_group = 1;
  n.channels = 2;
  const auto out = forward(MacPiImage{5, 32, 32, Image(160, 160)}, init_params(n, 1), n);
  CHECK(out.image.rows == 640);
  CHECK(out.image.cols == 640);
  CHECK(out.view_h == 128);

  NetConfig one = tiny();
  one.scale = 1;
  std::mt19937_64 rng(3);
  CHECK(run(random_tensor<double>({1, 6, 8}, rng), random_params(one, 1), one).dims() ==
        std::vector<std::size_t>{1, 6, 8});
}

TEST_CASE("zero weights make every stage a residual identity") {
  std::mt19937_64 rng(4);
  for (Variant v : {Variant::full, Variant::spatial_only, Variant::angular_only}) {
    const NetConfig c = tiny(v);
    const auto pv = make_param_vars(zero_params(c), false);
    FeaturePair<double> in{ag::leaf(random_tensor<double>({3, 4, 6}, rng)), ag::leaf(random_tensor<double>({3, 8, 12}, rng))};
    if (v == Variant::spatial_only) in.angular = ag::Var<double>();
    ag::NoGradGuard guard;
    const auto out = inter_group_forward(in, pv, c, 1);
    CHECK(out.spatial.value() == in.spatial.value());
    if (v != Variant::spatial_only) CHECK(out.angular.value() == in.angular.value());

    const std::vector<ag::Var<double>> angulars(v == Variant::spatial_only ? 0 : 2, in.angular);
    const std::vector<ag::Var<double>> spatials(2, in.spatial);
    CHECK(bottleneck_forward(angulars, spatials, in.spatial, pv, c).value() == in.spatial.value());
    CHECK_THROWS_AS(bottleneck_forward(angulars, {in.spatial}, in.spatial, pv, c), ConfigError);
  }
}

TEST_CASE("forward matches the straight-line composition oracle") {
  std::mt19937_64 rng(5);
  std::vector<NetConfig> configs{tiny(), tiny(Variant::spatial_only), tiny(Variant::angular_only),
                                 tiny(Variant::full, AngUpsample::nearest), tiny(Variant::full, AngUpsample::bilinear)};
  NetConfig mixed = tiny();
  mixed.interactions = {false, true};
  configs.push_back(mixed);
  NetConfig a3 = tiny();
  a3.ang_res = 3;
  a3.scale = 4;
  configs.push_back(a3);
  for (const auto& c : configs) {
    const auto p = random_params(c, 11);
    const auto x = random_tensor<double>({1, static_cast<std::size_t>(c.ang_res * 4),
                                          static_cast<std::size_t>(c.ang_res * 5)},
                                         rng, 0.0, 1.0);
    const auto got = run(x, p, c);
    const auto want = oracle_forward(x, p, c);
    REQUIRE(got.dims() == want.dims());
    CHECK(max_rel_error(as_doubles(got), as_doubles(want)) <= 1e-6);
  }
}

TEST_CASE("float inference agrees with the double path and is deterministic") {
  const NetConfig c = tiny();
  const auto pf = init_params(c, 3);
  std::mt19937_64 rng(6);
  const auto lf = random_lf(2, 4, 5, rng);
  const auto a = forward(lf_to_macpi(lf), pf, c);
  const auto b = forward(lf_to_macpi(lf), pf, c);
  CHECK(a.image == b.image);
  const auto d = run(image_to_tensor(lf_to_macpi(lf).image).cast<double>(), cast_params<float, double>(pf), c);
  std::vector<double> got(a.image.data.begin(), a.image.data.end());
  CHECK(max_rel_error(got, as_doubles(d)) <= 1e-4);
  CHECK_THROWS_AS(forward(lf_to_macpi(random_lf(3, 4, 5, rng)), pf, c), ShapeError);
}

TEST_CASE("check_params rejects foreign parameter sets") {
  const NetConfig c = tiny();
  auto p = init_params(c, 1);
  CHECK_NOTHROW(check_params(p, c));
  NetConfig wider = c;
  wider.channels = 4;
  CHECK_THROWS_AS(check_params(p, wider), ShapeError);
  p.erase("recon.sfe");
  CHECK_THROWS_AS(check_params(p, c), ShapeError);
}

TEST_CASE("end-to-end finite-difference gradient check") {
  NetConfig c;
  c.n_groups = 1;
  c.blocks_per_group = 1;
  c.channels = 4;
  c.ang_res = 2;
  c.scale = 2;
  std::mt19937_64 rng(7);
  const auto p = random_params(c, 21);
  const auto x = random_tensor<double>({1, 16, 16}, rng, 0.0, 1.0);
  const auto target = random_tensor<double>({1, 32, 32}, rng, 0.0, 1.0);

  // every parameter tensor plus the input; ReLU kinks are hit with probability zero
  std::vector<std::string> names;
  std::vector<TensorD> inputs{x};
  for (const auto& [name, w] : p) {
    names.push_back(name);
    inputs.push_back(w.kernel);
    inputs.push_back(w.bias);
  }
  const GraphFn f = [&](const std::vector<ag::Var<double>>& v) {
    ParamVars<double> pv;
    for (std::size_t i = 0; i < names.size(); ++i)
      pv.layers.emplace(names[i], ParamVars<double>::Layer{v[1 + 2 * i], v[2 + 2 * i], p.at(names[i]).geometry});
    return ag::l1_loss(forward(v[0], pv, c), target);
  };
  CHECK(gradcheck(inputs, f, rng) <= 1e-4);
}

TEST_CASE("spatial_only keeps views independent") {
  NetConfig c = tiny(Variant::spatial_only);
  c.ang_res = 3;
  const auto p = init_params(c, 9);
  std::mt19937_64 rng(8);
  const auto lf = random_lf(3, 5, 4, rng);
  const auto base = forward(lf_to_macpi(lf), p, c);
  std::uniform_int_distribution<int> du(0, 2), dh(0, 4), dw(0, 3);
  for (int t = 0; t < 10; ++t) {
    auto pert = lf;
    const int u = du(rng), v = du(rng);
    pert.at(u, v, dh(rng), dw(rng)) += 1.0f;
    const auto out = forward(lf_to_macpi(pert), p, c);
    bool ok = true;
    for (int uu = 0; uu < 3; ++uu)
      for (int vv = 0; vv < 3; ++vv)
        if (uu != u || vv != v) ok = ok && extract_view(sai_array_to_lf(out), uu, vv) ==
                                              extract_view(sai_array_to_lf(base), uu, vv);
    CHECK(ok);
  }
}
