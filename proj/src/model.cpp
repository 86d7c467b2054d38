#include "lfin/model.hpp"

#include <cmath>
#include <random>

namespace lfin {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::spatial_only: return "spatial-only";
    case Variant::angular_only: return "angular-only";
  }
  return "?";
}

std::string to_string(AngUpsample u) {
  switch (u) {
    case AngUpsample::pixel_shuffle: return "pixel-shuffle";
    case AngUpsample::nearest: return "nearest";
    case AngUpsample::bilinear: return "bilinear";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::full;
  if (s == "spatial-only" || s == "spatial_only") return Variant::spatial_only;
  if (s == "angular-only" || s == "angular_only") return Variant::angular_only;
  throw ConfigError("unknown variant '" + s + "'");
}

AngUpsample parse_ang_upsample(const std::string& s) {
  if (s == "pixel-shuffle" || s == "pixel_shuffle") return AngUpsample::pixel_shuffle;
  if (s == "nearest") return AngUpsample::nearest;
  if (s == "bilinear") return AngUpsample::bilinear;
  throw ConfigError("unknown angular upsampling '" + s + "'");
}

bool NetConfig::interaction_enabled(int group) const {
  if (interactions.empty()) return true;
  return interactions.at(static_cast<std::size_t>(group - 1));
}

void NetConfig::validate() const {
  if (n_groups < 1 || blocks_per_group < 1 || channels < 1 || ang_res < 1 || scale < 1)
    throw ConfigError("N, K, C, A and scale must all be >= 1");
  if (!interactions.empty() && interactions.size() != static_cast<std::size_t>(n_groups))
    throw ConfigError("interaction list has " + std::to_string(interactions.size()) + " entries, expected N=" +
                      std::to_string(n_groups));
}

namespace {

std::string block_name(int g, int b, const char* layer) {
  return "g" + std::to_string(g) + ".b" + std::to_string(b) + "." + layer;
}

}  // namespace

std::vector<LayerSpec> layer_specs(const NetConfig& cfg) {
  cfg.validate();
  const int c = cfg.channels, a = cfg.ang_res, n = cfg.n_groups;
  const bool angular_path = cfg.variant != Variant::spatial_only;
  const bool sfe_pointwise = cfg.variant == Variant::angular_only;
  const int up_out = cfg.ang_upsample == AngUpsample::pixel_shuffle ? a * a * c : c;

  auto sfe = [&](std::string name, int in, int out) {
    return sfe_pointwise ? LayerSpec{std::move(name), in, out, 1, pointwise_geometry(), Grid::macpi}
                         : LayerSpec{std::move(name), in, out, 3, sfe_geometry(a), Grid::macpi};
  };
  auto afe = [&](std::string name, int in, int out) {
    return LayerSpec{std::move(name), in, out, a, afe_geometry(a), Grid::angular};
  };
  auto pointwise = [&](std::string name, int in, int out, Grid grid) {
    return LayerSpec{std::move(name), in, out, 1, pointwise_geometry(), grid};
  };

  std::vector<LayerSpec> specs;
  if (angular_path) specs.push_back(afe("init.afe", 1, c));
  specs.push_back(sfe("init.sfe", 1, c));

  for (int g = 1; g <= n; ++g) {
    const bool interact = angular_path && cfg.interaction_enabled(g);
    for (int b = 1; b <= cfg.blocks_per_group; ++b) {
      if (!angular_path) {
        specs.push_back(sfe(block_name(g, b, "sfe"), c, c));
      } else if (interact) {
        specs.push_back(pointwise(block_name(g, b, "up1x1"), c, up_out, Grid::angular));
        specs.push_back(sfe(block_name(g, b, "sfe"), 2 * c, c));
        specs.push_back(afe(block_name(g, b, "afe"), c, c));
        specs.push_back(pointwise(block_name(g, b, "fuse1x1"), 2 * c, c, Grid::angular));
      } else {
        specs.push_back(sfe(block_name(g, b, "sfe"), c, c));
        specs.push_back(pointwise(block_name(g, b, "fuse1x1"), c, c, Grid::angular));
      }
    }
  }

  if (angular_path) {
    specs.push_back(pointwise("bottleneck.squeeze1x1", n * c, c, Grid::angular));
    specs.push_back(pointwise("bottleneck.up1x1", c, up_out, Grid::angular));
    specs.push_back(sfe("bottleneck.sfe", (n + 1) * c, c));
  } else {
    specs.push_back(sfe("bottleneck.sfe", n * c, c));
  }

  specs.push_back(sfe("recon.sfe", c, cfg.scale * cfg.scale * c));
  specs.push_back(pointwise("recon.final1x1", c, 1, Grid::output));
  return specs;
}

ModelParams<float> init_params(const NetConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelParams<float> params;
  for (const auto& s : layer_specs(cfg)) {
    const auto k = static_cast<std::size_t>(s.kernel);
    Tensor<float> kernel({static_cast<std::size_t>(s.out_channels), static_cast<std::size_t>(s.in_channels), k, k});
    const double fan_in = static_cast<double>(s.in_channels) * s.kernel * s.kernel;
    const double fan_out = static_cast<double>(s.out_channels) * s.kernel * s.kernel;
    const auto bound = static_cast<float>(std::sqrt(6.0 / (fan_in + fan_out)));
    std::uniform_real_distribution<float> dist(-bound, bound);
    for (auto& x : kernel.values()) x = dist(rng);
    params.emplace(s.name, ConvWeights<float>{std::move(kernel),
                                              Tensor<float>({static_cast<std::size_t>(s.out_channels)}),
                                              s.geometry});
  }
  return params;
}

template <typename T>
void check_params(const ModelParams<T>& params, const NetConfig& cfg) {
  const auto specs = layer_specs(cfg);
  if (params.size() != specs.size())
    throw ShapeError("parameter set has " + std::to_string(params.size()) + " layers, config induces " +
                     std::to_string(specs.size()));
  for (const auto& s : specs) {
    auto it = params.find(s.name);
    if (it == params.end()) throw ShapeError("missing layer '" + s.name + "'");
    const auto k = static_cast<std::size_t>(s.kernel);
    const std::vector<std::size_t> kdims{static_cast<std::size_t>(s.out_channels),
                                         static_cast<std::size_t>(s.in_channels), k, k};
    if (it->second.kernel.dims() != kdims || it->second.bias.dims() != std::vector<std::size_t>{kdims[0]})
      throw ShapeError("layer '" + s.name + "' has kernel " + it->second.kernel.dims_string() +
                       ", config expects " + Tensor<T>(kdims).dims_string());
    if (!(it->second.geometry == s.geometry)) throw ShapeError("layer '" + s.name + "' has the wrong geometry");
  }
}

std::uint64_t count_params(const NetConfig& cfg) {
  std::uint64_t total = 0;
  for (const auto& s : layer_specs(cfg))
    total += static_cast<std::uint64_t>(s.out_channels) * s.in_channels * s.kernel * s.kernel + s.out_channels;
  return total;
}

std::uint64_t count_flops(const NetConfig& cfg, int height, int width) {
  const std::uint64_t a = cfg.ang_res, r = cfg.scale;
  const std::uint64_t lf_pixels = static_cast<std::uint64_t>(height) * width;
  std::uint64_t total = 0;
  for (const auto& s : layer_specs(cfg)) {
    std::uint64_t pixels = lf_pixels;
    if (s.grid == Grid::macpi) pixels *= a * a;
    if (s.grid == Grid::output) pixels *= a * a * r * r;
    total += pixels * s.out_channels * s.in_channels * s.kernel * s.kernel;
  }
  return total;
}

template <typename T>
const typename ParamVars<T>::Layer& ParamVars<T>::at(const std::string& name) const {
  auto it = layers.find(name);
  if (it == layers.end()) throw ConfigError("parameter set has no layer '" + name + "'");
  return it->second;
}

template <typename T>
ModelParams<T> ParamVars<T>::gradients() const {
  ModelParams<T> out;
  for (const auto& [name, l] : layers) {
    ConvWeights<T> g{l.kernel.grad(), l.bias.grad(), l.geometry};
    if (g.kernel.empty()) g.kernel = Tensor<T>(l.kernel.value().dims());
    if (g.bias.empty()) g.bias = Tensor<T>(l.bias.value().dims());
    out.emplace(name, std::move(g));
  }
  return out;
}

template <typename T>
ParamVars<T> make_param_vars(const ModelParams<T>& params, bool requires_grad) {
  ParamVars<T> pv;
  for (const auto& [name, w] : params)
    pv.layers.emplace(name, typename ParamVars<T>::Layer{ag::leaf(w.kernel, requires_grad),
                                                         ag::leaf(w.bias, requires_grad), w.geometry});
  return pv;
}

namespace {

template <typename T>
ag::Var<T> conv(const ag::Var<T>& x, const ParamVars<T>& p, const std::string& name) {
  const auto& l = p.at(name);
  return ag::conv2d(x, l.kernel, l.bias, l.geometry);
}

template <typename T>
ag::Var<T> maybe_relu(const ag::Var<T>& x, bool on) {
  return on ? ag::relu(x) : x;
}

template <typename T>
ag::Var<T> angular_to_spatial(const ag::Var<T>& fa, const ParamVars<T>& p, const NetConfig& cfg,
                              const std::string& name, bool relu) {
  auto up = maybe_relu(conv(fa, p, name), relu);
  switch (cfg.ang_upsample) {
    case AngUpsample::pixel_shuffle: return ag::pixel_shuffle(up, cfg.ang_res);
    case AngUpsample::nearest: return ag::upsample_nearest(up, cfg.ang_res);
    case AngUpsample::bilinear: return ag::upsample_bilinear(up, cfg.ang_res);
  }
  throw ConfigError("bad angular upsampling mode");
}

template <typename T>
void check_feature(const Tensor<T>& t, std::size_t c, std::size_t h, std::size_t w, const char* what) {
  if (t.rank() != 3 || t.channels() != c || t.height() != h || t.width() != w)
    throw ShapeError(std::string(what) + " has shape " + t.dims_string() + ", expected [" + std::to_string(c) +
                     "x" + std::to_string(h) + "x" + std::to_string(w) + "]");
}

}  // namespace

template <typename T>
FeaturePair<T> initial_extract(const ag::Var<T>& macpi, const ParamVars<T>& p, const NetConfig& cfg) {
  const auto& x = macpi.value();
  if (x.rank() != 3 || x.channels() != 1) throw ShapeError("network input must be (1, AH, AW), got " + x.dims_string());
  if (x.height() % cfg.ang_res != 0 || x.width() % cfg.ang_res != 0)
    throw ShapeError("input extent " + x.dims_string() + " not divisible by A=" + std::to_string(cfg.ang_res));
  FeaturePair<T> out;
  if (cfg.variant != Variant::spatial_only) out.angular = maybe_relu(conv(macpi, p, "init.afe"), cfg.block_relu);
  out.spatial = maybe_relu(conv(macpi, p, "init.sfe"), cfg.block_relu);
  return out;
}

template <typename T>
FeaturePair<T> inter_block_forward(const FeaturePair<T>& in, const ParamVars<T>& p, const NetConfig& cfg, int group,
                                   int block) {
  const std::size_t c = cfg.channels, a = cfg.ang_res;
  const auto& fs = in.spatial.value();
  if (fs.rank() != 3 || fs.height() % a != 0 || fs.width() % a != 0)
    throw ShapeError("spatial feature " + fs.dims_string() + " not a MacPI-shaped feature");
  check_feature(fs, c, fs.height(), fs.width(), "spatial feature");
  const bool relu = cfg.block_relu;

  if (cfg.variant == Variant::spatial_only) {
    auto s = maybe_relu(conv(in.spatial, p, block_name(group, block, "sfe")), relu);
    return {ag::Var<T>(), ag::add(s, in.spatial)};
  }
  check_feature(in.angular.value(), c, fs.height() / a, fs.width() / a, "angular feature");

  if (!cfg.interaction_enabled(group)) {
    auto s = maybe_relu(conv(in.spatial, p, block_name(group, block, "sfe")), relu);
    auto f = maybe_relu(conv(in.angular, p, block_name(group, block, "fuse1x1")), relu);
    return {ag::add(f, in.angular), ag::add(s, in.spatial)};
  }

  auto up = angular_to_spatial(in.angular, p, cfg, block_name(group, block, "up1x1"), relu);
  auto s = maybe_relu(conv(ag::concat<T>({in.spatial, up}), p, block_name(group, block, "sfe")), relu);
  auto na = maybe_relu(conv(in.spatial, p, block_name(group, block, "afe")), relu);
  auto f = maybe_relu(conv(ag::concat<T>({in.angular, na}), p, block_name(group, block, "fuse1x1")), relu);
  return {ag::add(f, in.angular), ag::add(s, in.spatial)};
}

template <typename T>
FeaturePair<T> inter_group_forward(const FeaturePair<T>& in, const ParamVars<T>& p, const NetConfig& cfg, int group) {
  FeaturePair<T> cur = in;
  for (int b = 1; b <= cfg.blocks_per_group; ++b) cur = inter_block_forward(cur, p, cfg, group, b);
  return cur;
}

template <typename T>
ag::Var<T> bottleneck_forward(const std::vector<ag::Var<T>>& angulars, const std::vector<ag::Var<T>>& spatials,
                              const ag::Var<T>& spatial0, const ParamVars<T>& p, const NetConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.n_groups);
  if (spatials.size() != n) throw ConfigError("bottleneck expects " + std::to_string(n) + " spatial features");
  std::vector<ag::Var<T>> parts = spatials;
  if (cfg.variant != Variant::spatial_only) {
    if (angulars.size() != n) throw ConfigError("bottleneck expects " + std::to_string(n) + " angular features");
    auto fa = ag::relu(conv(ag::concat(angulars), p, "bottleneck.squeeze1x1"));
    parts.push_back(angular_to_spatial(fa, p, cfg, "bottleneck.up1x1", false));
  }
  return ag::add(conv(ag::concat(parts), p, "bottleneck.sfe"), spatial0);
}

template <typename T>
ag::Var<T> reconstruct(const ag::Var<T>& fused, const ParamVars<T>& p, const NetConfig& cfg) {
  auto expanded = conv(fused, p, "recon.sfe");
  auto sai = ag::macpi_to_sai(expanded, cfg.ang_res);
  auto shuffled = ag::pixel_shuffle(sai, cfg.scale);
  return conv(shuffled, p, "recon.final1x1");
}

template <typename T>
ag::Var<T> forward(const ag::Var<T>& macpi, const ParamVars<T>& p, const NetConfig& cfg) {
  cfg.validate();
  auto f0 = initial_extract(macpi, p, cfg);
  std::vector<ag::Var<T>> angulars, spatials;
  FeaturePair<T> cur = f0;
  for (int g = 1; g <= cfg.n_groups; ++g) {
    cur = inter_group_forward(cur, p, cfg, g);
    if (cfg.variant != Variant::spatial_only) angulars.push_back(cur.angular);
    spatials.push_back(cur.spatial);
  }
  auto fused = bottleneck_forward(angulars, spatials, f0.spatial, p, cfg);
  return reconstruct(fused, p, cfg);
}

Tensor<float> image_to_tensor(const Image& img) {
  return Tensor<float>({1, static_cast<std::size_t>(img.rows), static_cast<std::size_t>(img.cols)}, img.data);
}

Image tensor_to_image(const Tensor<float>& t) {
  if (t.rank() != 3 || t.channels() != 1) throw ShapeError("expected a single-channel tensor, got " + t.dims_string());
  Image img(static_cast<int>(t.height()), static_cast<int>(t.width()));
  img.data = t.values();
  return img;
}

SaiArrayImage forward(const MacPiImage& input, const ModelParams<float>& params, const NetConfig& cfg) {
  check_params(params, cfg);
  if (input.ang_res != cfg.ang_res)
    throw ShapeError("input has A=" + std::to_string(input.ang_res) + ", model expects A=" +
                     std::to_string(cfg.ang_res));
  ag::NoGradGuard no_grad;
  const auto pv = make_param_vars(params, false);
  auto out = forward(ag::leaf(image_to_tensor(input.image)), pv, cfg);
  return as_sai_array(tensor_to_image(out.value()), cfg.ang_res);
}

#define LFIN_INSTANTIATE_MODEL(T)                                                                             \
  template void check_params(const ModelParams<T>&, const NetConfig&);                                        \
  template struct ParamVars<T>;                                                                               \
  template ParamVars<T> make_param_vars(const ModelParams<T>&, bool);                                         \
  template FeaturePair<T> initial_extract(const ag::Var<T>&, const ParamVars<T>&, const NetConfig&);          \
  template FeaturePair<T> inter_block_forward(const FeaturePair<T>&, const ParamVars<T>&, const NetConfig&,   \
                                              int, int);                                                      \
  template FeaturePair<T> inter_group_forward(const FeaturePair<T>&, const ParamVars<T>&, const NetConfig&,   \
                                              int);                                                           \
  template ag::Var<T> bottleneck_forward(const std::vector<ag::Var<T>>&, const std::vector<ag::Var<T>>&,      \
                                         const ag::Var<T>&, const ParamVars<T>&, const NetConfig&);           \
  template ag::Var<T> reconstruct(const ag::Var<T>&, const ParamVars<T>&, const NetConfig&);                  \
  template ag::Var<T> forward(const ag::Var<T>&, const ParamVars<T>&, const NetConfig&);

LFIN_INSTANTIATE_MODEL(float)
LFIN_INSTANTIATE_MODEL(double)

}  // namespace lfin
