#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lfin/autograd.hpp"
#include "lfin/light_field.hpp"

namespace lfin {

enum class Variant : std::uint8_t { full = 0, spatial_only = 1, angular_only = 2 };
enum class AngUpsample : std::uint8_t { pixel_shuffle = 0, nearest = 1, bilinear = 2 };

std::string to_string(Variant v);
std::string to_string(AngUpsample u);
Variant parse_variant(const std::string& s);
AngUpsample parse_ang_upsample(const std::string& s);

struct NetConfig {
  int n_groups = 4;
  int blocks_per_group = 4;
  int channels = 64;
  int ang_res = 5;
  int scale = 4;
  Variant variant = Variant::full;
  AngUpsample ang_upsample = AngUpsample::pixel_shuffle;
  /// One flag per group; empty means all enabled.
  std::vector<bool> interactions;
  /// ReLU after the initial extractors and after every convolution inside
  /// an Inter-Block.
  bool block_relu = true;

  bool interaction_enabled(int group) const;
  /// Throws ConfigError on invalid values.
  void validate() const;

  bool operator==(const NetConfig&) const = default;
};

/// Which feature grid a layer's output lives on.
enum class Grid { angular, macpi, output };

struct LayerSpec {
  std::string name;
  int in_channels;
  int out_channels;
  int kernel;
  ConvGeometry geometry;
  Grid grid;
};

/// Every convolution the config induces, in execution order. Names follow
/// init.{afe,sfe}, g{n}.b{k}.{up1x1,sfe,afe,fuse1x1},
/// bottleneck.{squeeze1x1,up1x1,sfe}, recon.{sfe,final1x1} with 1-based n, k.
std::vector<LayerSpec> layer_specs(const NetConfig& cfg);

template <typename T>
using ModelParams = std::map<std::string, ConvWeights<T>>;

template <typename T, typename U>
ModelParams<U> cast_params(const ModelParams<T>& p) {
  ModelParams<U> out;
  for (const auto& [name, w] : p) out.emplace(name, w.template cast<U>());
  return out;
}

/// Xavier-uniform kernels, zero biases, deterministic in seed.
ModelParams<float> init_params(const NetConfig& cfg, std::uint64_t seed);

/// Throws ShapeError unless params hold exactly the layers of cfg with matching shapes.
template <typename T>
void check_params(const ModelParams<T>& params, const NetConfig& cfg);

std::uint64_t count_params(const NetConfig& cfg);
/// Multiply-accumulates of every convolution for an A x A x H x W input
/// (1 MAC = 1 FLOP; biases, activations and parameter-free resampling ignored).
std::uint64_t count_flops(const NetConfig& cfg, int height, int width);

/// Graph-side view of a parameter set: one (kernel, bias) pair per layer.
template <typename T>
struct ParamVars {
  struct Layer {
    ag::Var<T> kernel;
    ag::Var<T> bias;
    ConvGeometry geometry;
  };
  std::map<std::string, Layer> layers;

  const Layer& at(const std::string& name) const;
  /// Collects leaf gradients into a ModelParams-shaped map (zeros where absent).
  ModelParams<T> gradients() const;
};

template <typename T>
ParamVars<T> make_param_vars(const ModelParams<T>& params, bool requires_grad);

template <typename T>
struct FeaturePair {
  ag::Var<T> angular;  // C x H x W
  ag::Var<T> spatial;  // C x AH x AW
};

template <typename T>
FeaturePair<T> initial_extract(const ag::Var<T>& macpi, const ParamVars<T>& p, const NetConfig& cfg);
/// One Inter-Block; group and block are 1-based.
template <typename T>
FeaturePair<T> inter_block_forward(const FeaturePair<T>& in, const ParamVars<T>& p, const NetConfig& cfg,
                                   int group, int block);
template <typename T>
FeaturePair<T> inter_group_forward(const FeaturePair<T>& in, const ParamVars<T>& p, const NetConfig& cfg,
                                   int group);
template <typename T>
ag::Var<T> bottleneck_forward(const std::vector<ag::Var<T>>& angulars, const std::vector<ag::Var<T>>& spatials,
                              const ag::Var<T>& spatial0, const ParamVars<T>& p, const NetConfig& cfg);
/// Returns the HR SAI array as a (1, alpha*A*H, alpha*A*W) tensor.
template <typename T>
ag::Var<T> reconstruct(const ag::Var<T>& fused, const ParamVars<T>& p, const NetConfig& cfg);
/// Full network on a (1, A*H, A*W) MacPI tensor.
template <typename T>
ag::Var<T> forward(const ag::Var<T>& macpi, const ParamVars<T>& p, const NetConfig& cfg);

/// Inference convenience: MacPI in, HR SAI array out, no graph recorded.
SaiArrayImage forward(const MacPiImage& input, const ModelParams<float>& params, const NetConfig& cfg);
Tensor<float> image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor<float>& t);

}  // namespace lfin
