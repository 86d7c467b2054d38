#pragma once

// Differentiable primitives on (C, H, W) feature maps. Every forward op has
// an analytic vector-Jacobian product next to it. Instantiated for float and
// double; double is the verification path.

#include <span>
#include <vector>

#include "lfin/tensor.hpp"

namespace lfin {

struct ConvGeometry {
  int stride = 1;
  int dilation = 1;
  int padding = 0;

  bool operator==(const ConvGeometry&) const = default;
};

/// A x A kernel, stride A, no padding: one output per macro-pixel.
inline ConvGeometry afe_geometry(int ang_res) { return {ang_res, 1, 0}; }
/// 3 x 3 kernel dilated by A with zero padding A: taps stay inside one view.
inline ConvGeometry sfe_geometry(int ang_res) { return {1, ang_res, ang_res}; }
inline ConvGeometry pointwise_geometry() { return {1, 1, 0}; }

template <typename T>
struct ConvWeights {
  Tensor<T> kernel;  // (out_channels, in_channels, k_h, k_w)
  Tensor<T> bias;    // (out_channels)
  ConvGeometry geometry;

  std::size_t out_channels() const { return kernel.dim(0); }
  std::size_t in_channels() const { return kernel.dim(1); }
  std::size_t kernel_h() const { return kernel.dim(2); }
  std::size_t kernel_w() const { return kernel.dim(3); }

  template <typename U>
  ConvWeights<U> cast() const {
    return {kernel.template cast<U>(), bias.template cast<U>(), geometry};
  }
};

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> kernel;
  Tensor<T> bias;
};

/// Generic strided/dilated/zero-padded 2D convolution (cross-correlation).
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const ConvWeights<T>& w);
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const ConvWeights<T>& w, const Tensor<T>& gy);

/// Angular feature extractor. Requires AFE geometry and extents divisible by A.
template <typename T>
Tensor<T> afe_forward(const Tensor<T>& x, const ConvWeights<T>& w, int ang_res);
/// Spatial feature extractor. Output extent equals input extent.
template <typename T>
Tensor<T> sfe_forward(const Tensor<T>& x, const ConvWeights<T>& w, int ang_res);
template <typename T>
Tensor<T> conv1x1_forward(const Tensor<T>& x, const ConvWeights<T>& w);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& gy);

/// out(c, r*i + a, r*j + b) = in(c*r*r + a*r + b, i, j).
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r);
template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, int r);

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int r);
template <typename T>
Tensor<T> upsample_nearest_backward(const Tensor<T>& gy, int r);

/// Bilinear, align_corners = false, edge-clamped source coordinates.
template <typename T>
Tensor<T> upsample_bilinear(const Tensor<T>& x, int r);
template <typename T>
Tensor<T> upsample_bilinear_backward(const Tensor<T>& gy, int r);

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> xs);
template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& gy, std::span<const std::size_t> channels);

template <typename T>
Tensor<T> residual_add(const Tensor<T>& x, const Tensor<T>& y);

/// LF reshape applied channel-wise: (C, AH, AW) MacPI -> (C, AH, AW) SAI array.
template <typename T>
Tensor<T> macpi_to_sai_tensor(const Tensor<T>& x, int ang_res);
template <typename T>
Tensor<T> sai_to_macpi_tensor(const Tensor<T>& x, int ang_res);

}  // namespace lfin
