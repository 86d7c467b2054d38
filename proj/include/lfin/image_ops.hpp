#pragma once

#include <array>
#include <utility>
#include <vector>

#include "lfin/light_field.hpp"

namespace lfin {

/// Positive rational resize factor (out extent = ceil(in * num / den)).
struct Scale {
  int num = 1;
  int den = 1;

  double value() const { return static_cast<double>(num) / den; }
  int apply(int extent) const;
};

/// Cubic convolution kernel with a = -0.5.
double cubic_kernel(double t);

/// Sparse 1D resampling operator: row i of the output takes
/// sum_k weight_k * in[index_k]. Edge handling mirrors the input
/// (symmetric padding), and downscaling widens the kernel by 1/scale.
struct ResampleTaps {
  int in_extent = 0;
  std::vector<std::vector<std::pair<int, double>>> taps;
};

ResampleTaps bicubic_taps(int in_extent, Scale scale);

/// Separable antialiased bicubic resize. Throws ParameterError for a
/// non-positive scale.
Image bicubic_resize(const Image& img, Scale scale);
/// Transpose of bicubic_resize (the resize is linear in its input).
Image bicubic_resize_backward(const Image& grad_out, int in_rows, int in_cols, Scale scale);

/// Per-view bicubic resize of a light field.
LightField resize_views(const LightField& lf, Scale scale);

struct RgbImage {
  Image r, g, b;
};

struct YCbCrImage {
  Image y, cb, cr;
};

/// Studio-range BT.601 on [0, 1] data:
///   Y  = (16  + 65.481 R + 128.553 G + 24.966 B) / 255
///   Cb = (128 - 37.797 R -  74.203 G + 112.0  B) / 255
///   Cr = (128 + 112.0  R -  93.786 G -  18.214 B) / 255
/// Out-of-range inputs are clamped to [0, 1]; `clamped` reports whether that happened.
YCbCrImage rgb_to_ycbcr(const RgbImage& rgb, bool* clamped = nullptr);
Image rgb_to_y(const RgbImage& rgb, bool* clamped = nullptr);
/// Gradient of rgb_to_y with respect to (R, G, B).
RgbImage rgb_to_y_backward(const Image& grad_y);
/// Inverse transform; output clamped to [0, 1].
RgbImage recombine_ycbcr(const Image& y, const Image& cb, const Image& cr);

}  // namespace lfin
