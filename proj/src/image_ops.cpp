#include "lfin/image_ops.hpp"

#include <algorithm>
#include <cmath>

#include "lfin/errors.hpp"

namespace lfin {

int Scale::apply(int extent) const {
  // ceil(extent * num / den) in exact integer arithmetic
  const long long n = static_cast<long long>(extent) * num;
  return static_cast<int>((n + den - 1) / den);
}

double cubic_kernel(double t) {
  constexpr double a = -0.5;
  const double x = std::abs(t);
  const double x2 = x * x, x3 = x2 * x;
  if (x <= 1.0) return (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0;
  if (x < 2.0) return a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a;
  return 0.0;
}

ResampleTaps bicubic_taps(int in_extent, Scale scale) {
  if (scale.num <= 0 || scale.den <= 0) throw ParameterError("resize scale must be positive");
  if (in_extent < 1) throw ShapeError("resize input extent must be positive");
  const double s = scale.value();
  const bool antialias = s < 1.0;
  const double width = antialias ? 4.0 / s : 4.0;
  const int out_extent = scale.apply(in_extent);
  const int support = static_cast<int>(std::ceil(width)) + 2;

  ResampleTaps r{in_extent, {}};
  r.taps.resize(out_extent);
  for (int o = 0; o < out_extent; ++o) {
    // 1-based output coordinate mapped into 1-based input space
    const double x = o + 1;
    const double u = x / s + 0.5 * (1.0 - 1.0 / s);
    const int left = static_cast<int>(std::floor(u - width / 2.0));
    std::vector<std::pair<int, double>> row;
    double total = 0.0;
    for (int k = 0; k < support; ++k) {
      const int idx = left + k;  // 1-based
      const double d = u - idx;
      const double wgt = antialias ? s * cubic_kernel(s * d) : cubic_kernel(d);
      if (wgt == 0.0) continue;
      // symmetric padding: ... 2 1 | 1 2 ... n | n n-1 ...
      int m = (idx - 1) % (2 * in_extent);
      if (m < 0) m += 2 * in_extent;
      const int src = m < in_extent ? m : 2 * in_extent - 1 - m;
      row.emplace_back(src, wgt);
      total += wgt;
    }
    for (auto& [i, wgt] : row) wgt /= total;
    r.taps[o] = std::move(row);
  }
  return r;
}

Image bicubic_resize(const Image& img, Scale scale) {
  const auto ry = bicubic_taps(img.rows, scale);
  const auto rx = bicubic_taps(img.cols, scale);
  const int oh = static_cast<int>(ry.taps.size()), ow = static_cast<int>(rx.taps.size());

  std::vector<double> tmp(static_cast<std::size_t>(oh) * img.cols, 0.0);
  for (int o = 0; o < oh; ++o)
    for (const auto& [i, wgt] : ry.taps[o])
      for (int c = 0; c < img.cols; ++c) tmp[static_cast<std::size_t>(o) * img.cols + c] += wgt * img.at(i, c);

  Image out(oh, ow);
  for (int r = 0; r < oh; ++r)
    for (int o = 0; o < ow; ++o) {
      double acc = 0.0;
      for (const auto& [i, wgt] : rx.taps[o]) acc += wgt * tmp[static_cast<std::size_t>(r) * img.cols + i];
      out.at(r, o) = static_cast<float>(acc);
    }
  return out;
}

Image bicubic_resize_backward(const Image& grad_out, int in_rows, int in_cols, Scale scale) {
  const auto ry = bicubic_taps(in_rows, scale);
  const auto rx = bicubic_taps(in_cols, scale);
  if (grad_out.rows != static_cast<int>(ry.taps.size()) || grad_out.cols != static_cast<int>(rx.taps.size()))
    throw ShapeError("bicubic_resize_backward: gradient extent mismatch");

  std::vector<double> tmp(static_cast<std::size_t>(grad_out.rows) * in_cols, 0.0);
  for (int r = 0; r < grad_out.rows; ++r)
    for (int o = 0; o < grad_out.cols; ++o)
      for (const auto& [i, wgt] : rx.taps[o])
        tmp[static_cast<std::size_t>(r) * in_cols + i] += wgt * grad_out.at(r, o);

  std::vector<double> acc(static_cast<std::size_t>(in_rows) * in_cols, 0.0);
  for (int o = 0; o < grad_out.rows; ++o)
    for (const auto& [i, wgt] : ry.taps[o])
      for (int c = 0; c < in_cols; ++c)
        acc[static_cast<std::size_t>(i) * in_cols + c] += wgt * tmp[static_cast<std::size_t>(o) * in_cols + c];

  Image out(in_rows, in_cols);
  for (std::size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<float>(acc[i]);
  return out;
}

LightField resize_views(const LightField& lf, Scale scale) {
  const int a = lf.ang_res();
  const int h = scale.apply(lf.height()), w = scale.apply(lf.width());
  LightField out(a, h, w);
  for (int u = 0; u < a; ++u)
    for (int v = 0; v < a; ++v) set_view(out, u, v, bicubic_resize(extract_view(lf, u, v), scale));
  return out;
}

namespace {

constexpr double kY[3] = {65.481, 128.553, 24.966};
constexpr double kCb[3] = {-37.797, -74.203, 112.0};
constexpr double kCr[3] = {112.0, -93.786, -18.214};

void check_same(const RgbImage& rgb) {
  if (rgb.r.rows != rgb.g.rows || rgb.r.rows != rgb.b.rows || rgb.r.cols != rgb.g.cols ||
      rgb.r.cols != rgb.b.cols)
    throw ShapeError("RGB planes differ in extent");
}

double clamp01(double x, bool& flag) {
  if (x < 0.0) {
    flag = true;
    return 0.0;
  }
  if (x > 1.0) {
    flag = true;
    return 1.0;
  }
  return x;
}

}  // namespace

YCbCrImage rgb_to_ycbcr(const RgbImage& rgb, bool* clamped) {
  check_same(rgb);
  const int rows = rgb.r.rows, cols = rgb.r.cols;
  YCbCrImage out{Image(rows, cols), Image(rows, cols), Image(rows, cols)};
  bool flag = false;
  for (std::size_t i = 0; i < rgb.r.data.size(); ++i) {
    const double r = clamp01(rgb.r.data[i], flag), g = clamp01(rgb.g.data[i], flag),
                 b = clamp01(rgb.b.data[i], flag);
    out.y.data[i] = static_cast<float>((16.0 + kY[0] * r + kY[1] * g + kY[2] * b) / 255.0);
    out.cb.data[i] = static_cast<float>((128.0 + kCb[0] * r + kCb[1] * g + kCb[2] * b) / 255.0);
    out.cr.data[i] = static_cast<float>((128.0 + kCr[0] * r + kCr[1] * g + kCr[2] * b) / 255.0);
  }
  if (clamped) *clamped = flag;
  return out;
}

Image rgb_to_y(const RgbImage& rgb, bool* clamped) {
  check_same(rgb);
  Image y(rgb.r.rows, rgb.r.cols);
  bool flag = false;
  for (std::size_t i = 0; i < rgb.r.data.size(); ++i) {
    const double r = clamp01(rgb.r.data[i], flag), g = clamp01(rgb.g.data[i], flag),
                 b = clamp01(rgb.b.data[i], flag);
    y.data[i] = static_cast<float>((16.0 + kY[0] * r + kY[1] * g + kY[2] * b) / 255.0);
  }
  if (clamped) *clamped = flag;
  return y;
}

RgbImage rgb_to_y_backward(const Image& grad_y) {
  RgbImage g{Image(grad_y.rows, grad_y.cols), Image(grad_y.rows, grad_y.cols), Image(grad_y.rows, grad_y.cols)};
  for (std::size_t i = 0; i < grad_y.data.size(); ++i) {
    g.r.data[i] = static_cast<float>(kY[0] / 255.0 * grad_y.data[i]);
    g.g.data[i] = static_cast<float>(kY[1] / 255.0 * grad_y.data[i]);
    g.b.data[i] = static_cast<float>(kY[2] / 255.0 * grad_y.data[i]);
  }
  return g;
}

RgbImage recombine_ycbcr(const Image& y, const Image& cb, const Image& cr) {
  if (y.rows != cb.rows || y.rows != cr.rows || y.cols != cb.cols || y.cols != cr.cols)
    throw ShapeError("Y/Cb/Cr planes differ in extent");

  // invert the 3x3 forward matrix once
  const double m[3][3] = {{kY[0], kY[1], kY[2]}, {kCb[0], kCb[1], kCb[2]}, {kCr[0], kCr[1], kCr[2]}};
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  double inv[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int i1 = (j + 1) % 3, i2 = (j + 2) % 3, j1 = (i + 1) % 3, j2 = (i + 2) % 3;
      inv[i][j] = (m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]) / det;
    }

  RgbImage out{Image(y.rows, y.cols), Image(y.rows, y.cols), Image(y.rows, y.cols)};
  bool unused = false;
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    const double d[3] = {y.data[i] * 255.0 - 16.0, cb.data[i] * 255.0 - 128.0, cr.data[i] * 255.0 - 128.0};
    double rgb[3];
    for (int k = 0; k < 3; ++k) rgb[k] = clamp01(inv[k][0] * d[0] + inv[k][1] * d[1] + inv[k][2] * d[2], unused);
    out.r.data[i] = static_cast<float>(rgb[0]);
    out.g.data[i] = static_cast<float>(rgb[1]);
    out.b.data[i] = static_cast<float>(rgb[2]);
  }
  return out;
}

}  // namespace lfin
