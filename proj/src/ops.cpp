#include "lfin/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lfin {

namespace {

template <typename T>
void require_rank3(const Tensor<T>& x, const char* op) {
  if (x.rank() != 3) throw ShapeError(std::string(op) + ": expected (C, H, W), got " + x.dims_string());
}

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return -floor_div(-a, b); }

// Output positions o in [lo, hi) whose input tap o*stride + offset lands in [0, in).
struct Span {
  int lo, hi;
};
Span valid_range(int out, int in, int stride, int offset) {
  Span s{std::max(0, ceil_div(-offset, stride)), std::min(out, floor_div(in - 1 - offset, stride) + 1)};
  if (s.hi < s.lo) s.hi = s.lo;
  return s;
}

int conv_out_extent(int in, int k, const ConvGeometry& g) {
  return (in + 2 * g.padding - g.dilation * (k - 1) - 1) / g.stride + 1;
}

template <typename T>
void check_conv(const Tensor<T>& x, const ConvWeights<T>& w, const char* op) {
  require_rank3(x, op);
  if (w.kernel.rank() != 4) throw ShapeError(std::string(op) + ": kernel must be rank 4");
  if (w.bias.size() != w.out_channels()) throw ShapeError(std::string(op) + ": bias size mismatch");
  if (x.channels() != w.in_channels())
    throw ShapeError(std::string(op) + ": input has " + std::to_string(x.channels()) +
                     " channels, kernel expects " + std::to_string(w.in_channels()));
  if (w.geometry.stride < 1 || w.geometry.dilation < 1 || w.geometry.padding < 0)
    throw ShapeError(std::string(op) + ": invalid geometry");
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const ConvWeights<T>& w) {
  check_conv(x, w, "conv2d");
  const int ih = static_cast<int>(x.height()), iw = static_cast<int>(x.width());
  const int ic_n = static_cast<int>(w.in_channels()), oc_n = static_cast<int>(w.out_channels());
  const int kh = static_cast<int>(w.kernel_h()), kw = static_cast<int>(w.kernel_w());
  const auto& g = w.geometry;
  const int oh = conv_out_extent(ih, kh, g), ow = conv_out_extent(iw, kw, g);
  if (oh < 1 || ow < 1) throw ShapeError("conv2d: input smaller than kernel footprint");

  Tensor<T> y({static_cast<std::size_t>(oc_n), static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
  const std::size_t in_plane = static_cast<std::size_t>(ih) * iw;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  const int s = g.stride;

  for (int oc = 0; oc < oc_n; ++oc) {
    T* yp = y.data() + oc * out_plane;
    std::fill(yp, yp + out_plane, w.bias[oc]);
    for (int ic = 0; ic < ic_n; ++ic) {
      const T* xp = x.data() + ic * in_plane;
      const T* kp = w.kernel.data() + (static_cast<std::size_t>(oc) * ic_n + ic) * kh * kw;
      for (int ky = 0; ky < kh; ++ky) {
        const int offy = ky * g.dilation - g.padding;
        const Span ry = valid_range(oh, ih, s, offy);
        for (int kx = 0; kx < kw; ++kx) {
          const T wv = kp[ky * kw + kx];
          const int offx = kx * g.dilation - g.padding;
          const Span rx = valid_range(ow, iw, s, offx);
          for (int oy = ry.lo; oy < ry.hi; ++oy) {
            const T* row = xp + static_cast<std::size_t>(oy * s + offy) * iw + offx;
            T* out = yp + static_cast<std::size_t>(oy) * ow;
            if (s == 1) {
              for (int ox = rx.lo; ox < rx.hi; ++ox) out[ox] += wv * row[ox];
            } else {
              for (int ox = rx.lo; ox < rx.hi; ++ox) out[ox] += wv * row[ox * s];
            }
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const ConvWeights<T>& w, const Tensor<T>& gy) {
  check_conv(x, w, "conv2d_backward");
  const int ih = static_cast<int>(x.height()), iw = static_cast<int>(x.width());
  const int ic_n = static_cast<int>(w.in_channels()), oc_n = static_cast<int>(w.out_channels());
  const int kh = static_cast<int>(w.kernel_h()), kw = static_cast<int>(w.kernel_w());
  const auto& g = w.geometry;
  const int oh = conv_out_extent(ih, kh, g), ow = conv_out_extent(iw, kw, g);
  if (gy.rank() != 3 || gy.channels() != static_cast<std::size_t>(oc_n) ||
      gy.height() != static_cast<std::size_t>(oh) || gy.width() != static_cast<std::size_t>(ow))
    throw ShapeError("conv2d_backward: upstream gradient has shape " + gy.dims_string());

  ConvGrads<T> out{Tensor<T>(x.dims()), Tensor<T>(w.kernel.dims()), Tensor<T>(w.bias.dims())};
  const std::size_t in_plane = static_cast<std::size_t>(ih) * iw;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  const int s = g.stride;

  for (int oc = 0; oc < oc_n; ++oc) {
    const T* gp = gy.data() + oc * out_plane;
    T acc = 0;
    for (std::size_t i = 0; i < out_plane; ++i) acc += gp[i];
    out.bias[oc] = acc;
  }

  for (int oc = 0; oc < oc_n; ++oc) {
    const T* gp = gy.data() + oc * out_plane;
    for (int ic = 0; ic < ic_n; ++ic) {
      const T* xp = x.data() + ic * in_plane;
      T* gxp = out.input.data() + ic * in_plane;
      const std::size_t kbase = (static_cast<std::size_t>(oc) * ic_n + ic) * kh * kw;
      const T* kp = w.kernel.data() + kbase;
      T* gkp = out.kernel.data() + kbase;
      for (int ky = 0; ky < kh; ++ky) {
        const int offy = ky * g.dilation - g.padding;
        const Span ry = valid_range(oh, ih, s, offy);
        for (int kx = 0; kx < kw; ++kx) {
          const T wv = kp[ky * kw + kx];
          const int offx = kx * g.dilation - g.padding;
          const Span rx = valid_range(ow, iw, s, offx);
          T dot = 0;
          for (int oy = ry.lo; oy < ry.hi; ++oy) {
            const std::size_t roff = static_cast<std::size_t>(oy * s + offy) * iw + offx;
            const T* row = xp + roff;
            T* grow = gxp + roff;
            const T* grad = gp + static_cast<std::size_t>(oy) * ow;
            if (s == 1) {
              for (int ox = rx.lo; ox < rx.hi; ++ox) {
                dot += grad[ox] * row[ox];
                grow[ox] += wv * grad[ox];
              }
            } else {
              for (int ox = rx.lo; ox < rx.hi; ++ox) {
                dot += grad[ox] * row[ox * s];
                grow[ox * s] += wv * grad[ox];
              }
            }
          }
          gkp[ky * kw + kx] = dot;
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> afe_forward(const Tensor<T>& x, const ConvWeights<T>& w, int ang_res) {
  require_rank3(x, "afe");
  if (x.height() % ang_res != 0 || x.width() % ang_res != 0)
    throw ShapeError("afe: extent " + x.dims_string() + " not divisible by A=" + std::to_string(ang_res));
  if (w.kernel.rank() != 4 || w.kernel_h() != static_cast<std::size_t>(ang_res) ||
      w.kernel_w() != static_cast<std::size_t>(ang_res) || !(w.geometry == afe_geometry(ang_res)))
    throw ShapeError("afe: weights do not have A x A / stride A geometry");
  return conv2d_forward(x, w);
}

template <typename T>
Tensor<T> sfe_forward(const Tensor<T>& x, const ConvWeights<T>& w, int ang_res) {
  require_rank3(x, "sfe");
  if (x.height() % ang_res != 0 || x.width() % ang_res != 0)
    throw ShapeError("sfe: extent " + x.dims_string() + " not divisible by A=" + std::to_string(ang_res));
  if (w.kernel.rank() != 4 || w.kernel_h() != 3 || w.kernel_w() != 3 ||
      !(w.geometry == sfe_geometry(ang_res)))
    throw ShapeError("sfe: weights do not have 3 x 3 / dilation A geometry");
  return conv2d_forward(x, w);
}

template <typename T>
Tensor<T> conv1x1_forward(const Tensor<T>& x, const ConvWeights<T>& w) {
  if (w.kernel.rank() != 4 || w.kernel_h() != 1 || w.kernel_w() != 1 ||
      !(w.geometry == pointwise_geometry()))
    throw ShapeError("conv1x1: weights are not 1 x 1");
  return conv2d_forward(x, w);
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& gy) {
  if (!x.same_shape(gy)) throw ShapeError("relu_backward: shape mismatch");
  Tensor<T> gx(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) gx[i] = x[i] > T(0) ? gy[i] : T(0);
  return gx;
}

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r) {
  require_rank3(x, "pixel_shuffle");
  if (r < 1) throw ParameterError("pixel_shuffle: factor must be >= 1");
  const std::size_t rr = static_cast<std::size_t>(r) * r;
  if (x.channels() % rr != 0)
    throw ShapeError("pixel_shuffle: " + std::to_string(x.channels()) + " channels not divisible by " +
                     std::to_string(rr));
  const std::size_t c_out = x.channels() / rr, h = x.height(), w = x.width();
  Tensor<T> y({c_out, h * r, w * r});
  for (std::size_t c = 0; c < c_out; ++c)
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b) {
        const std::size_t src = c * rr + a * r + b;
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j) y.at(c, r * i + a, r * j + b) = x.at(src, i, j);
      }
  return y;
}

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, int r) {
  require_rank3(x, "pixel_unshuffle");
  if (r < 1) throw ParameterError("pixel_unshuffle: factor must be >= 1");
  if (x.height() % r != 0 || x.width() % r != 0)
    throw ShapeError("pixel_unshuffle: extent not divisible by factor");
  const std::size_t rr = static_cast<std::size_t>(r) * r;
  const std::size_t c_in = x.channels(), h = x.height() / r, w = x.width() / r;
  Tensor<T> y({c_in * rr, h, w});
  for (std::size_t c = 0; c < c_in; ++c)
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b) {
        const std::size_t dst = c * rr + a * r + b;
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j) y.at(dst, i, j) = x.at(c, r * i + a, r * j + b);
      }
  return y;
}

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int r) {
  require_rank3(x, "upsample_nearest");
  if (r < 1) throw ParameterError("upsample_nearest: factor must be >= 1");
  const std::size_t c_n = x.channels(), h = x.height(), w = x.width();
  Tensor<T> y({c_n, h * r, w * r});
  for (std::size_t c = 0; c < c_n; ++c)
    for (std::size_t i = 0; i < h * r; ++i)
      for (std::size_t j = 0; j < w * r; ++j) y.at(c, i, j) = x.at(c, i / r, j / r);
  return y;
}

template <typename T>
Tensor<T> upsample_nearest_backward(const Tensor<T>& gy, int r) {
  require_rank3(gy, "upsample_nearest_backward");
  if (gy.height() % r != 0 || gy.width() % r != 0)
    throw ShapeError("upsample_nearest_backward: extent not divisible by factor");
  const std::size_t c_n = gy.channels(), h = gy.height() / r, w = gy.width() / r;
  Tensor<T> gx({c_n, h, w});
  for (std::size_t c = 0; c < c_n; ++c)
    for (std::size_t i = 0; i < h * r; ++i)
      for (std::size_t j = 0; j < w * r; ++j) gx.at(c, i / r, j / r) += gy.at(c, i, j);
  return gx;
}

namespace {

struct LinearTap {
  std::size_t i0, i1;
  double t;  // weight of i1
};

std::vector<LinearTap> bilinear_taps(std::size_t in, int r) {
  std::vector<LinearTap> taps(in * r);
  for (std::size_t o = 0; o < in * r; ++o) {
    double src = (static_cast<double>(o) + 0.5) / r - 0.5;
    if (src < 0) src = 0;
    auto i0 = static_cast<std::size_t>(std::floor(src));
    if (i0 > in - 1) i0 = in - 1;
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - static_cast<double>(i0)};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> upsample_bilinear(const Tensor<T>& x, int r) {
  require_rank3(x, "upsample_bilinear");
  if (r < 1) throw ParameterError("upsample_bilinear: factor must be >= 1");
  const std::size_t c_n = x.channels(), h = x.height(), w = x.width();
  const auto ty = bilinear_taps(h, r), tx = bilinear_taps(w, r);
  Tensor<T> y({c_n, h * r, w * r});
  for (std::size_t c = 0; c < c_n; ++c)
    for (std::size_t i = 0; i < h * r; ++i) {
      const T wy1 = static_cast<T>(ty[i].t), wy0 = T(1) - wy1;
      for (std::size_t j = 0; j < w * r; ++j) {
        const T wx1 = static_cast<T>(tx[j].t), wx0 = T(1) - wx1;
        y.at(c, i, j) = wy0 * (wx0 * x.at(c, ty[i].i0, tx[j].i0) + wx1 * x.at(c, ty[i].i0, tx[j].i1)) +
                        wy1 * (wx0 * x.at(c, ty[i].i1, tx[j].i0) + wx1 * x.at(c, ty[i].i1, tx[j].i1));
      }
    }
  return y;
}

template <typename T>
Tensor<T> upsample_bilinear_backward(const Tensor<T>& gy, int r) {
  require_rank3(gy, "upsample_bilinear_backward");
  if (gy.height() % r != 0 || gy.width() % r != 0)
    throw ShapeError("upsample_bilinear_backward: extent not divisible by factor");
  const std::size_t c_n = gy.channels(), h = gy.height() / r, w = gy.width() / r;
  const auto ty = bilinear_taps(h, r), tx = bilinear_taps(w, r);
  Tensor<T> gx({c_n, h, w});
  for (std::size_t c = 0; c < c_n; ++c)
    for (std::size_t i = 0; i < h * r; ++i) {
      const T wy1 = static_cast<T>(ty[i].t), wy0 = T(1) - wy1;
      for (std::size_t j = 0; j < w * r; ++j) {
        const T wx1 = static_cast<T>(tx[j].t), wx0 = T(1) - wx1;
        const T g = gy.at(c, i, j);
        gx.at(c, ty[i].i0, tx[j].i0) += wy0 * wx0 * g;
        gx.at(c, ty[i].i0, tx[j].i1) += wy0 * wx1 * g;
        gx.at(c, ty[i].i1, tx[j].i0) += wy1 * wx0 * g;
        gx.at(c, ty[i].i1, tx[j].i1) += wy1 * wx1 * g;
      }
    }
  return gx;
}

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> xs) {
  if (xs.empty()) throw ShapeError("concat_channels: empty input list");
  std::size_t c_total = 0;
  for (const auto& x : xs) {
    require_rank3(x, "concat_channels");
    if (x.height() != xs[0].height() || x.width() != xs[0].width())
      throw ShapeError("concat_channels: spatial extent mismatch " + x.dims_string() + " vs " +
                       xs[0].dims_string());
    c_total += x.channels();
  }
  Tensor<T> y({c_total, xs[0].height(), xs[0].width()});
  auto* dst = y.data();
  for (const auto& x : xs) dst = std::copy(x.data(), x.data() + x.size(), dst);
  return y;
}

template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& gy, std::span<const std::size_t> channels) {
  require_rank3(gy, "split_channels");
  std::size_t total = 0;
  for (auto c : channels) total += c;
  if (total != gy.channels()) throw ShapeError("split_channels: channel counts do not sum to input");
  const std::size_t plane = gy.height() * gy.width();
  std::vector<Tensor<T>> out;
  const T* src = gy.data();
  for (auto c : channels) {
    Tensor<T> part({c, gy.height(), gy.width()});
    std::copy(src, src + c * plane, part.data());
    src += c * plane;
    out.push_back(std::move(part));
  }
  return out;
}

template <typename T>
Tensor<T> residual_add(const Tensor<T>& x, const Tensor<T>& y) {
  if (!x.same_shape(y))
    throw ShapeError("residual_add: shape mismatch " + x.dims_string() + " vs " + y.dims_string());
  Tensor<T> z(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] + y[i];
  return z;
}

template <typename T>
Tensor<T> macpi_to_sai_tensor(const Tensor<T>& x, int ang_res) {
  require_rank3(x, "macpi_to_sai");
  if (x.height() % ang_res != 0 || x.width() % ang_res != 0)
    throw ShapeError("macpi_to_sai: extent not divisible by A");
  const std::size_t a = ang_res, h = x.height() / a, w = x.width() / a;
  Tensor<T> y(x.dims());
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t hh = 0; hh < h; ++hh)
      for (std::size_t u = 0; u < a; ++u)
        for (std::size_t ww = 0; ww < w; ++ww)
          for (std::size_t v = 0; v < a; ++v) y.at(c, u * h + hh, v * w + ww) = x.at(c, hh * a + u, ww * a + v);
  return y;
}

template <typename T>
Tensor<T> sai_to_macpi_tensor(const Tensor<T>& x, int ang_res) {
  require_rank3(x, "sai_to_macpi");
  if (x.height() % ang_res != 0 || x.width() % ang_res != 0)
    throw ShapeError("sai_to_macpi: extent not divisible by A");
  const std::size_t a = ang_res, h = x.height() / a, w = x.width() / a;
  Tensor<T> y(x.dims());
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t hh = 0; hh < h; ++hh)
      for (std::size_t u = 0; u < a; ++u)
        for (std::size_t ww = 0; ww < w; ++ww)
          for (std::size_t v = 0; v < a; ++v) y.at(c, hh * a + u, ww * a + v) = x.at(c, u * h + hh, v * w + ww);
  return y;
}

#define LFIN_INSTANTIATE_OPS(T)                                                                   \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const ConvWeights<T>&);                     \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const ConvWeights<T>&, const Tensor<T>&); \
  template Tensor<T> afe_forward(const Tensor<T>&, const ConvWeights<T>&, int);                   \
  template Tensor<T> sfe_forward(const Tensor<T>&, const ConvWeights<T>&, int);                   \
  template Tensor<T> conv1x1_forward(const Tensor<T>&, const ConvWeights<T>&);                    \
  template Tensor<T> relu_forward(const Tensor<T>&);                                              \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> pixel_shuffle(const Tensor<T>&, int);                                        \
  template Tensor<T> pixel_unshuffle(const Tensor<T>&, int);                                      \
  template Tensor<T> upsample_nearest(const Tensor<T>&, int);                                     \
  template Tensor<T> upsample_nearest_backward(const Tensor<T>&, int);                            \
  template Tensor<T> upsample_bilinear(const Tensor<T>&, int);                                    \
  template Tensor<T> upsample_bilinear_backward(const Tensor<T>&, int);                           \
  template Tensor<T> concat_channels(std::span<const Tensor<T>>);                                 \
  template std::vector<Tensor<T>> split_channels(const Tensor<T>&, std::span<const std::size_t>); \
  template Tensor<T> residual_add(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> macpi_to_sai_tensor(const Tensor<T>&, int);                                  \
  template Tensor<T> sai_to_macpi_tensor(const Tensor<T>&, int);

LFIN_INSTANTIATE_OPS(float)
LFIN_INSTANTIATE_OPS(double)

}  // namespace lfin
