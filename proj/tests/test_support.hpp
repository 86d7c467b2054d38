#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "lfin/light_field.hpp"
#include "lfin/tensor.hpp"

namespace lfin::test {

inline LightField random_lf(int a, int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  LightField lf(a, h, w);
  for (auto& x : lf.data()) x = d(rng);
  return lf;
}

template <typename T>
Tensor<T> random_tensor(std::vector<std::size_t> dims, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor<T> t(std::move(dims));
  for (auto& x : t.values()) x = static_cast<T>(d(rng));
  return t;
}

/// The constant-view example: view (u, v) (1-based) holds 10u + v.
inline LightField constant_view_lf(int a, int h, int w) {
  LightField lf(a, h, w);
  for (int u = 0; u < a; ++u)
    for (int v = 0; v < a; ++v)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) lf.at(u, v, y, x) = static_cast<float>(10 * (u + 1) + (v + 1));
  return lf;
}

// Layout oracles written from the documented 1-based coordinate rules.
// SAI pixel (x, y): u = ceil(x / H), h = x - (u - 1) H.
inline float sai_oracle(const LightField& lf, int x, int y) {
  const int H = lf.height(), W = lf.width();
  const int u = (x + H - 1) / H, v = (y + W - 1) / W;
  const int h = x - (u - 1) * H, w = y - (v - 1) * W;
  return lf.at(u - 1, v - 1, h - 1, w - 1);
}
// MacPI pixel (xi, eta): h = ceil(xi / A), u = xi - (h - 1) A.
inline float macpi_oracle(const LightField& lf, int xi, int eta) {
  const int A = lf.ang_res();
  const int h = (xi + A - 1) / A, w = (eta + A - 1) / A;
  const int u = xi - (h - 1) * A, v = eta - (w - 1) * A;
  return lf.at(u - 1, v - 1, h - 1, w - 1);
}

inline double max_rel_error(const std::vector<double>& got, const std::vector<double>& want) {
  double scale = 0.0, err = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    scale = std::max(scale, std::abs(want[i]));
    err = std::max(err, std::abs(got[i] - want[i]));
  }
  return scale > 0 ? err / scale : err;
}

template <typename T>
std::vector<double> as_doubles(const Tensor<T>& t) {
  return std::vector<double>(t.values().begin(), t.values().end());
}

}  // namespace lfin::test
