#include "lfin/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "lfin/errors.hpp"

namespace lfin {

namespace {

void require_same(const Image& a, const Image& b, const char* what) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw ShapeError(std::string(what) + ": images differ in extent (" + std::to_string(a.rows) + "x" +
                     std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" + std::to_string(b.cols) + ")");
  if (a.data.empty()) throw ShapeError(std::string(what) + ": empty image");
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  const double c = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    w[i] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    total += w[i];
  }
  for (auto& x : w) x /= total;
  return w;
}

// "valid" separable filtering of a rows x cols double plane
std::vector<double> filter_valid(const std::vector<double>& in, int rows, int cols, const std::vector<double>& k,
                                 int& out_rows, int& out_cols) {
  const int n = static_cast<int>(k.size());
  out_rows = rows - n + 1;
  out_cols = cols - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(out_rows) * cols);
  for (int r = 0; r < out_rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int t = 0; t < n; ++t) acc += k[t] * in[static_cast<std::size_t>(r + t) * cols + c];
      tmp[static_cast<std::size_t>(r) * cols + c] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(out_rows) * out_cols);
  for (int r = 0; r < out_rows; ++r)
    for (int c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (int t = 0; t < n; ++t) acc += k[t] * tmp[static_cast<std::size_t>(r) * cols + c + t];
      out[static_cast<std::size_t>(r) * out_cols + c] = acc;
    }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same(a, b, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
  require_same(a, b, "ssim");
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const int size = std::min({11, a.rows, a.cols});
  const auto k = gaussian_window(size, 1.5);

  const std::size_t n = a.data.size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = a.data[i];
    y[i] = b.data[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  int r = 0, c = 0;
  const auto mx = filter_valid(x, a.rows, a.cols, k, r, c);
  const auto my = filter_valid(y, a.rows, a.cols, k, r, c);
  const auto sxx = filter_valid(xx, a.rows, a.cols, k, r, c);
  const auto syy = filter_valid(yy, a.rows, a.cols, k, r, c);
  const auto sxy = filter_valid(xy, a.rows, a.cols, k, r, c);

  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

Image crop_border(const Image& img, int border) {
  if (border < 0) throw ParameterError("border must be >= 0");
  if (border == 0) return img;
  if (2 * border >= img.rows || 2 * border >= img.cols) throw ParameterError("border crop removes the whole image");
  Image out(img.rows - 2 * border, img.cols - 2 * border);
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) out.at(r, c) = img.at(r + border, c + border);
  return out;
}

SceneScores evaluate_scene(const std::string& name, const LightField& sr, const LightField& gt, int border) {
  if (sr.ang_res() != gt.ang_res() || sr.height() != gt.height() || sr.width() != gt.width())
    throw ShapeError("evaluate_scene: prediction and ground truth differ in shape");
  SceneScores s;
  s.name = name;
  s.ang_res = gt.ang_res();
  for (int u = 0; u < gt.ang_res(); ++u)
    for (int v = 0; v < gt.ang_res(); ++v) {
      const Image p = crop_border(extract_view(sr, u, v), border);
      const Image g = crop_border(extract_view(gt, u, v), border);
      s.psnr.push_back(psnr(p, g));
      s.ssim.push_back(ssim(p, g));
    }
  return s;
}

MetricReport aggregate(const std::string& dataset, std::vector<SceneScores> scenes) {
  if (scenes.empty()) throw ParameterError("aggregate: no scenes");
  MetricReport report{dataset, std::move(scenes), 0.0, 0.0};
  for (auto& s : report.scenes) {
    const auto views = static_cast<std::size_t>(s.ang_res) * s.ang_res;
    if (s.ang_res < 1 || s.psnr.size() != views || s.ssim.size() != views)
      throw ParameterError("aggregate: scene '" + s.name + "' does not hold A^2 view scores");
    double p = 0.0, q = 0.0;
    for (std::size_t i = 0; i < views; ++i) {
      p += s.psnr[i];
      q += s.ssim[i];
    }
    s.mean_psnr = p / static_cast<double>(views);
    s.mean_ssim = q / static_cast<double>(views);
    report.psnr += s.mean_psnr;
    report.ssim += s.mean_ssim;
  }
  report.psnr /= static_cast<double>(report.scenes.size());
  report.ssim /= static_cast<double>(report.scenes.size());
  return report;
}

}  // namespace lfin
