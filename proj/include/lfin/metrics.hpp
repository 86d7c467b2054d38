#pragma once

#include <string>
#include <vector>

#include "lfin/light_field.hpp"

namespace lfin {

/// 10 log10(1 / MSE) for data in [0, 1], capped at kPsnrCap when MSE == 0.
double psnr(const Image& a, const Image& b);
inline constexpr double kPsnrCap = 100.0;

/// Single-scale SSIM: 11 x 11 Gaussian window (sigma 1.5, shrunk to the image
/// when smaller), K1 = 0.01, K2 = 0.03, dynamic range 1, mean over valid positions.
double ssim(const Image& a, const Image& b);

Image crop_border(const Image& img, int border);

struct SceneScores {
  std::string name;
  int ang_res = 0;
  std::vector<double> psnr;  // row-major A x A
  std::vector<double> ssim;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

struct MetricReport {
  std::string dataset;
  std::vector<SceneScores> scenes;
  double psnr = 0.0;  // mean of per-scene means
  double ssim = 0.0;
};

/// Per-view scores of sr against gt (same shape) after cropping `border`
/// pixels from every view edge.
SceneScores evaluate_scene(const std::string& name, const LightField& sr, const LightField& gt, int border = 0);

/// Per-scene means of the A^2 view scores, then the mean over scenes.
/// Throws ParameterError on ragged score lists.
MetricReport aggregate(const std::string& dataset, std::vector<SceneScores> scenes);

}  // namespace lfin
