#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "lfin/io.hpp"
#include "lfin/metrics.hpp"
#include "lfin/train.hpp"

namespace lfin {

/// Loads every scene of a dataset directory as Y light fields, cropped to the
/// central `ang_res` x `ang_res` views when the data holds more. ang_res = 0
/// keeps the native grid.
std::vector<LightField> load_dataset_y(const std::filesystem::path& dir, int ang_res, int grid_ang_res = 0);

/// Crops every view to extents divisible by `scale` (top-left anchored).
LightField modcrop(const LightField& lf, int scale);
Scene modcrop(const Scene& s, int scale);

/// Super-resolves Y with the network and upsamples Cb/Cr bicubically, then
/// recombines to RGB.
Scene super_resolve_scene(const Scene& lr, const ModelParams<float>& params, const NetConfig& net);

/// One evaluation item: the bicubic LR input and its ground truth.
struct EvalSample {
  std::string name;
  LightField lr;
  LightField gt;
};
using Predictor = std::function<LightField(const EvalSample&)>;

struct EvalOptions {
  int scale = 4;
  int ang_res = 0;  // 0 keeps each scene's grid
  int crop_border = 0;
  int grid_ang_res = 0;
};

/// Ground truth is angularly cropped and modcropped, degraded by bicubic
/// downscaling and passed to `predict`; the result is scored on Y.
MetricReport evaluate_dataset(const std::filesystem::path& dir, const EvalOptions& opt, const Predictor& predict);

/// CSV with columns dataset,scene,u,v,psnr,ssim. Per-view rows use 1-based
/// u, v; scene rows leave u, v empty; the dataset row leaves scene, u, v empty.
void write_report_csv(std::ostream& os, const MetricReport& report);

}  // namespace lfin
