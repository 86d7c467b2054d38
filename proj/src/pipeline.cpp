#include "lfin/pipeline.hpp"

#include <cstdio>

#include "lfin/errors.hpp"

namespace lfin {

namespace fs = std::filesystem;

std::vector<LightField> load_dataset_y(const fs::path& dir, int ang_res, int grid_ang_res) {
  std::vector<LightField> out;
  for (const auto& entry : list_dataset(dir, grid_ang_res)) {
    LightField y = load_scene(entry.source).y;
    if (ang_res > 0 && y.ang_res() != ang_res) {
      if (y.ang_res() < ang_res)
        throw ShapeError("scene '" + entry.name + "' has A=" + std::to_string(y.ang_res()) + ", fewer than " +
                         std::to_string(ang_res));
      y = center_crop_angular(y, ang_res);
    }
    out.push_back(std::move(y));
  }
  return out;
}

LightField modcrop(const LightField& lf, int scale) {
  if (scale < 1) throw ParameterError("modcrop: scale must be >= 1");
  const int h = lf.height() - lf.height() % scale, w = lf.width() - lf.width() % scale;
  if (h == 0 || w == 0) throw ShapeError("views smaller than the scale factor");
  if (h == lf.height() && w == lf.width()) return lf;
  LightField out(lf.ang_res(), h, w);
  for (int u = 0; u < lf.ang_res(); ++u)
    for (int v = 0; v < lf.ang_res(); ++v)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) out.at(u, v, i, j) = lf.at(u, v, i, j);
  return out;
}

Scene modcrop(const Scene& s, int scale) {
  return Scene{{modcrop(s.rgb[0], scale), modcrop(s.rgb[1], scale), modcrop(s.rgb[2], scale)}, modcrop(s.y, scale)};
}

Scene super_resolve_scene(const Scene& lr, const ModelParams<float>& params, const NetConfig& net) {
  if (lr.y.ang_res() != net.ang_res)
    throw ShapeError("scene has A=" + std::to_string(lr.y.ang_res()) + ", model expects A=" +
                     std::to_string(net.ang_res));
  const LightField sr_y = super_resolve(lr.y, params, net);
  const Scale up{net.scale, 1};
  const int a = net.ang_res;
  std::array<LightField, 3> rgb;
  for (auto& p : rgb) p = LightField(a, sr_y.height(), sr_y.width());
  for (int u = 0; u < a; ++u)
    for (int v = 0; v < a; ++v) {
      const auto ycc = rgb_to_ycbcr({extract_view(lr.rgb[0], u, v), extract_view(lr.rgb[1], u, v),
                                     extract_view(lr.rgb[2], u, v)});
      const auto out = recombine_ycbcr(extract_view(sr_y, u, v), bicubic_resize(ycc.cb, up), bicubic_resize(ycc.cr, up));
      set_view(rgb[0], u, v, out.r);
      set_view(rgb[1], u, v, out.g);
      set_view(rgb[2], u, v, out.b);
    }
  // Y is kept as predicted rather than recomputed from the clamped RGB
  return Scene{std::move(rgb), sr_y};
}

MetricReport evaluate_dataset(const fs::path& dir, const EvalOptions& opt, const Predictor& predict) {
  std::vector<SceneScores> scenes;
  for (const auto& entry : list_dataset(dir, opt.grid_ang_res)) {
    LightField gt = load_scene(entry.source).y;
    if (opt.ang_res > 0 && gt.ang_res() != opt.ang_res) {
      if (gt.ang_res() < opt.ang_res)
        throw ShapeError("scene '" + entry.name + "' has A=" + std::to_string(gt.ang_res()) + ", fewer than " +
                         std::to_string(opt.ang_res));
      gt = center_crop_angular(gt, opt.ang_res);
    }
    gt = modcrop(gt, opt.scale);
    EvalSample sample{entry.name, resize_views(gt, {1, opt.scale}), gt};
    const LightField sr = predict(sample);
    scenes.push_back(evaluate_scene(entry.name, sr, gt, opt.crop_border));
  }
  return aggregate(dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string(),
                   std::move(scenes));
}

void write_report_csv(std::ostream& os, const MetricReport& report) {
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return std::string(buf);
  };
  os << "dataset,scene,u,v,psnr,ssim\n";
  for (const auto& s : report.scenes) {
    for (int u = 0; u < s.ang_res; ++u)
      for (int v = 0; v < s.ang_res; ++v) {
        const std::size_t i = static_cast<std::size_t>(u) * s.ang_res + v;
        os << report.dataset << ',' << s.name << ',' << u + 1 << ',' << v + 1 << ',' << num(s.psnr[i]) << ','
           << num(s.ssim[i]) << '\n';
      }
    os << report.dataset << ',' << s.name << ",,," << num(s.mean_psnr) << ',' << num(s.mean_ssim) << '\n';
  }
  os << report.dataset << ",,,," << num(report.psnr) << ',' << num(report.ssim) << '\n';
}

}  // namespace lfin
