// lfin: command-line front end for light-field super-resolution.
//
// Subcommands: convert, degrade, train, infer, eval, info. Failures print a
// single line "error[<kind>]: <message>" to stderr and exit nonzero.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "lfin/errors.hpp"
#include "lfin/io.hpp"
#include "lfin/pipeline.hpp"

namespace fs = std::filesystem;
using namespace lfin;

namespace {

const std::vector<std::string> kLayouts{"views-dir", "sai-grid", "macpi"};

// Architecture flags shared by train and info. Later sources override
// earlier ones: --config-file, then --config, then individual flags.
struct ArchOptions {
  std::string config_file;
  std::string config;
  std::optional<int> n, k, c, angres, scale;
  std::optional<std::string> variant, ang_upsample, interactions;

  void add(CLI::App* app, bool with_angres_scale) {
    app->add_option("--config-file", config_file, "key=value architecture file");
    app->add_option("--config", config, "comma-separated key=value settings");
    app->add_option("--n", n, "Inter-Groups N")->check(CLI::PositiveNumber);
    app->add_option("--k", k, "Inter-Blocks per group K")->check(CLI::PositiveNumber);
    app->add_option("--c", c, "feature channels C")->check(CLI::PositiveNumber);
    if (with_angres_scale) {
      app->add_option("--angres", angres, "angular resolution A")->check(CLI::PositiveNumber);
      app->add_option("--scale", scale, "upscaling factor")->check(CLI::IsMember({2, 4}));
    }
    app->add_option("--variant", variant, "full | spatial-only | angular-only");
    app->add_option("--ang-upsample", ang_upsample, "pixel-shuffle | nearest | bilinear");
    app->add_option("--interactions", interactions, "per-group interaction flags, e.g. 1,1,0,1");
  }

  NetConfig build() const {
    NetConfig cfg;
    if (!config_file.empty()) cfg = read_config_file(config_file, cfg);
    std::stringstream ss(config);
    for (std::string item; std::getline(ss, item, ',');) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("--config entry '" + item + "' is not key=value");
      std::string key = item.substr(0, eq), value = item.substr(eq + 1);
      // interactions itself uses commas; let it consume the remaining entries
      if (key == "interactions")
        for (std::string rest; std::getline(ss, rest, ',');) value += "," + rest;
      apply_config_setting(cfg, key, value);
    }
    if (n) cfg.n_groups = *n;
    if (k) cfg.blocks_per_group = *k;
    if (c) cfg.channels = *c;
    if (angres) cfg.ang_res = *angres;
    if (scale) cfg.scale = *scale;
    if (variant) cfg.variant = parse_variant(*variant);
    if (ang_upsample) cfg.ang_upsample = parse_ang_upsample(*ang_upsample);
    if (interactions) apply_config_setting(cfg, "interactions", *interactions);
    cfg.validate();
    return cfg;
  }
};

std::string describe(const NetConfig& c) {
  std::ostringstream os;
  os << "N=" << c.n_groups << " K=" << c.blocks_per_group << " C=" << c.channels << " A=" << c.ang_res
     << " scale=" << c.scale << " variant=" << to_string(c.variant) << " ang_upsample=" << to_string(c.ang_upsample);
  if (!c.interactions.empty()) {
    os << " interactions=";
    for (std::size_t i = 0; i < c.interactions.size(); ++i) os << (i ? "," : "") << (c.interactions[i] ? 1 : 0);
  }
  return os.str();
}

bool looks_like_views_dir(const fs::path& p) {
  return fs::is_directory(p) && fs::exists(p / view_file_name(0, 0));
}

Layout input_layout(const fs::path& p, const std::string& from) {
  if (!from.empty()) return parse_layout(from);
  return fs::is_directory(p) ? Layout::views_dir : Layout::sai_grid;
}

int cmd_convert(const fs::path& in, const std::string& from, const std::string& to, const fs::path& out, int angres) {
  const Scene s = load_scene({in, parse_layout(from), angres});
  save_scene(s, out, parse_layout(to));
  std::cerr << "converted " << in.string() << " (A=" << s.y.ang_res() << ", " << s.y.height() << "x" << s.y.width()
            << " views) to " << to << "\n";
  return 0;
}

int cmd_degrade(const fs::path& in, const std::string& from, int angres, int scale, const fs::path& out) {
  // a directory without view files is treated as a dataset of scenes
  if (from.empty() && fs::is_directory(in) && !looks_like_views_dir(in)) {
    int count = 0;
    for (const auto& e : list_dataset(in, angres)) {
      const Scene s = load_scene(e.source);
      const fs::path target = e.source.layout == Layout::views_dir ? out / e.name : out / (e.name + ".png");
      save_scene(resize_scene(modcrop(s, scale), {1, scale}), target, e.source.layout);
      ++count;
    }
    std::cerr << "degraded " << count << " scenes by 1/" << scale << " into " << out.string() << "\n";
    return 0;
  }
  const Layout layout = input_layout(in, from);
  const Scene s = load_scene({in, layout, angres});
  save_scene(resize_scene(modcrop(s, scale), {1, scale}), out, layout);
  return 0;
}

struct TrainArgs {
  fs::path data, out, trace;
  int data_angres = 0;
  std::uint64_t seed = 0;
  TrainConfig tc;
};

int cmd_train(const TrainArgs& a, const NetConfig& net) {
  TrainConfig tc = a.tc;
  tc.scale = net.scale;
  tc.seed = a.seed;
  const auto dataset = load_dataset_y(a.data, net.ang_res, a.data_angres);
  std::cerr << "training " << describe(net) << " on " << dataset.size() << " scenes, " << count_params(net)
            << " parameters\n";

  std::ofstream trace_file;
  std::ostream* trace = &std::cout;
  if (!a.trace.empty()) {
    trace_file.open(a.trace);
    if (!trace_file) throw LoadError("cannot write '" + a.trace.string() + "'");
    trace = &trace_file;
  }
  *trace << "iter,epoch,loss\n";
  char line[96];
  const auto result = train(dataset, net, tc, [&](const LossRecord& r) {
    std::snprintf(line, sizeof line, "%lld,%d,%.8g\n", static_cast<long long>(r.iter), r.epoch, r.loss);
    *trace << line << std::flush;
  });
  save_weights(a.out, net, result.params);
  std::cerr << "wrote " << a.out.string() << " after " << result.trace.size() << " iterations\n";
  return 0;
}

int cmd_infer(const fs::path& weights, const fs::path& in, const std::string& from, const std::string& to,
              const fs::path& out) {
  const auto wf = load_weights(weights);
  const Layout layout = input_layout(in, from);
  Scene lr = load_scene({in, layout, layout == Layout::views_dir ? 0 : wf.config.ang_res});
  if (lr.y.ang_res() > wf.config.ang_res) lr = crop_scene_angular(lr, wf.config.ang_res);
  const Scene sr = super_resolve_scene(lr, wf.params, wf.config);
  save_scene(sr, out, to.empty() ? layout : parse_layout(to));
  std::cerr << "super-resolved " << lr.y.height() << "x" << lr.y.width() << " views to " << sr.y.height() << "x"
            << sr.y.width() << "\n";
  return 0;
}

struct EvalArgs {
  fs::path weights, data, report;
  std::string baseline;
  int crop_border = 0;
  int data_angres = 0;
  std::optional<int> scale, angres;
};

int cmd_eval(const EvalArgs& a) {
  EvalOptions opt;
  opt.crop_border = a.crop_border;
  opt.grid_ang_res = a.data_angres;
  Predictor predict;
  std::optional<WeightFile> wf;
  if (!a.weights.empty()) {
    wf = load_weights(a.weights);
    opt.scale = wf->config.scale;
    opt.ang_res = wf->config.ang_res;
    if (a.scale && *a.scale != opt.scale) throw ConfigError("--scale disagrees with the weight file");
    predict = [&](const EvalSample& s) { return super_resolve(s.lr, wf->params, wf->config); };
  } else {
    if (a.baseline.empty()) throw ConfigError("eval needs --weights or --baseline");
    opt.scale = a.scale.value_or(4);
    opt.ang_res = a.angres.value_or(0);
    const int scale = opt.scale;
    if (a.baseline == "bicubic")
      predict = [scale](const EvalSample& s) { return resize_views(s.lr, {scale, 1}); };
    else
      predict = [](const EvalSample& s) { return s.gt; };
  }
  if (wf && a.angres && *a.angres != opt.ang_res) throw ConfigError("--angres disagrees with the weight file");

  const MetricReport report = evaluate_dataset(a.data, opt, predict);
  std::ofstream os(a.report);
  if (!os) throw LoadError("cannot write '" + a.report.string() + "'");
  write_report_csv(os, report);
  std::printf("%s: %zu scenes, PSNR %.4f dB, SSIM %.6f\n", report.dataset.c_str(), report.scenes.size(), report.psnr,
              report.ssim);
  return 0;
}

int cmd_info(const fs::path& weights, const ArchOptions& arch, const std::string& input_hw) {
  int h = 0, w = 0;
  char x = 0;
  std::istringstream hw(input_hw);
  if (!(hw >> h >> x >> w) || x != 'x' || h < 1 || w < 1 || !hw.eof())
    throw ConfigError("--input-hw expects HxW, got '" + input_hw + "'");
  const NetConfig cfg = weights.empty() ? arch.build() : load_weights(weights).config;
  const auto params = count_params(cfg);
  const auto flops = count_flops(cfg, h, w);
  std::printf("config %s\n", describe(cfg).c_str());
  std::printf("input %dx%dx%dx%d\n", cfg.ang_res, cfg.ang_res, h, w);
  std::printf("params %llu (%.2fM)\n", static_cast<unsigned long long>(params), params / 1e6);
  std::printf("flops %llu (%.2fG)\n", static_cast<unsigned long long>(flops), flops / 1e9);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Light-field spatial super-resolution with spatial-angular feature interaction"};
  app.require_subcommand(1);

  // convert
  std::string conv_in, conv_from, conv_to, conv_out;
  int conv_angres = 0;
  auto* convert = app.add_subcommand("convert", "Convert a scene between layouts");
  convert->add_option("--in", conv_in, "input scene")->required();
  convert->add_option("--from", conv_from, "input layout")->required()->check(CLI::IsMember(kLayouts));
  convert->add_option("--to", conv_to, "output layout")->required()->check(CLI::IsMember(kLayouts));
  convert->add_option("--out", conv_out, "output path")->required();
  convert->add_option("--angres", conv_angres, "angular resolution of grid inputs")->check(CLI::PositiveNumber);

  // degrade
  std::string deg_in, deg_out, deg_from;
  int deg_scale = 4, deg_angres = 0;
  auto* degrade = app.add_subcommand("degrade", "Bicubic downscaling of every view");
  degrade->add_option("--in", deg_in, "input scene or dataset directory")->required();
  degrade->add_option("--scale", deg_scale, "downscaling factor")->required()->check(CLI::IsMember({2, 4}));
  degrade->add_option("--out", deg_out, "output path")->required();
  degrade->add_option("--from", deg_from, "input layout (default: by path type)")->check(CLI::IsMember(kLayouts));
  degrade->add_option("--angres", deg_angres, "angular resolution of grid inputs")->check(CLI::PositiveNumber);

  // train
  TrainArgs ta;
  ArchOptions train_arch;
  auto* trainc = app.add_subcommand("train", "Train a model; prints the loss trace as CSV");
  trainc->add_option("--data", ta.data, "dataset directory")->required();
  trainc->add_option("--seed", ta.seed, "random seed")->required();
  trainc->add_option("--out", ta.out, "weight file")->required();
  train_arch.add(trainc, true);
  trainc->get_option("--scale")->required();
  trainc->get_option("--angres")->required();
  trainc->add_option("--epochs", ta.tc.epochs, "epochs")->check(CLI::PositiveNumber);
  trainc->add_option("--batch", ta.tc.batch, "batch size")->check(CLI::PositiveNumber);
  trainc->add_option("--patch", ta.tc.patch, "HR patch side")->check(CLI::PositiveNumber);
  trainc->add_option("--lr", ta.tc.lr0, "initial learning rate")->check(CLI::PositiveNumber);
  trainc->add_option("--lr-halve-every", ta.tc.lr_halve_every, "epochs per halving")->check(CLI::PositiveNumber);
  trainc->add_option("--patches-per-scene", ta.tc.patches_per_scene, "crops per scene and epoch")
      ->check(CLI::PositiveNumber);
  trainc->add_option("--max-iters", ta.tc.max_iterations, "stop after this many steps (0 = all epochs)")
      ->check(CLI::NonNegativeNumber);
  trainc->add_flag("!--no-augment", ta.tc.augment, "disable flip/rotation augmentation");
  trainc->add_option("--trace", ta.trace, "write the loss trace here instead of stdout");
  trainc->add_option("--data-angres", ta.data_angres, "views per axis of sai-grid scenes")->check(CLI::PositiveNumber);

  // infer
  std::string inf_weights, inf_in, inf_out, inf_from, inf_to;
  auto* infer = app.add_subcommand("infer", "Super-resolve one scene");
  infer->add_option("--weights", inf_weights, "weight file")->required();
  infer->add_option("--in", inf_in, "LR scene")->required();
  infer->add_option("--out", inf_out, "output path")->required();
  infer->add_option("--from", inf_from, "input layout (default: by path type)")->check(CLI::IsMember(kLayouts));
  infer->add_option("--to", inf_to, "output layout (default: input layout)")->check(CLI::IsMember(kLayouts));

  // eval
  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score a model on a ground-truth dataset");
  eval->add_option("--weights", ea.weights, "weight file");
  eval->add_option("--data", ea.data, "ground-truth dataset directory")->required();
  eval->add_option("--report", ea.report, "CSV report path")->required();
  eval->add_option("--crop-border", ea.crop_border, "pixels cropped from every view edge")
      ->check(CLI::NonNegativeNumber);
  eval->add_option("--baseline", ea.baseline, "score a reference predictor instead of a model")
      ->check(CLI::IsMember({"bicubic", "identity"}));
  eval->add_option("--scale", ea.scale, "factor for baselines")->check(CLI::IsMember({2, 4}));
  eval->add_option("--angres", ea.angres, "central views to keep")->check(CLI::PositiveNumber);
  eval->add_option("--data-angres", ea.data_angres, "views per axis of sai-grid scenes")->check(CLI::PositiveNumber);

  // info
  std::string info_weights, info_hw = "32x32";
  ArchOptions info_arch;
  auto* info = app.add_subcommand("info", "Print parameter count and FLOPs");
  auto* info_w = info->add_option("--weights", info_weights, "weight file");
  info_arch.add(info, true);
  info->add_option("--input-hw", info_hw, "LR view size HxW");
  for (const char* flag : {"--config-file", "--config"}) info_w->excludes(info->get_option(flag));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[usage]: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*convert) return cmd_convert(conv_in, conv_from, conv_to, conv_out, conv_angres);
    if (*degrade) return cmd_degrade(deg_in, deg_from, deg_angres, deg_scale, deg_out);
    if (*trainc) return cmd_train(ta, train_arch.build());
    if (*infer) return cmd_infer(inf_weights, inf_in, inf_from, inf_to, inf_out);
    if (*eval) return cmd_eval(ea);
    if (*info) return cmd_info(info_weights, info_arch, info_hw);
  } catch (const lfin::Error& e) {
    std::cerr << "error[" << e.kind() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
