#include "lfin/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lfin {

void TrainConfig::validate() const {
  if (lr0 <= 0 || lr_halve_every < 1 || epochs < 1 || batch < 1 || patch < 1 || scale < 1 ||
      patches_per_scene < 1 || max_iterations < 0)
    throw ParameterError("training parameters must be positive");
  if (patch % scale != 0)
    throw ParameterError("patch " + std::to_string(patch) + " not divisible by scale " + std::to_string(scale));
}

namespace {

struct Coord {
  int i, j;
};

// Source coordinate in an n_rows x n_cols array for output (i, j) under `code`.
Coord dihedral_source(int code, int n_rows, int n_cols, int i, int j) {
  for (int t = 0; t < (code & 3); ++t) {
    const int ni = j, nj = n_rows - 1 - i;  // square when rotating
    i = ni;
    j = nj;
  }
  if (code & 4) j = n_cols - 1 - j;
  return {i, j};
}

void check_code(int code) {
  if (code < 0 || code > 7) throw ParameterError("augmentation code must be in 0..7");
}

}  // namespace

int inverse_code(int code) {
  check_code(code);
  if (code & 4) return code;
  return (4 - code) & 3;
}

Image dihedral_2d(const Image& img, int code) {
  check_code(code);
  if ((code & 3) != 0 && img.rows != img.cols) throw ParameterError("rotation requires a square image");
  Image out(img.rows, img.cols);
  for (int i = 0; i < img.rows; ++i)
    for (int j = 0; j < img.cols; ++j) {
      const Coord s = dihedral_source(code, img.rows, img.cols, i, j);
      out.at(i, j) = img.at(s.i, s.j);
    }
  return out;
}

LightField augment(const LightField& lf, int code) {
  check_code(code);
  const int a = lf.ang_res(), h = lf.height(), w = lf.width();
  if ((code & 3) != 0 && h != w)
    throw ParameterError("rotation requested on a non-square " + std::to_string(h) + "x" + std::to_string(w) +
                         " patch");
  LightField out(a, h, w);
  for (int u = 0; u < a; ++u)
    for (int v = 0; v < a; ++v) {
      const Coord sa = dihedral_source(code, a, a, u, v);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const Coord ss = dihedral_source(code, h, w, y, x);
          out.at(u, v, y, x) = lf.at(sa.i, sa.j, ss.i, ss.j);
        }
    }
  return out;
}

LightField random_crop(const LightField& lf, int patch, std::mt19937_64& rng) {
  if (patch > lf.height() || patch > lf.width())
    throw ParameterError("patch " + std::to_string(patch) + " larger than view " + std::to_string(lf.height()) + "x" +
                         std::to_string(lf.width()));
  std::uniform_int_distribution<int> dy(0, lf.height() - patch), dx(0, lf.width() - patch);
  const int y0 = dy(rng), x0 = dx(rng);
  LightField out(lf.ang_res(), patch, patch);
  for (int u = 0; u < lf.ang_res(); ++u)
    for (int v = 0; v < lf.ang_res(); ++v)
      for (int y = 0; y < patch; ++y)
        for (int x = 0; x < patch; ++x) out.at(u, v, y, x) = lf.at(u, v, y0 + y, x0 + x);
  return out;
}

Sample degrade_pair(const LightField& hr, int scale) {
  if (hr.height() % scale != 0 || hr.width() % scale != 0)
    throw ParameterError("HR view extent not divisible by scale " + std::to_string(scale));
  const LightField lr = resize_views(hr, Scale{1, scale});
  return Sample{lf_to_macpi(lr), lf_to_sai_array(hr)};
}

Sample make_training_pair(const LightField& lf_hr, const TrainConfig& cfg, std::mt19937_64& rng, int code) {
  cfg.validate();
  return degrade_pair(augment(random_crop(lf_hr, cfg.patch, rng), code), cfg.scale);
}

L1Result l1_loss(const Tensor<double>& pred, const Tensor<double>& target) {
  if (!pred.same_shape(target)) throw ShapeError("l1_loss: shape mismatch");
  L1Result r{0.0, Tensor<double>(pred.dims())};
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    r.loss += std::abs(d);
    r.grad[i] = d > 0 ? 1.0 / n : (d < 0 ? -1.0 / n : 0.0);
  }
  r.loss /= n;
  return r;
}

AdamState make_adam_state(const ModelParams<float>& params) {
  AdamState s;
  for (const auto& [name, w] : params) {
    ConvWeights<float> z{Tensor<float>(w.kernel.dims()), Tensor<float>(w.bias.dims()), w.geometry};
    s.m.emplace(name, z);
    s.v.emplace(name, z);
  }
  return s;
}

namespace {

void adam_update(Tensor<float>& p, const Tensor<float>& g, Tensor<float>& m, Tensor<float>& v, const AdamState& s,
                 double lr, double bc1, double bc2) {
  if (!p.same_shape(g) || !p.same_shape(m) || !p.same_shape(v))
    throw StateError("adam: buffer shape mismatch " + p.dims_string() + " vs " + g.dims_string());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g[i];
    const double mi = s.beta1 * m[i] + (1.0 - s.beta1) * gi;
    const double vi = s.beta2 * v[i] + (1.0 - s.beta2) * gi * gi;
    m[i] = static_cast<float>(mi);
    v[i] = static_cast<float>(vi);
    p[i] = static_cast<float>(p[i] - lr * (mi / bc1) / (std::sqrt(vi / bc2) + s.eps));
  }
}

}  // namespace

void adam_step(ModelParams<float>& params, const ModelParams<float>& grads, AdamState& state, double lr) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw StateError("adam: gradient/moment layer sets do not mirror params");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (auto& [name, w] : params) {
    auto g = grads.find(name);
    auto m = state.m.find(name);
    auto v = state.v.find(name);
    if (g == grads.end() || m == state.m.end() || v == state.v.end())
      throw StateError("adam: no buffers for layer '" + name + "'");
    adam_update(w.kernel, g->second.kernel, m->second.kernel, v->second.kernel, state, lr, bc1, bc2);
    adam_update(w.bias, g->second.bias, m->second.bias, v->second.bias, state, lr, bc1, bc2);
  }
}

double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw ParameterError("epoch must be >= 0");
  return cfg.lr0 * std::pow(0.5, epoch / cfg.lr_halve_every);
}

TrainResult train(const std::vector<LightField>& dataset, const NetConfig& net, const TrainConfig& cfg,
                  const IterationCallback& on_iteration, const ModelParams<float>* initial) {
  cfg.validate();
  net.validate();
  if (dataset.empty()) throw ParameterError("training dataset is empty");
  if (cfg.scale != net.scale) throw ParameterError("training scale differs from network scale");
  for (const auto& lf : dataset)
    if (lf.ang_res() != net.ang_res)
      throw ParameterError("scene with A=" + std::to_string(lf.ang_res()) + " in a dataset for A=" +
                           std::to_string(net.ang_res));

  std::mt19937_64 rng(cfg.seed);
  TrainResult result{initial ? *initial : init_params(net, cfg.seed), {}};
  check_params(result.params, net);
  AdamState adam = make_adam_state(result.params);
  std::uniform_int_distribution<int> code_dist(0, 7);

  std::vector<std::size_t> pool;
  for (std::size_t s = 0; s < dataset.size(); ++s)
    for (int k = 0; k < cfg.patches_per_scene; ++k) pool.push_back(s);

  std::int64_t iter = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(pool.begin(), pool.end(), rng);
    const double lr = lr_at(epoch, cfg);
    for (std::size_t start = 0; start < pool.size(); start += cfg.batch) {
      if (cfg.max_iterations > 0 && iter >= cfg.max_iterations) return result;
      const std::size_t end = std::min(pool.size(), start + static_cast<std::size_t>(cfg.batch));
      const auto count = static_cast<float>(end - start);
      auto pv = make_param_vars(result.params, true);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const int code = cfg.augment ? code_dist(rng) : 0;
        const Sample sample = make_training_pair(dataset[pool[i]], cfg, rng, code);
        auto out = forward(ag::leaf(image_to_tensor(sample.lr.image)), pv, net);
        auto loss = ag::l1_loss(out, image_to_tensor(sample.hr.image));
        ag::backward(loss, Tensor<float>({1}, 1.0f / count));
        batch_loss += loss.value()[0];
      }
      adam_step(result.params, pv.gradients(), adam, lr);
      const LossRecord rec{iter, epoch, batch_loss / count};
      result.trace.push_back(rec);
      if (on_iteration) on_iteration(rec);
      ++iter;
    }
  }
  return result;
}

LightField super_resolve(const LightField& lr, const ModelParams<float>& params, const NetConfig& net) {
  const SaiArrayImage sr = forward(lf_to_macpi(lr), params, net);
  return sai_array_to_lf(sr);
}

}  // namespace lfin
