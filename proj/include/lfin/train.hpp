#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "lfin/image_ops.hpp"
#include "lfin/model.hpp"

namespace lfin {

struct TrainConfig {
  double lr0 = 5e-4;
  int lr_halve_every = 10;  // epochs
  int epochs = 40;
  int batch = 12;
  int patch = 64;  // HR pixels per view side
  int scale = 4;
  std::uint64_t seed = 0;
  /// Random crops drawn from every scene per epoch.
  int patches_per_scene = 1;
  /// Stop after this many optimizer steps (0 = run all epochs).
  int max_iterations = 0;
  /// Draw a random dihedral code per sample (off: identity only).
  bool augment = true;

  void validate() const;
};

struct Sample {
  MacPiImage lr;   // patch/scale per view side
  SaiArrayImage hr;  // patch per view side
};

/// Joint spatial + angular dihedral transform. Code bit 2 selects a
/// horizontal flip (applied first), bits 0-1 the number of 90-degree
/// counter-clockwise rotations. Code 0 is the identity. Rotations need
/// square views (ParameterError otherwise).
LightField augment(const LightField& lf, int code);
/// The same transform on a square 2D array.
Image dihedral_2d(const Image& img, int code);
int inverse_code(int code);

/// Same spatial window across all views. Throws ParameterError when the
/// patch does not fit.
LightField random_crop(const LightField& lf, int patch, std::mt19937_64& rng);
/// Per-view bicubic downscale of an HR light field; HR kept as SAI array.
Sample degrade_pair(const LightField& hr, int scale);
/// random_crop + augment(code) + degrade_pair.
Sample make_training_pair(const LightField& lf_hr, const TrainConfig& cfg, std::mt19937_64& rng, int code = 0);

struct L1Result {
  double loss = 0.0;
  Tensor<double> grad;
};
/// Mean absolute error and its subgradient sign(pred - target) / n.
L1Result l1_loss(const Tensor<double>& pred, const Tensor<double>& target);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  ModelParams<float> m;
  ModelParams<float> v;
};

AdamState make_adam_state(const ModelParams<float>& params);
/// Bias-corrected Adam update in place. Throws StateError when the
/// gradient or moment buffers do not mirror params.
void adam_step(ModelParams<float>& params, const ModelParams<float>& grads, AdamState& state, double lr);

/// lr0 * 0.5^floor(epoch / lr_halve_every), epoch 0-based.
double lr_at(int epoch, const TrainConfig& cfg);

struct LossRecord {
  std::int64_t iter;
  int epoch;
  double loss;
};

struct TrainResult {
  ModelParams<float> params;
  std::vector<LossRecord> trace;
};

using IterationCallback = std::function<void(const LossRecord&)>;

/// Seeded loop: shuffle, augment (uniform over 8 codes), crop, degrade,
/// forward, L1, backward, Adam. Starts from init_params(net, seed) unless
/// `initial` is given.
TrainResult train(const std::vector<LightField>& dataset, const NetConfig& net, const TrainConfig& cfg,
                  const IterationCallback& on_iteration = {}, const ModelParams<float>* initial = nullptr);

/// Super-resolves every view of an LR light field.
LightField super_resolve(const LightField& lr, const ModelParams<float>& params, const NetConfig& net);

}  // namespace lfin
