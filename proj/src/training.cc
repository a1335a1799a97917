/*
Copyright 2026 The semfuse Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#include "semfuse/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "semfuse/errors.h"
#include "semfuse/random.h"

namespace semfuse {

void TrainingConfig::Validate() const {
  Require(learning_rate >= 0.0 && std::isfinite(learning_rate), "training: invalid learning rate");
  Require(batch_size >= 1 && crop >= 1 && epochs >= 0, "training: invalid batch, crop or epochs");
  Require(lambda_f > 0.0 && eps_log > 0.0, "training: lambda_f and eps_log must be positive");
  Require(solver.iterations >= 1 && solver.levels >= 1, "training: invalid solver config");
  Require(!hidden_widths.empty() && hidden_widths.back() == 1,
          "training: hidden widths must end in 1");
  Require(regularizer_init > 0.0, "training: regularizer init must be positive");
}

LossValue Loss(std::span<const double> u, std::span<const std::int32_t> gt_labels,
               int num_labels, double lambda_f, double eps_log) {
  const auto n = static_cast<std::int64_t>(gt_labels.size());
  Require(u.size() == static_cast<std::size_t>(n * num_labels), "loss: shape mismatch");
  LossValue out;
  for (std::int64_t x = 0; x < n; ++x) {
    const std::int32_t label = gt_labels[x];
    if (label == kUnknownLabel) continue;
    Require(label >= 0 && label < num_labels, "loss: label out of range");
    const double term = -std::log(std::max(u[label * n + x], eps_log));
    if (label == kFreeLabel) {
      out.free += term;
      ++out.free_voxels;
    } else {
      out.semantic += term;
      ++out.occupied_voxels;
    }
  }
  if (out.occupied_voxels > 0) out.semantic /= static_cast<double>(out.occupied_voxels);
  if (out.free_voxels > 0) out.free /= static_cast<double>(out.free_voxels);
  out.total = out.semantic + lambda_f * out.free;
  return out;
}

std::vector<double> LossBackward(std::span<const double> u,
                                 std::span<const std::int32_t> gt_labels, int num_labels,
                                 double lambda_f, double eps_log) {
  const LossValue counts = Loss(u, gt_labels, num_labels, lambda_f, eps_log);
  const auto n = static_cast<std::int64_t>(gt_labels.size());
  std::vector<double> grad(u.size(), 0.0);
  for (std::int64_t x = 0; x < n; ++x) {
    const std::int32_t label = gt_labels[x];
    if (label == kUnknownLabel) continue;
    const double value = u[label * n + x];
    if (value < eps_log) continue;
    const double scale = label == kFreeLabel
                             ? lambda_f / static_cast<double>(counts.free_voxels)
                             : 1.0 / static_cast<double>(counts.occupied_voxels);
    grad[label * n + x] = -scale / value;
  }
  return grad;
}

Index3 CropTransform::Source(int i, int j, int k) const {
  int a = i, b = j;
  for (int r = 0; r < rotation; ++r) {
    const int t = a;
    a = size - 1 - b;
    b = t;
  }
  if (flip_x) a = size - 1 - a;
  if (flip_y) b = size - 1 - b;
  return {corner[0] + a, corner[1] + b, corner[2] + k};
}

CropTransform CropTransform::Sample(const Index3& dims, int size, std::mt19937_64& rng) {
  Require(size >= 1 && size <= dims[0] && size <= dims[1] && size <= dims[2],
          "crop: crop size exceeds the grid");
  CropTransform t;
  t.size = size;
  for (int a = 0; a < 3; ++a) {
    t.corner[a] = std::uniform_int_distribution<int>(0, dims[a] - size)(rng);
  }
  t.rotation = std::uniform_int_distribution<int>(0, 3)(rng);
  t.flip_x = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  t.flip_y = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  return t;
}

void TrainingScene::Validate() const {
  Require(!sensors.empty(), "training scene: no sensors");
  gt.Validate();
  for (const SensorInputs& s : sensors) {
    s.features.Validate();
    s.datacost.Validate();
    Require(s.features.spec == gt.spec && s.datacost.spec == gt.spec,
            "training scene: grid mismatch");
    Require(s.datacost.labels == gt.labels, "training scene: label mismatch");
  }
}

CropSample ExtractCrop(const TrainingScene& scene, const CropTransform& transform) {
  const VoxelGridSpec& spec = scene.gt.spec;
  const int m = transform.size;
  for (int a = 0; a < 3; ++a) {
    Require(transform.corner[a] >= 0 && transform.corner[a] + m <= spec.dims[a],
            "crop: window outside the grid");
  }
  CropSample crop;
  crop.spec = VoxelGridSpec{Vec3::Zero(), spec.voxel_size, {m, m, m}};
  crop.num_labels = scene.gt.NumLabels();
  const std::int64_t n = crop.spec.NumVoxels();
  const std::int64_t full = spec.NumVoxels();
  std::vector<std::int64_t> source(static_cast<std::size_t>(n));
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        const Index3 s = transform.Source(i, j, k);
        source[crop.spec.Linear(i, j, k)] = spec.Linear(s[0], s[1], s[2]);
      }
  crop.gt.resize(static_cast<std::size_t>(n));
  for (std::int64_t x = 0; x < n; ++x) crop.gt[x] = scene.gt.values[source[x]];
  const int L = crop.num_labels;
  for (const SensorInputs& s : scene.sensors) {
    const int dim = s.features.dim;
    std::vector<double> f(static_cast<std::size_t>(n * dim));
    std::vector<double> d(static_cast<std::size_t>(n * L));
    for (std::int64_t x = 0; x < n; ++x) {
      std::copy_n(s.features.values.data() + source[x] * dim, dim, f.data() + x * dim);
      for (int l = 0; l < L; ++l) d[l * n + x] = s.datacost.cost[l * full + source[x]];
    }
    crop.features.push_back(std::move(f));
    crop.feature_dims.push_back(dim);
    crop.datacosts.push_back(std::move(d));
  }
  return crop;
}

void Model::Validate() const {
  Require(!mlps.empty(), "model: no sensors");
  for (const MlpParams& p : mlps) p.Validate();
  w.Validate();
}

Model InitModel(const TrainingScene& example, const TrainingConfig& config) {
  config.Validate();
  Model model;
  for (std::size_t s = 0; s < example.sensors.size(); ++s) {
    std::vector<int> widths = {example.sensors[s].features.dim};
    widths.insert(widths.end(), config.hidden_widths.begin(), config.hidden_widths.end());
    model.mlps.push_back(
        InitMlpParams(DeriveSeed(config.seed, 100 + s), widths, static_cast<int>(s)));
  }
  model.w = RegularizerW::ForwardDifference(example.gt.NumLabels(), config.regularizer_init);
  return model;
}

std::vector<double> FlattenTrainable(const Model& model, const TrainingConfig& config) {
  std::vector<double> flat;
  if (config.learn_confidence) {
    for (const MlpParams& p : model.mlps) p.Flatten(&flat);
  }
  if (config.learn_regularizer) flat.insert(flat.end(), model.w.kernel.begin(), model.w.kernel.end());
  if (config.learn_step_sizes) {
    flat.push_back(model.w.log_sigma);
    flat.push_back(model.w.log_tau);
  }
  return flat;
}

void UnflattenTrainable(std::span<const double> flat, const TrainingConfig& config, Model* model) {
  std::size_t offset = 0;
  const auto take = [&](std::size_t count) {
    Require(offset + count <= flat.size(), "model: flat parameter vector too short");
    const auto part = flat.subspan(offset, count);
    offset += count;
    return part;
  };
  if (config.learn_confidence) {
    for (MlpParams& p : model->mlps) p.Unflatten(take(p.NumParams()));
  }
  if (config.learn_regularizer) {
    const auto k = take(model->w.kernel.size());
    std::copy(k.begin(), k.end(), model->w.kernel.begin());
  }
  if (config.learn_step_sizes) {
    const auto s = take(2);
    model->w.log_sigma = s[0];
    model->w.log_tau = s[1];
  }
  Require(offset == flat.size(), "model: flat parameter vector too long");
}

CropResult CropLossAndGradient(const Model& model, const CropSample& crop,
                               const TrainingConfig& config) {
  const std::size_t sensors = crop.features.size();
  Require(sensors == model.mlps.size(), "crop: sensor count differs from the model");
  const int L = crop.num_labels;
  const std::int64_t n = crop.spec.NumVoxels();

  std::vector<std::vector<double>> conf(sensors);
  std::vector<double> datacost(static_cast<std::size_t>(L * n), 0.0);
  for (std::size_t s = 0; s < sensors; ++s) {
    conf[s] = MlpForwardBatch(model.mlps[s], crop.features[s].data(), n);
    const std::vector<double>& d = crop.datacosts[s];
    for (int l = 0; l < L; ++l)
      for (std::int64_t x = 0; x < n; ++x) datacost[l * n + x] += conf[s][x] * d[l * n + x];
  }

  UnrolledSolver solver(crop.spec, L);
  const std::vector<double> u = solver.Forward(datacost, model.w, config.solver.iterations);
  CropResult result;
  result.loss = Loss(u, crop.gt, L, config.lambda_f, config.eps_log);
  const std::vector<double> grad_u = LossBackward(u, crop.gt, L, config.lambda_f, config.eps_log);
  const SolverGradients sg = solver.Backward(grad_u);

  if (config.learn_confidence) {
    std::vector<double> grad_c(static_cast<std::size_t>(n));
    for (std::size_t s = 0; s < sensors; ++s) {
      const std::vector<double>& d = crop.datacosts[s];
      std::fill(grad_c.begin(), grad_c.end(), 0.0);
      for (int l = 0; l < L; ++l)
        for (std::int64_t x = 0; x < n; ++x) grad_c[x] += sg.datacost[l * n + x] * d[l * n + x];
      MlpGradients g = MlpGradients::ZerosLike(model.mlps[s]);
      MlpBackwardBatch(model.mlps[s], crop.features[s].data(), grad_c.data(), n, &g);
      g.Flatten(&result.gradient);
    }
  }
  if (config.learn_regularizer) {
    result.gradient.insert(result.gradient.end(), sg.kernel.begin(), sg.kernel.end());
  }
  if (config.learn_step_sizes) {
    result.gradient.push_back(sg.log_sigma);
    result.gradient.push_back(sg.log_tau);
  }
  return result;
}

void AdamStep(std::span<const double> grad, double lr, AdamState* state, std::span<double> params) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  Require(grad.size() == params.size(), "adam: gradient and parameter sizes differ");
  if (state->m.empty()) {
    state->m.assign(params.size(), 0.0);
    state->v.assign(params.size(), 0.0);
  }
  Require(state->m.size() == params.size() && state->v.size() == params.size(),
          "adam: moment sizes differ from the parameters");
  ++state->step;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(state->step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(state->step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state->m[i] = kBeta1 * state->m[i] + (1.0 - kBeta1) * grad[i];
    state->v[i] = kBeta2 * state->v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
    params[i] -= lr * (state->m[i] / c1) / (std::sqrt(state->v[i] / c2) + kEps);
  }
}

Trainer::Trainer(const TrainingConfig& cfg, Model m) : config(cfg), model(std::move(m)) {
  config.Validate();
  model.Validate();
}

EpochStats Trainer::RunEpoch(std::span<const TrainingScene> scenes) {
  Require(!scenes.empty(), "training: no scenes");
  const std::uint64_t epoch_seed = DeriveSeed(config.seed, 1000000 + static_cast<std::uint64_t>(epoch));
  std::mt19937_64 rng(epoch_seed);
  std::vector<std::size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  EpochStats stats;
  stats.epoch = epoch;
  std::size_t crop_index = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
    const std::size_t end = std::min(order.size(), begin + config.batch_size);
    std::vector<double> params = FlattenTrainable(model, config);
    std::vector<double> grad(params.size(), 0.0);
    for (std::size_t b = begin; b < end; ++b, ++crop_index) {
      const TrainingScene& scene = scenes[order[b]];
      std::mt19937_64 crop_rng(DeriveSeed(epoch_seed, crop_index));
      const CropTransform t = CropTransform::Sample(scene.gt.spec.dims, config.crop, crop_rng);
      const CropResult r = CropLossAndGradient(model, ExtractCrop(scene, t), config);
      if (!std::isfinite(r.loss.total)) {
        std::ostringstream msg;
        msg << "training: non-finite loss at epoch " << epoch << ", scene " << order[b]
            << ", crop corner (" << t.corner[0] << "," << t.corner[1] << "," << t.corner[2]
            << "), semantic " << r.loss.semantic << ", free " << r.loss.free << ", sigma "
            << model.w.sigma() << ", tau " << model.w.tau();
        throw DataError(msg.str());
      }
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += r.gradient[i];
      stats.loss += r.loss.total;
      stats.semantic += r.loss.semantic;
      stats.free += r.loss.free;
    }
    const double inv = 1.0 / static_cast<double>(end - begin);
    for (double& g : grad) g *= inv;
    if (!params.empty()) {
      AdamStep(grad, config.learning_rate, &adam, params);
      UnflattenTrainable(params, config, &model);
    }
  }
  const double inv = 1.0 / static_cast<double>(scenes.size());
  stats.loss *= inv;
  stats.semantic *= inv;
  stats.free *= inv;
  stats.sigma = model.w.sigma();
  stats.tau = model.w.tau();
  ++epoch;
  return stats;
}

std::vector<ConfidenceVolume> PredictConfidences(const Model& model,
                                                 std::span<const SensorInputs> sensors) {
  Require(sensors.size() == model.mlps.size(), "predict: sensor count differs from the model");
  std::vector<ConfidenceVolume> out;
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    const FeatureVolume& f = sensors[s].features;
    Require(f.dim == model.mlps[s].InputDim(), "predict: feature dimension differs");
    ConfidenceVolume c;
    c.spec = f.spec;
    c.conf = MlpForwardBatch(model.mlps[s], f.values.data(), f.spec.NumVoxels());
    out.push_back(std::move(c));
  }
  return out;
}

LabelVolume Reconstruct(const Model& model, std::span<const SensorInputs> sensors,
                        const SolverConfig& solver) {
  const std::vector<ConfidenceVolume> confs = PredictConfidences(model, sensors);
  std::vector<SemanticDatacost> datacosts;
  for (const SensorInputs& s : sensors) datacosts.push_back(s.datacost);
  return Solve(CombineDatacosts(datacosts, confs), model.w, solver);
}

}  // namespace semfuse
