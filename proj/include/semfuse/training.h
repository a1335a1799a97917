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
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "semfuse/confidence.h"
#include "semfuse/features.h"
#include "semfuse/fusion.h"
#include "semfuse/ground_truth.h"
#include "semfuse/varsolver.h"

namespace semfuse {

struct TrainingConfig {
  double learning_rate = 1e-4;
  int batch_size = 4;
  int crop = 24;
  double lambda_f = 1.5;
  int epochs = 1000;
  std::uint64_t seed = 0;
  SolverConfig solver{50, 1, 1e-2};
  double eps_log = 1e-7;
  bool learn_confidence = true;
  bool learn_regularizer = true;
  bool learn_step_sizes = true;
  std::vector<int> hidden_widths = kDefaultHiddenWidths;  // ends in 1
  double regularizer_init = 0.5;  // forward-difference weight of the initial W

  void Validate() const;
};

struct LossValue {
  double total = 0.0;
  double semantic = 0.0;
  double free = 0.0;
  std::int64_t occupied_voxels = 0;
  std::int64_t free_voxels = 0;
};

// Mean cross entropy over GT-occupied voxels plus lambda_f times the mean over
// GT-free voxels; unknown voxels are skipped and an empty term is 0. `u` is
// label-major over `gt_labels.size()` voxels.
LossValue Loss(std::span<const double> u, std::span<const std::int32_t> gt_labels,
               int num_labels, double lambda_f, double eps_log);
std::vector<double> LossBackward(std::span<const double> u,
                                 std::span<const std::int32_t> gt_labels, int num_labels,
                                 double lambda_f, double eps_log);

// Symmetry of a cubic crop: `rotation` quarter turns about z applied after
// the optional x and y flips.
struct CropTransform {
  Index3 corner{0, 0, 0};
  int size = 1;
  int rotation = 0;
  bool flip_x = false;
  bool flip_y = false;

  // Source voxel (in the full grid) of crop voxel (i, j, k).
  Index3 Source(int i, int j, int k) const;
  static CropTransform Sample(const Index3& dims, int size, std::mt19937_64& rng);
};

// Per-sensor inputs of one scene on the full grid.
struct SensorInputs {
  FeatureVolume features;
  SemanticDatacost datacost;
};

struct TrainingScene {
  std::vector<SensorInputs> sensors;
  GroundTruthVolume gt;

  void Validate() const;
};

// Dense per-crop arrays: features voxel-major, datacosts label-major.
struct CropSample {
  VoxelGridSpec spec;  // crop-local grid
  int num_labels = 0;
  std::vector<std::vector<double>> features;
  std::vector<int> feature_dims;
  std::vector<std::vector<double>> datacosts;
  std::vector<std::int32_t> gt;
};

CropSample ExtractCrop(const TrainingScene& scene, const CropTransform& transform);

struct Model {
  std::vector<MlpParams> mlps;  // one per sensor
  RegularizerW w;

  void Validate() const;
};

Model InitModel(const TrainingScene& example, const TrainingConfig& config);

// Trainable parameters selected by the config, in a fixed order: each
// sensor's MLP, then the W kernel, then log sigma and log tau.
std::vector<double> FlattenTrainable(const Model& model, const TrainingConfig& config);
void UnflattenTrainable(std::span<const double> flat, const TrainingConfig& config, Model* model);

struct CropResult {
  LossValue loss;
  std::vector<double> gradient;  // matches FlattenTrainable
};

// Forward and backward pass over one crop: confidences, weighted datacost,
// unrolled solve, loss.
CropResult CropLossAndGradient(const Model& model, const CropSample& crop,
                               const TrainingConfig& config);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

void AdamStep(std::span<const double> grad, double lr, AdamState* state, std::span<double> params);

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double semantic = 0.0;
  double free = 0.0;
  double sigma = 0.0;
  double tau = 0.0;
};

struct Trainer {
  TrainingConfig config;
  Model model;
  AdamState adam;
  int epoch = 0;

  Trainer(const TrainingConfig& config, Model model);
  // One pass over all scenes in batches of config.batch_size crops, one crop
  // per scene in a seeded order.
  EpochStats RunEpoch(std::span<const TrainingScene> scenes);
};

// Per-voxel confidences of each sensor on the full grid.
std::vector<ConfidenceVolume> PredictConfidences(const Model& model,
                                                 std::span<const SensorInputs> sensors);
// Full-grid reconstruction with the learned confidences and regularizer.
LabelVolume Reconstruct(const Model& model, std::span<const SensorInputs> sensors,
                        const SolverConfig& solver);

}  // namespace semfuse
