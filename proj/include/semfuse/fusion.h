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

#include <span>
#include <string>
#include <vector>

#include "semfuse/geometry.h"
#include "semfuse/image.h"

namespace semfuse {

// Per-sensor truncated signed distance volume. Values are distances normalized
// by the truncation band and clamped to [-1, 1]; weight 0 means unobserved.
struct TsdfVolume {
  VoxelGridSpec spec;
  double trunc = 0.0;
  std::vector<double> values;
  std::vector<double> weights;

  static TsdfVolume Empty(const VoxelGridSpec& spec, double trunc);
  void Validate() const;
};

// Learned per-voxel nonnegative confidence of one sensor.
struct ConfidenceVolume {
  VoxelGridSpec spec;
  std::vector<double> conf;

  static ConfidenceVolume Constant(const VoxelGridSpec& spec, double value);
  void Validate() const;
};

// Per-voxel, per-label evidence. Label 0 is free space. Negative cost is
// evidence for a label. Storage is label-major: cost[label * N + voxel].
struct SemanticDatacost {
  VoxelGridSpec spec;
  std::vector<std::string> labels;
  std::vector<double> cost;

  static SemanticDatacost Zero(const VoxelGridSpec& spec, std::vector<std::string> labels);
  int NumLabels() const { return static_cast<int>(labels.size()); }
  double& at(int label, std::int64_t voxel) { return cost[label * spec.NumVoxels() + voxel]; }
  double at(int label, std::int64_t voxel) const {
    return cost[label * spec.NumVoxels() + voxel];
  }
  void Validate() const;
};

// Below this summed confidence a voxel is treated as unobserved by fusion.
inline constexpr double kConfEpsilon = 1e-6;

struct DatacostParams {
  double delta_free = 0.1;
  double delta_occ = 1.0;
};

// Curless-Levoy running average of one depth map into `volume`.
void IntegrateDepthMap(const DepthMap& depth, const CameraIntrinsics& intr, const Pose& pose,
                       TsdfVolume* volume);

// Confidence-weighted average of per-sensor TSDFs. Confidence multiplies the
// binary observation mask (weight > 0), not the integration weight.
TsdfVolume FuseWeighted(std::span<const TsdfVolume> volumes,
                        std::span<const ConfidenceVolume> confs);

// Adds one labeled depth map's free-space and surface evidence to `datacost`.
// Pixels with kUnknownLabel are skipped; other labels must be in [1, |labels|).
void AccumulateSemanticDatacost(const DepthMap& depth, const LabelImage& semseg,
                                const CameraIntrinsics& intr, const Pose& pose, double trunc,
                                const DatacostParams& params, SemanticDatacost* datacost);

SemanticDatacost BuildSemanticDatacost(const DepthMap& depth, const LabelImage& semseg,
                                       const CameraIntrinsics& intr, const Pose& pose,
                                       const VoxelGridSpec& spec,
                                       const std::vector<std::string>& labels, double trunc,
                                       const DatacostParams& params);

// Unnormalized confidence-weighted sum of per-sensor datacosts.
SemanticDatacost CombineDatacosts(std::span<const SemanticDatacost> datacosts,
                                  std::span<const ConfidenceVolume> confs);

// Gradient of a scalar w.r.t. each sensor's confidence, given its gradient
// w.r.t. the combined datacost: sum over labels of grad * cost_s.
std::vector<std::vector<double>> CombineDatacostsConfGradient(
    std::span<const SemanticDatacost> datacosts, const std::vector<double>& combined_grad);

}  // namespace semfuse
