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
#include "semfuse/fusion.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "semfuse/errors.h"

namespace semfuse {
namespace {

void CheckDepthMatches(const DepthMap& depth, const CameraIntrinsics& intr) {
  intr.Validate();
  Require(depth.width() == intr.width && depth.height() == intr.height,
          "depth map size does not match intrinsics");
}

// Nearest-neighbor depth lookup. Returns false if the voxel is outside the
// frustum or has no valid measurement.
inline bool LookupPixel(const CameraIntrinsics& intr, const Vec3& p_c, int* u, int* v) {
  if (!(p_c.z() > 0.0)) return false;
  const double px = intr.fx * p_c.x() / p_c.z() + intr.cx;
  const double py = intr.fy * p_c.y() / p_c.z() + intr.cy;
  const double ru = std::round(px);
  const double rv = std::round(py);
  if (!(ru >= 0.0 && rv >= 0.0 && ru < intr.width && rv < intr.height)) return false;
  *u = static_cast<int>(ru);
  *v = static_cast<int>(rv);
  return true;
}

}  // namespace

TsdfVolume TsdfVolume::Empty(const VoxelGridSpec& spec, double trunc) {
  spec.Validate();
  Require(trunc > 0.0, "tsdf: truncation must be positive");
  const auto n = static_cast<std::size_t>(spec.NumVoxels());
  return TsdfVolume{spec, trunc, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
}

void TsdfVolume::Validate() const {
  spec.Validate();
  const auto n = static_cast<std::size_t>(spec.NumVoxels());
  Require(trunc > 0.0, "tsdf: truncation must be positive");
  Require(values.size() == n && weights.size() == n, "tsdf: storage size mismatch");
}

ConfidenceVolume ConfidenceVolume::Constant(const VoxelGridSpec& spec, double value) {
  spec.Validate();
  Require(value >= 0.0 && std::isfinite(value), "confidence must be finite and nonnegative");
  return ConfidenceVolume{spec, std::vector<double>(static_cast<std::size_t>(spec.NumVoxels()), value)};
}

void ConfidenceVolume::Validate() const {
  spec.Validate();
  Require(conf.size() == static_cast<std::size_t>(spec.NumVoxels()),
          "confidence: storage size mismatch");
}

SemanticDatacost SemanticDatacost::Zero(const VoxelGridSpec& spec,
                                        std::vector<std::string> labels) {
  spec.Validate();
  Require(labels.size() >= 2, "datacost: need at least two labels (free + one)");
  const auto n = static_cast<std::size_t>(spec.NumVoxels()) * labels.size();
  return SemanticDatacost{spec, std::move(labels), std::vector<double>(n, 0.0)};
}

void SemanticDatacost::Validate() const {
  spec.Validate();
  Require(labels.size() >= 2, "datacost: need at least two labels (free + one)");
  Require(cost.size() == static_cast<std::size_t>(spec.NumVoxels()) * labels.size(),
          "datacost: storage size mismatch");
}

void IntegrateDepthMap(const DepthMap& depth, const CameraIntrinsics& intr, const Pose& pose,
                       TsdfVolume* volume) {
  CheckDepthMatches(depth, intr);
  volume->Validate();
  const VoxelGridSpec& spec = volume->spec;
  const double mu = volume->trunc;
  const int nx = spec.dims[0];
  const int rows = spec.dims[1] * spec.dims[2];
  double* values = volume->values.data();
  double* weights = volume->weights.data();

#pragma omp parallel for schedule(static)
  for (int row = 0; row < rows; ++row) {
    const int j = row % spec.dims[1];
    const int k = row / spec.dims[1];
    const std::int64_t base = spec.Linear(0, j, k);
    for (int i = 0; i < nx; ++i) {
      const Vec3 p_c = pose.Apply(spec.CenterUnchecked(i, j, k));
      int u, v;
      if (!LookupPixel(intr, p_c, &u, &v)) continue;
      const double d = depth(u, v);
      if (!IsValidDepth(d)) continue;
      const double s = d - p_c.z();
      if (s < -mu) continue;
      const double sdf = std::clamp(s / mu, -1.0, 1.0);
      const std::int64_t idx = base + i;
      const double w = weights[idx];
      values[idx] = (values[idx] * w + sdf) / (w + 1.0);
      weights[idx] = w + 1.0;
    }
  }
}

TsdfVolume FuseWeighted(std::span<const TsdfVolume> volumes,
                        std::span<const ConfidenceVolume> confs) {
  Require(!volumes.empty(), "fuse: need at least one sensor");
  Require(volumes.size() == confs.size(), "fuse: volume and confidence counts differ");
  const VoxelGridSpec& spec = volumes[0].spec;
  for (std::size_t s = 0; s < volumes.size(); ++s) {
    volumes[s].Validate();
    confs[s].Validate();
    Require(volumes[s].spec == spec && confs[s].spec == spec, "fuse: grid specs differ");
  }
  TsdfVolume out = TsdfVolume::Empty(spec, volumes[0].trunc);
  const std::int64_t n = spec.NumVoxels();
  const std::size_t sensors = volumes.size();

#pragma omp parallel for schedule(static)
  for (std::int64_t x = 0; x < n; ++x) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t s = 0; s < sensors; ++s) {
      if (!(volumes[s].weights[x] > 0.0)) continue;
      const double w = confs[s].conf[x];
      num += w * volumes[s].values[x];
      den += w;
    }
    if (den >= kConfEpsilon) {
      out.values[x] = num / den;
      out.weights[x] = den;
    }
  }
  return out;
}

void AccumulateSemanticDatacost(const DepthMap& depth, const LabelImage& semseg,
                                const CameraIntrinsics& intr, const Pose& pose, double trunc,
                                const DatacostParams& params, SemanticDatacost* datacost) {
  CheckDepthMatches(depth, intr);
  Require(semseg.width() == depth.width() && semseg.height() == depth.height(),
          "semantic image size does not match depth map");
  Require(trunc > 0.0, "datacost: truncation must be positive");
  datacost->Validate();
  const int num_labels = datacost->NumLabels();
  for (const std::int32_t label : semseg.data()) {
    if (label == kUnknownLabel) continue;
    if (label <= kFreeLabel || label >= num_labels) {
      throw DataError("semantic image contains label id " + std::to_string(label) +
                      " outside [1, " + std::to_string(num_labels) + ")");
    }
  }

  const VoxelGridSpec& spec = datacost->spec;
  const std::int64_t n = spec.NumVoxels();
  const int nx = spec.dims[0];
  const int rows = spec.dims[1] * spec.dims[2];
  double* cost = datacost->cost.data();

#pragma omp parallel for schedule(static)
  for (int row = 0; row < rows; ++row) {
    const int j = row % spec.dims[1];
    const int k = row / spec.dims[1];
    const std::int64_t base = spec.Linear(0, j, k);
    for (int i = 0; i < nx; ++i) {
      const Vec3 p_c = pose.Apply(spec.CenterUnchecked(i, j, k));
      int u, v;
      if (!LookupPixel(intr, p_c, &u, &v)) continue;
      const double d = depth(u, v);
      const std::int32_t label = semseg(u, v);
      if (!IsValidDepth(d) || label == kUnknownLabel) continue;
      const double s = d - p_c.z();
      const std::int64_t idx = base + i;
      if (s > 0.0) {
        cost[kFreeLabel * n + idx] -= params.delta_free;
      } else if (s >= -trunc) {
        cost[label * n + idx] -= params.delta_occ;
      }
    }
  }
}

SemanticDatacost BuildSemanticDatacost(const DepthMap& depth, const LabelImage& semseg,
                                       const CameraIntrinsics& intr, const Pose& pose,
                                       const VoxelGridSpec& spec,
                                       const std::vector<std::string>& labels, double trunc,
                                       const DatacostParams& params) {
  SemanticDatacost out = SemanticDatacost::Zero(spec, labels);
  AccumulateSemanticDatacost(depth, semseg, intr, pose, trunc, params, &out);
  return out;
}

SemanticDatacost CombineDatacosts(std::span<const SemanticDatacost> datacosts,
                                  std::span<const ConfidenceVolume> confs) {
  Require(!datacosts.empty(), "combine: need at least one sensor");
  Require(datacosts.size() == confs.size(), "combine: datacost and confidence counts differ");
  const SemanticDatacost& first = datacosts[0];
  for (std::size_t s = 0; s < datacosts.size(); ++s) {
    datacosts[s].Validate();
    confs[s].Validate();
    Require(datacosts[s].spec == first.spec && confs[s].spec == first.spec,
            "combine: grid specs differ");
    Require(datacosts[s].labels == first.labels, "combine: label sets differ");
  }
  SemanticDatacost out = SemanticDatacost::Zero(first.spec, first.labels);
  const std::int64_t n = first.spec.NumVoxels();
  const int num_labels = first.NumLabels();
  const std::size_t sensors = datacosts.size();

#pragma omp parallel for schedule(static)
  for (std::int64_t x = 0; x < n; ++x) {
    for (int l = 0; l < num_labels; ++l) {
      double acc = 0.0;
      for (std::size_t s = 0; s < sensors; ++s) acc += confs[s].conf[x] * datacosts[s].cost[l * n + x];
      out.cost[l * n + x] = acc;
    }
  }
  return out;
}

std::vector<std::vector<double>> CombineDatacostsConfGradient(
    std::span<const SemanticDatacost> datacosts, const std::vector<double>& combined_grad) {
  Require(!datacosts.empty(), "combine gradient: need at least one sensor");
  const std::int64_t n = datacosts[0].spec.NumVoxels();
  const int num_labels = datacosts[0].NumLabels();
  Require(combined_grad.size() == static_cast<std::size_t>(n * num_labels),
          "combine gradient: size mismatch");
  std::vector<std::vector<double>> grads(datacosts.size(), std::vector<double>(n, 0.0));
  for (std::size_t s = 0; s < datacosts.size(); ++s) {
    Require(datacosts[s].spec == datacosts[0].spec && datacosts[s].NumLabels() == num_labels,
            "combine gradient: shape mismatch");
    const double* cost = datacosts[s].cost.data();
    double* g = grads[s].data();
#pragma omp parallel for schedule(static)
    for (std::int64_t x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int l = 0; l < num_labels; ++l) acc += combined_grad[l * n + x] * cost[l * n + x];
      g[x] = acc;
    }
  }
  return grads;
}

}  // namespace semfuse
