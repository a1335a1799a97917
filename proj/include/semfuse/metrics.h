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
#include <optional>
#include <span>
#include <vector>

#include "semfuse/fusion.h"
#include "semfuse/geometry.h"
#include "semfuse/ground_truth.h"

namespace semfuse {

struct MetricsReport {
  std::optional<double> semantic_accuracy;
  std::optional<double> free_space_accuracy;
  std::optional<double> completion_tp_rate;
  std::optional<double> mean_surface_distance;  // voxels, predicted -> GT
  int num_labels = 0;
  std::vector<std::int64_t> confusion;  // [gt * num_labels + pred], known GT only
};

// Correct occupied / GT-occupied voxels; unknown GT voxels never count.
std::optional<double> SemanticAccuracy(std::span<const std::int32_t> pred,
                                       std::span<const std::int32_t> gt);
std::optional<double> FreeSpaceAccuracy(std::span<const std::int32_t> pred,
                                        std::span<const std::int32_t> gt);
// GT-occupied voxels predicted as any occupied label / GT-occupied voxels.
std::optional<double> CompletionTpRate(std::span<const std::int32_t> pred,
                                       std::span<const std::int32_t> gt);

// Occupied voxels with a free or unknown 6-neighbor. The grid border is not a
// neighbor.
std::vector<std::uint8_t> SurfaceMask(const Index3& dims, std::span<const std::int32_t> labels);

// Exact Euclidean distance (in voxels) from every voxel to the nearest set
// voxel of `mask`; +inf everywhere when the mask is empty.
std::vector<double> DistanceTransform(const Index3& dims, std::span<const std::uint8_t> mask);

// Mean distance from predicted surface voxels to the nearest GT surface voxel.
std::optional<double> MeanSurfaceDistance(const Index3& dims, std::span<const std::int32_t> pred,
                                          std::span<const std::int32_t> gt);

// Occupied voxels with a free 6-neighbor (surfaces visible from free space).
std::vector<std::uint8_t> FreeBoundaryMask(const Index3& dims, std::span<const std::int32_t> labels);

// Observed voxels with value <= 0 next to an observed voxel with value > 0.
std::vector<std::uint8_t> ZeroCrossingMask(const TsdfVolume& tsdf);

// Fraction of `reference` voxels within `tolerance` voxels of a `candidate`
// voxel; absent when `reference` is empty.
std::optional<double> SurfaceRecall(const Index3& dims, std::span<const std::uint8_t> reference,
                                    std::span<const std::uint8_t> candidate, double tolerance);

// Predictions may be unknown; an unknown prediction is wrong wherever the GT
// is known and is left out of the confusion counts.
MetricsReport Evaluate(std::span<const std::int32_t> pred, const GroundTruthVolume& gt);

}  // namespace semfuse
