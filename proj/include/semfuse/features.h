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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "semfuse/geometry.h"
#include "semfuse/image.h"

namespace semfuse {

inline constexpr int kDepthPatchValues = 9;
// depth patch (9) + gradient-norm mean/std (2)
inline constexpr int kMonoFeatureDim = 11;
// ... + NCC mean/std (2)
inline constexpr int kStereoFeatureDim = 13;

// Row-major 3x3 depth neighborhood around (x, y). Neighbors outside the image
// or without a measurement take the center value. nullopt if the center has
// no measurement.
std::optional<std::array<double, kDepthPatchValues>> DepthPatch(const DepthMap& depth, int x,
                                                                int y);

struct GradStats {
  double mean = 0.0;
  double std = 0.0;
};

// Mean and population standard deviation of central-difference gradient norms
// over the 3x3 patch at (x, y). Coordinates are clamped to the image, and a
// clamped difference divides by the actual pixel distance.
GradStats GradientStats(const GrayImage& image, int x, int y);

using Patch5 = std::array<double, 25>;

// 5x5 patch centered at (x, y) with clamped coordinates.
Patch5 SamplePatch5(const GrayImage& image, int x, int y);

// Normalized cross correlation; 0 when either patch has variance < 1e-12.
double Ncc(const Patch5& a, const Patch5& b);

// One depth-map observation of a sensor. Stereo sensors carry the right image
// of a rectified pair with `baseline` meters along the camera x axis.
struct SensorView {
  CameraIntrinsics intr;
  Pose pose;
  DepthMap depth;
  GrayImage image;
  std::optional<GrayImage> right_image;
  double baseline = 0.0;
  // Optional: pixels whose depth was replaced by an injected outlier. Only
  // used for diagnostics, never as a feature.
  std::optional<MaskImage> outlier_mask;
};

// Bits of FeatureVolume::outlier_flags.
inline constexpr std::uint8_t kOutlierAtCenter = 1;
inline constexpr std::uint8_t kOutlierInPatch = 2;

// Per-voxel features of one sensor, voxel-major: values[voxel * dim + f].
struct FeatureVolume {
  VoxelGridSpec spec;
  int sensor_id = 0;
  int dim = kMonoFeatureDim;
  std::vector<double> values;
  std::vector<std::int32_t> counts;
  // Empty unless the views carried outlier masks.
  std::vector<std::uint8_t> outlier_flags;

  static FeatureVolume Zero(const VoxelGridSpec& spec, int sensor_id, int dim);
  void Validate() const;
  std::span<const double> At(std::int64_t voxel) const {
    return {values.data() + voxel * dim, static_cast<std::size_t>(dim)};
  }
};

// Per-pixel raw features of one view, computed once and reused for all voxels.
struct ViewFeatureMap {
  int dim = kMonoFeatureDim;
  int width = 0;
  int height = 0;
  std::vector<double> values;       // pixel-major, `dim` entries per pixel (NCC std slot unused)
  std::vector<std::uint8_t> valid;  // center depth valid
  std::vector<std::uint8_t> outlier_flags;

  static ViewFeatureMap Compute(const SensorView& view, bool stereo);
};

// Averages per-view features over the views in which a voxel is in the
// frustum, has a valid measurement d, and lies within the near-surface band
// |d - cam_depth| <= trunc. NCC std is the population std of the per-view NCC
// samples (0 with fewer than two views). Bitwise independent of view order.
FeatureVolume ExtractFeatureVolume(std::span<const SensorView> views, const VoxelGridSpec& spec,
                                   double trunc, bool stereo, int sensor_id = 0);

}  // namespace semfuse
