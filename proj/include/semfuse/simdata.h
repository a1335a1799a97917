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
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "semfuse/features.h"
#include "semfuse/geometry.h"
#include "semfuse/ground_truth.h"
#include "semfuse/image.h"

namespace semfuse {

inline const std::vector<std::string> kDefaultLabels = {"free",  "floor", "wall",
                                                        "ceiling", "table", "box"};

struct Box {
  int label = 1;
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool Contains(const Vec3& p) const {
    return (p.array() > min.array()).all() && (p.array() < max.array()).all();
  }
};

// Intensity base + contrast * sin(2 pi frequency (x + y + z)) at a surface
// point, clamped to [0, 1].
struct StripeTexture {
  double base = 0.5;
  double contrast = 0.0;
  double frequency = 0.0;  // cycles per meter

  double At(const Vec3& p) const;
};

struct Scene {
  std::vector<std::string> labels = kDefaultLabels;
  Vec3 room_min = Vec3::Zero();
  Vec3 room_max = Vec3(6.4, 6.4, 3.2);
  std::vector<Box> boxes;
  std::vector<StripeTexture> textures;  // per label; entry 0 unused

  void Validate() const;
};

struct RoomOptions {
  Vec3 size = Vec3(6.4, 6.4, 3.2);
  double shell_thickness = 0.2;
  double snap = 0.1;
  int min_boxes = 2;
  int max_boxes = 4;
  bool table = true;
};

// Floor, four walls and a ceiling of the given thickness inside the room
// extent, a table and a few boxes placed from `seed`. All coordinates are
// multiples of options.snap.
Scene MakeRoomScene(std::uint64_t seed, const RoomOptions& options = {});

struct RayHit {
  double t = 0.0;  // along the unnormalized ray direction
  int box = -1;
  Vec3 point = Vec3::Zero();
};

std::optional<RayHit> IntersectScene(const Scene& scene, const Vec3& origin, const Vec3& dir);

// z-depth of the nearest hit per pixel, kInvalidDepth on a miss.
DepthMap RenderDepth(const Scene& scene, const CameraIntrinsics& intr, const Pose& pose);
// Label of the nearest hit, kUnknownLabel on a miss.
LabelImage RenderSemantics(const Scene& scene, const CameraIntrinsics& intr, const Pose& pose);
// Texture of the nearest hit, 0 on a miss.
GrayImage RenderImage(const Scene& scene, const CameraIntrinsics& intr, const Pose& pose);
// Pose of the right camera of a rectified pair with baseline `baseline`
// along the left camera's x axis.
Pose RightCameraPose(const Pose& left, double baseline);

struct GaussianNoise {
  double a = 0.002;  // m
  double b = 0.002;  // 1/m
};
enum class OutlierMode { kOffset, kAbsolute };
struct OutlierNoise {
  double p = 0.01;
  double sigma = 2.0;
  OutlierMode mode = OutlierMode::kOffset;
};
struct LowTextureDropout {
  double g_min = 0.01;
};
using NoiseComponent = std::variant<GaussianNoise, OutlierNoise, LowTextureDropout>;

struct SensorModel {
  std::string name = "perfect";
  std::vector<NoiseComponent> components;
  bool stereo = false;
  double baseline = 0.1;

  void Validate() const;
};

struct CorruptedDepth {
  DepthMap depth;
  MaskImage outliers;  // 1 where an outlier replaced the measurement
};

// Applies the components in order. gaussian: d + N(0, a + b d^2). outlier:
// with probability p, d + N(0, sigma) (offset) or N(0, sigma) (absolute);
// non-positive results become invalid. dropout: invalidates pixels whose
// gradient-norm mean in `image` is below g_min. Only valid pixels are touched.
CorruptedDepth Corrupt(const DepthMap& depth, const GrayImage& image, const SensorModel& model,
                       std::mt19937_64& rng);

struct TrajectoryOptions {
  int views = 24;
  double height = 1.5;
  double radius_fraction = 0.3;  // of the smaller horizontal room extent
  double pitch_low = 0.3;        // look-at heights, alternating
  double pitch_high = 2.4;
};

// Poses on a horizontal ring around the room center looking across the
// room; the ring phase comes from `seed`.
std::vector<Pose> GenerateTrajectory(const Scene& scene, const TrajectoryOptions& options,
                                     std::uint64_t seed);

// Voxel label from the box containing its center (later boxes win), free
// inside the room, unknown outside.
GroundTruthVolume RasterizeGroundTruth(const Scene& scene, const VoxelGridSpec& spec);

// Sets to unknown every voxel that no view observes: not in any frustum, or
// further than `trunc` behind the measured surface along every ray.
void MarkUnobserved(std::span<const DepthMap> depths, const CameraIntrinsics& intr,
                    std::span<const Pose> poses, double trunc, GroundTruthVolume* gt);

struct SimulationConfig {
  std::uint64_t seed = 0;
  CameraIntrinsics intr{100.0, 100.0, 63.5, 47.5, 128, 96};
  double voxel_size = 0.1;
  double truncation = 0.3;
  TrajectoryOptions trajectory;
  std::vector<SensorModel> sensors;
};

struct SensorCapture {
  SensorModel model;
  std::vector<SensorView> views;
  std::vector<LabelImage> semantics;
};

struct SimulatedScene {
  Scene scene;
  VoxelGridSpec spec;
  GroundTruthVolume gt;
  std::vector<SensorCapture> sensors;
};

// Grid covering the room extent at the configured voxel size.
VoxelGridSpec RoomGrid(const Scene& scene, double voxel_size);

// Renders every sensor along one shared trajectory and corrupts each view
// with a per-sensor, per-view random stream.
SimulatedScene Simulate(const Scene& scene, const SimulationConfig& config);

// The two sensors of the default benchmark: a Kinect-like gaussian sensor and
// the same sensor with outliers.
std::vector<SensorModel> DefaultSensors();

}  // namespace semfuse
