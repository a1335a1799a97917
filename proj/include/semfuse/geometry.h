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
#include <cmath>
#include <cstdint>
#include <optional>

#include <Eigen/Core>

namespace semfuse {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Index3 = std::array<int, 3>;

// Pinhole intrinsics. Pixel (u, v) has its center at integer coordinates.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws ContractError if the invariants do not hold.
  void Validate() const;
};

// Rigid transform mapping world coordinates into the camera frame
// (camera-from-world): p_cam = rotation * p_world + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose Identity() { return Pose{}; }

  Vec3 Apply(const Vec3& p) const { return rotation * p + translation; }
  Pose Inverse() const;
  // (*this) after `other`: p -> this(other(p)).
  Pose Compose(const Pose& other) const;
  Vec3 CameraCenter() const { return -rotation.transpose() * translation; }

  void Validate(double tolerance = 1e-6) const;

  // Camera at `eye` looking at `target`; camera y axis points away from `up`.
  static Pose LookAt(const Vec3& eye, const Vec3& target, const Vec3& up);
};

// Regular voxel grid. Linear indices are x-fastest: i + nx * (j + ny * k).
struct VoxelGridSpec {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 1.0;
  Index3 dims = {1, 1, 1};

  void Validate() const;

  std::int64_t NumVoxels() const {
    return static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
  }
  bool Contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  std::int64_t Linear(int i, int j, int k) const {
    return i + static_cast<std::int64_t>(dims[0]) * (j + static_cast<std::int64_t>(dims[1]) * k);
  }
  Index3 Unravel(std::int64_t linear) const {
    const int i = static_cast<int>(linear % dims[0]);
    const std::int64_t rest = linear / dims[0];
    return {i, static_cast<int>(rest % dims[1]), static_cast<int>(rest / dims[1])};
  }
  // Center without bounds checking.
  Vec3 CenterUnchecked(int i, int j, int k) const {
    return origin + voxel_size * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }

  bool operator==(const VoxelGridSpec& other) const {
    return origin == other.origin && voxel_size == other.voxel_size && dims == other.dims;
  }
  bool operator!=(const VoxelGridSpec& other) const { return !(*this == other); }
};

// World-space center of a voxel. Throws std::out_of_range outside the grid.
Vec3 VoxelCenter(const VoxelGridSpec& spec, const Index3& index);

struct Projection {
  Vec2 pixel;
  double cam_depth;
};

// Projects a world point. Returns nullopt when the point is on or behind the
// camera plane (no division is performed in that case).
std::optional<Projection> Project(const CameraIntrinsics& intr, const Pose& pose,
                                  const Vec3& point);

// True iff cam_depth > 0 and the rounded pixel lies inside the image.
bool InFrustum(const CameraIntrinsics& intr, const Vec2& pixel, double cam_depth);

// Nearest pixel of a continuous projection. Only meaningful for finite input.
inline std::array<int, 2> RoundPixel(const Vec2& pixel) {
  return {static_cast<int>(std::lround(pixel.x())), static_cast<int>(std::lround(pixel.y()))};
}

// Inverse of Project: camera ray through `pixel` scaled to `cam_depth`, in world space.
Vec3 BackProject(const CameraIntrinsics& intr, const Pose& pose, const Vec2& pixel,
                 double cam_depth);

}  // namespace semfuse
