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
#include "semfuse/geometry.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "semfuse/errors.h"

namespace semfuse {

void CameraIntrinsics::Validate() const {
  Require(fx > 0.0 && fy > 0.0, "intrinsics: focal lengths must be positive");
  Require(width > 0 && height > 0, "intrinsics: image size must be positive");
  Require(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height,
          "intrinsics: principal point outside the image");
}

Pose Pose::Inverse() const {
  Pose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Pose Pose::Compose(const Pose& other) const {
  Pose out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

void Pose::Validate(double tolerance) const {
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  Require(ortho <= tolerance, "pose: rotation is not orthonormal");
  Require(std::abs(rotation.determinant() - 1.0) <= tolerance,
          "pose: rotation determinant differs from 1");
  Require(translation.allFinite(), "pose: translation is not finite");
}

Pose Pose::LookAt(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  Require(right.norm() > 1e-9, "LookAt: view direction parallel to up vector");
  right.normalize();
  const Vec3 down = forward.cross(right);
  Pose pose;
  pose.rotation.row(0) = right.transpose();
  pose.rotation.row(1) = down.transpose();
  pose.rotation.row(2) = forward.transpose();
  pose.translation = -(pose.rotation * eye);
  return pose;
}

void VoxelGridSpec::Validate() const {
  Require(voxel_size > 0.0, "grid: voxel size must be positive");
  Require(dims[0] >= 1 && dims[1] >= 1 && dims[2] >= 1, "grid: dims must be >= 1");
  Require(origin.allFinite(), "grid: origin is not finite");
}

Vec3 VoxelCenter(const VoxelGridSpec& spec, const Index3& index) {
  if (!spec.Contains(index[0], index[1], index[2])) {
    throw std::out_of_range("voxel index (" + std::to_string(index[0]) + "," +
                            std::to_string(index[1]) + "," + std::to_string(index[2]) +
                            ") outside grid");
  }
  return spec.CenterUnchecked(index[0], index[1], index[2]);
}

std::optional<Projection> Project(const CameraIntrinsics& intr, const Pose& pose,
                                  const Vec3& point) {
  const Vec3 p_c = pose.Apply(point);
  if (!(p_c.z() > 0.0)) return std::nullopt;
  return Projection{Vec2(intr.fx * p_c.x() / p_c.z() + intr.cx, intr.fy * p_c.y() / p_c.z() + intr.cy),
                    p_c.z()};
}

bool InFrustum(const CameraIntrinsics& intr, const Vec2& pixel, double cam_depth) {
  if (!(cam_depth > 0.0) || !pixel.allFinite()) return false;
  const double u = std::round(pixel.x());
  const double v = std::round(pixel.y());
  return u >= 0.0 && v >= 0.0 && u < intr.width && v < intr.height;
}

Vec3 BackProject(const CameraIntrinsics& intr, const Pose& pose, const Vec2& pixel,
                 double cam_depth) {
  const Vec3 p_c((pixel.x() - intr.cx) / intr.fx * cam_depth,
                 (pixel.y() - intr.cy) / intr.fy * cam_depth, cam_depth);
  return pose.rotation.transpose() * (p_c - pose.translation);
}

}  // namespace semfuse
