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

#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "semfuse/errors.h"
#include "test_util.h"

namespace semfuse {
namespace {

CameraIntrinsics TestIntrinsics() { return {100.0, 100.0, 50.0, 50.0, 100, 100}; }

TEST(VoxelCenterTest, HandEvaluatedCenters) {
  VoxelGridSpec spec{Vec3(0, 0, 0), 1.0, {4, 4, 4}};
  EXPECT_EQ(VoxelCenter(spec, {0, 0, 0}), Vec3(0.5, 0.5, 0.5));
  spec.voxel_size = 0.5;
  EXPECT_EQ(VoxelCenter(spec, {2, 0, 0}), Vec3(1.25, 0.25, 0.25));
  VoxelGridSpec shifted{Vec3(-1, -1, 0), 1.0, {4, 4, 4}};
  EXPECT_EQ(VoxelCenter(shifted, {1, 1, 1}), Vec3(0.5, 0.5, 1.5));
}

TEST(VoxelCenterTest, OutOfBoundsThrowsRangeError) {
  const VoxelGridSpec spec{Vec3::Zero(), 1.0, {2, 3, 4}};
  EXPECT_THROW(VoxelCenter(spec, {2, 0, 0}), std::out_of_range);
  EXPECT_THROW(VoxelCenter(spec, {0, -1, 0}), std::out_of_range);
  EXPECT_THROW(VoxelCenter(spec, {0, 0, 4}), std::out_of_range);
}

TEST(VoxelCenterTest, StrictlyMonotoneInEachIndex) {
  const VoxelGridSpec spec{Vec3(-0.3, 1.1, 2.0), 0.07, {5, 6, 7}};
  for (int a = 0; a < 3; ++a) {
    for (int i = 0; i + 1 < spec.dims[a]; ++i) {
      Index3 lo = {1, 2, 3}, hi = {1, 2, 3};
      lo[a] = i;
      hi[a] = i + 1;
      EXPECT_LT(VoxelCenter(spec, lo)[a], VoxelCenter(spec, hi)[a]);
    }
  }
}

TEST(VoxelGridSpecTest, LinearIndexIsXFastest) {
  const VoxelGridSpec spec{Vec3::Zero(), 1.0, {3, 4, 5}};
  EXPECT_EQ(spec.Linear(1, 0, 0), 1);
  EXPECT_EQ(spec.Linear(0, 1, 0), 3);
  EXPECT_EQ(spec.Linear(0, 0, 1), 12);
  EXPECT_EQ(spec.Unravel(spec.Linear(2, 3, 4)), (Index3{2, 3, 4}));
}

TEST(ProjectTest, PinholeExamples) {
  const auto intr = TestIntrinsics();
  const auto axis = Project(intr, Pose::Identity(), Vec3(0, 0, 2));
  ASSERT_TRUE(axis.has_value());
  EXPECT_EQ(axis->pixel, Vec2(50, 50));
  EXPECT_EQ(axis->cam_depth, 2.0);
  const auto side = Project(intr, Pose::Identity(), Vec3(1, 0, 2));
  ASSERT_TRUE(side.has_value());
  EXPECT_EQ(side->pixel, Vec2(100, 50));
  EXPECT_EQ(side->cam_depth, 2.0);
  EXPECT_FALSE(Project(intr, Pose::Identity(), Vec3(0, 0, -1)).has_value());
  EXPECT_FALSE(Project(intr, Pose::Identity(), Vec3(1, 1, 0)).has_value());
}

TEST(InFrustumTest, Examples) {
  const auto intr = TestIntrinsics();
  EXPECT_TRUE(InFrustum(intr, Vec2(50, 50), 2.0));
  EXPECT_FALSE(InFrustum(intr, Vec2(-1, 50), 2.0));
  EXPECT_FALSE(InFrustum(intr, Vec2(50, 50), -2.0));
  // Rounding decides membership at the border.
  EXPECT_TRUE(InFrustum(intr, Vec2(99.4, 0.0), 1.0));
  EXPECT_FALSE(InFrustum(intr, Vec2(99.5, 0.0), 1.0));
}

TEST(ProjectTest, BackProjectionRecoversPoint) {
  std::mt19937_64 rng(7);
  const auto intr = TestIntrinsics();
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  int checked = 0;
  while (checked < 1000) {
    const Pose pose = testing::RandomPose(rng);
    const Vec3 p(coord(rng), coord(rng), coord(rng));
    if (pose.Apply(p).z() <= 0.1) continue;
    const auto proj = Project(intr, pose, p);
    ASSERT_TRUE(proj.has_value());
    const Vec3 back = BackProject(intr, pose, proj->pixel, proj->cam_depth);
    EXPECT_LT((back - p).norm(), 1e-9);
    ++checked;
  }
}

TEST(PoseTest, ComposingWithIdentityIsBitwiseNeutral) {
  std::mt19937_64 rng(11);
  const auto intr = TestIntrinsics();
  for (int trial = 0; trial < 100; ++trial) {
    const Pose pose = testing::RandomPose(rng);
    const Vec3 p = Vec3::Random() * 3.0 + Vec3(0, 0, 5);
    const auto a = Project(intr, pose, p);
    const auto b = Project(intr, pose.Compose(Pose::Identity()), p);
    const auto c = Project(intr, Pose::Identity().Compose(pose), p);
    ASSERT_EQ(a.has_value(), b.has_value());
    ASSERT_EQ(a.has_value(), c.has_value());
    if (!a) continue;
    EXPECT_EQ(a->pixel, b->pixel);
    EXPECT_EQ(a->cam_depth, b->cam_depth);
    EXPECT_EQ(a->pixel, c->pixel);
    EXPECT_EQ(a->cam_depth, c->cam_depth);
  }
}

TEST(PoseTest, ValidationAndLookAt) {
  Pose bad;
  bad.rotation(0, 0) = 2.0;
  EXPECT_THROW(bad.Validate(), ContractError);
  const Pose look = Pose::LookAt(Vec3(1, 2, 3), Vec3(4, 2, 3), Vec3(0, 0, 1));
  EXPECT_NO_THROW(look.Validate());
  EXPECT_LT((look.Apply(Vec3(4, 2, 3)) - Vec3(0, 0, 3)).norm(), 1e-12);
  EXPECT_LT((look.CameraCenter() - Vec3(1, 2, 3)).norm(), 1e-12);
  // World up maps to negative camera y (image rows grow downward).
  EXPECT_LT(look.Apply(Vec3(4, 2, 4)).y(), 0.0);
}

TEST(IntrinsicsTest, Validation) {
  EXPECT_NO_THROW(TestIntrinsics().Validate());
  CameraIntrinsics bad = TestIntrinsics();
  bad.fx = 0.0;
  EXPECT_THROW(bad.Validate(), ContractError);
  bad = TestIntrinsics();
  bad.cx = 100.0;
  EXPECT_THROW(bad.Validate(), ContractError);
}

}  // namespace
}  // namespace semfuse
