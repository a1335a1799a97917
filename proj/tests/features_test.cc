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
#include "semfuse/features.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "semfuse/errors.h"
#include "test_util.h"

namespace semfuse {
namespace {

const CameraIntrinsics kIntr{100.0, 100.0, 32.0, 24.0, 64, 48};

TEST(DepthPatchTest, ConstantField) {
  const auto patch = DepthPatch(DepthMap(64, 48, 2.0), 10, 10);
  ASSERT_TRUE(patch.has_value());
  for (double d : *patch) EXPECT_EQ(d, 2.0);
}

TEST(DepthPatchTest, CornerReplicatesCenter) {
  DepthMap depth(4, 4, 5.0);
  depth(0, 0) = 1.5;
  const auto patch = DepthPatch(depth, 0, 0);
  ASSERT_TRUE(patch.has_value());
  const std::array<double, 9> expected = {1.5, 1.5, 1.5, 1.5, 1.5, 5.0, 1.5, 5.0, 5.0};
  EXPECT_EQ(*patch, expected);
}

TEST(DepthPatchTest, StepEdge) {
  DepthMap depth(8, 8, 1.0);
  for (int y = 0; y < 8; ++y) {
    for (int x = 5; x < 8; ++x) depth(x, y) = 3.0;
  }
  const auto patch = DepthPatch(depth, 4, 4);
  const std::array<double, 9> expected = {1, 1, 3, 1, 1, 3, 1, 1, 3};
  EXPECT_EQ(*patch, expected);
}

TEST(DepthPatchTest, InvalidCenterAndNeighbors) {
  DepthMap depth(5, 5, 2.0);
  depth(2, 2) = kInvalidDepth;
  EXPECT_FALSE(DepthPatch(depth, 2, 2).has_value());
  depth(2, 2) = 4.0;
  depth(1, 1) = std::nan("");
  EXPECT_EQ((*DepthPatch(depth, 2, 2))[0], 4.0);
  EXPECT_THROW(DepthPatch(depth, 5, 0), ContractError);
}

TEST(GradientStatsTest, ConstantRampAndSpike) {
  GrayImage flat(16, 16, 0.4);
  const GradStats zero = GradientStats(flat, 8, 8);
  EXPECT_EQ(zero.mean, 0.0);
  EXPECT_EQ(zero.std, 0.0);

  GrayImage ramp(16, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) ramp(x, y) = x;
  }
  for (int x = 1; x < 15; ++x) {
    const GradStats g = GradientStats(ramp, x, 7);
    EXPECT_DOUBLE_EQ(g.mean, 1.0);
    EXPECT_EQ(g.std, 0.0);
  }
  // Clamped differences keep the unit slope on the border as well.
  EXPECT_DOUBLE_EQ(GradientStats(ramp, 0, 0).mean, 1.0);

  flat(8, 8) = 1.0;
  EXPECT_GT(GradientStats(flat, 8, 8).std, 0.0);
}

TEST(GradientStatsTest, MatchesDirectComputation) {
  std::mt19937_64 rng(2);
  GrayImage img(9, 7);
  for (double& v : img.data()) v = std::uniform_real_distribution<double>(0, 1)(rng);
  const int x = 4, y = 3;
  std::vector<double> norms;
  for (int yy = y - 1; yy <= y + 1; ++yy) {
    for (int xx = x - 1; xx <= x + 1; ++xx) {
      const double gx = (img(xx + 1, yy) - img(xx - 1, yy)) / 2.0;
      const double gy = (img(xx, yy + 1) - img(xx, yy - 1)) / 2.0;
      norms.push_back(std::hypot(gx, gy));
    }
  }
  double mean = 0;
  for (double n : norms) mean += n / 9.0;
  double var = 0;
  for (double n : norms) var += (n - mean) * (n - mean) / 9.0;
  const GradStats g = GradientStats(img, x, y);
  EXPECT_NEAR(g.mean, mean, 1e-14);
  EXPECT_NEAR(g.std, std::sqrt(var), 1e-14);
}

TEST(NccTest, Examples) {
  Patch5 a{};
  for (int i = 0; i < 25; ++i) a[i] = std::sin(0.7 * i) + 0.1 * i;
  EXPECT_NEAR(Ncc(a, a), 1.0, 1e-15);
  double mean = 0;
  for (double v : a) mean += v / 25.0;
  Patch5 neg{};
  for (int i = 0; i < 25; ++i) neg[i] = -(a[i] - mean);
  EXPECT_NEAR(Ncc(a, neg), -1.0, 1e-15);
  Patch5 flat{};
  flat.fill(3.0);
  EXPECT_EQ(Ncc(flat, a), 0.0);
  EXPECT_EQ(Ncc(a, flat), 0.0);
}

TEST(NccTest, AffineInvarianceAndRange) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    Patch5 a{}, b{}, c{};
    for (int i = 0; i < 25; ++i) {
      a[i] = dist(rng);
      b[i] = dist(rng);
      c[i] = 3.5 * a[i] + 0.2;
    }
    const double r = Ncc(a, b);
    EXPECT_GE(r, -1.0);
    EXPECT_LE(r, 1.0);
    EXPECT_NEAR(Ncc(c, b), r, 1e-12);
  }
}

SensorView ConstantView(double depth, const Pose& pose = Pose::Identity()) {
  SensorView view;
  view.intr = kIntr;
  view.pose = pose;
  view.depth = DepthMap(kIntr.width, kIntr.height, depth);
  view.image = GrayImage(kIntr.width, kIntr.height, 0.5);
  return view;
}

// Voxel column along the optical axis, centers at the given depths.
VoxelGridSpec AxisColumn(double z0, int count, double size = 0.1) {
  return VoxelGridSpec{Vec3(-size / 2, -size / 2, z0 - size / 2), size, {1, 1, count}};
}

TEST(ExtractFeatureVolumeTest, SingleViewEqualsRawFeatures) {
  std::mt19937_64 rng(6);
  SensorView view = ConstantView(2.0);
  for (double& v : view.image.data()) v = std::uniform_real_distribution<double>(0, 1)(rng);
  for (double& d : view.depth.data()) d = std::uniform_real_distribution<double>(1.95, 2.05)(rng);
  const VoxelGridSpec spec = AxisColumn(2.0, 1);
  const std::vector<SensorView> views = {view};
  const FeatureVolume f = ExtractFeatureVolume(views, spec, 0.3, false);
  ASSERT_EQ(f.counts[0], 1);
  const Vec2 pixel = Project(kIntr, Pose::Identity(), VoxelCenter(spec, {0, 0, 0}))->pixel;
  const auto [u, v] = RoundPixel(pixel);
  const auto patch = *DepthPatch(view.depth, u, v);
  const GradStats g = GradientStats(view.image, u, v);
  const auto row = f.At(0);
  for (int i = 0; i < 9; ++i) EXPECT_EQ(row[i], patch[i]);
  EXPECT_EQ(row[9], g.mean);
  EXPECT_EQ(row[10], g.std);
}

TEST(ExtractFeatureVolumeTest, TwoViewsAverage) {
  const std::vector<SensorView> views = {ConstantView(2.0), ConstantView(4.0)};
  const FeatureVolume f = ExtractFeatureVolume(views, AxisColumn(3.0, 1), 1.0, false);
  ASSERT_EQ(f.counts[0], 2);
  for (int i = 0; i < 9; ++i) EXPECT_EQ(f.At(0)[i], 3.0);
}

TEST(ExtractFeatureVolumeTest, NoContributingViewIsZero) {
  const std::vector<SensorView> views = {ConstantView(2.0)};
  // Far behind the surface, and a voxel behind the camera.
  const FeatureVolume f = ExtractFeatureVolume(views, AxisColumn(5.0, 1), 0.3, false);
  EXPECT_EQ(f.counts[0], 0);
  for (double v : f.values) EXPECT_EQ(v, 0.0);
  const FeatureVolume g = ExtractFeatureVolume(views, AxisColumn(-1.0, 1), 0.3, false);
  EXPECT_EQ(g.counts[0], 0);
}

TEST(ExtractFeatureVolumeTest, ConstantDepthSceneRecoversDepth) {
  const std::vector<SensorView> views = {ConstantView(2.5)};
  const VoxelGridSpec spec{Vec3(-0.5, -0.4, 2.2), 0.05, {20, 16, 12}};
  const FeatureVolume f = ExtractFeatureVolume(views, spec, 0.3, false);
  int observed = 0;
  for (std::int64_t x = 0; x < spec.NumVoxels(); ++x) {
    if (f.counts[x] == 0) continue;
    ++observed;
    for (int i = 0; i < 9; ++i) EXPECT_FLOAT_EQ(f.At(x)[i], 2.5);
  }
  EXPECT_GT(observed, 100);
}

TEST(ExtractFeatureVolumeTest, ViewOrderInvariantBitwise) {
  std::mt19937_64 rng(8);
  std::vector<SensorView> views;
  for (int i = 0; i < 5; ++i) {
    const Vec3 eye(0.2 * i - 0.4, -0.1 * i, -2.0);
    SensorView view = ConstantView(0.0, Pose::LookAt(eye, Vec3(0, 0, 0), Vec3(0, -1, 0)));
    for (double& d : view.depth.data()) d = std::uniform_real_distribution<double>(1.6, 2.4)(rng);
    for (double& v : view.image.data()) v = std::uniform_real_distribution<double>(0, 1)(rng);
    view.right_image = view.image;
    for (double& v : view.right_image->data()) v = std::uniform_real_distribution<double>(0, 1)(rng);
    view.baseline = 0.1;
    views.push_back(std::move(view));
  }
  const VoxelGridSpec spec{Vec3(-0.5, -0.5, -0.5), 0.05, {20, 20, 20}};
  const FeatureVolume base = ExtractFeatureVolume(views, spec, 0.3, true);
  int multi = 0;
  for (int c : base.counts) multi += c >= 2;
  EXPECT_GT(multi, 100);
  std::vector<int> order = {0, 1, 2, 3, 4};
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<SensorView> shuffled;
    for (int i : order) shuffled.push_back(views[i]);
    const FeatureVolume f = ExtractFeatureVolume(shuffled, spec, 0.3, true);
    EXPECT_EQ(f.values, base.values);
    EXPECT_EQ(f.counts, base.counts);
  }
  for (std::int64_t x = 0; x < spec.NumVoxels(); ++x) {
    if (base.counts[x] == 0) continue;
    EXPECT_GE(base.At(x)[11], -1.0);
    EXPECT_LE(base.At(x)[11], 1.0);
    EXPECT_GE(base.At(x)[12], 0.0);
    for (double v : base.At(x)) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(ExtractFeatureVolumeTest, RectifiedStereoPairCorrelates) {
  // fx * b / d = 100 * 0.1 / 2 = 5 pixels of disparity.
  SensorView view = ConstantView(2.0);
  GrayImage right(kIntr.width, kIntr.height);
  for (int y = 0; y < kIntr.height; ++y) {
    for (int x = 0; x < kIntr.width; ++x) {
      const auto texture = [&](int xx) { return std::sin(0.9 * xx) + 0.3 * std::cos(0.4 * y); };
      view.image(x, y) = texture(x);
      right(x, y) = texture(x + 5);
    }
  }
  view.right_image = right;
  view.baseline = 0.1;
  const std::vector<SensorView> views = {view};
  const FeatureVolume f = ExtractFeatureVolume(views, AxisColumn(2.0, 1), 0.3, true);
  ASSERT_EQ(f.dim, kStereoFeatureDim);
  ASSERT_EQ(f.counts[0], 1);
  EXPECT_NEAR(f.At(0)[11], 1.0, 1e-12);
  EXPECT_EQ(f.At(0)[12], 0.0);

  SensorView mono = view;
  mono.right_image.reset();
  const std::vector<SensorView> bad = {mono};
  EXPECT_THROW(ExtractFeatureVolume(bad, AxisColumn(2.0, 1), 0.3, true), ContractError);
}

TEST(ExtractFeatureVolumeTest, OutlierFlagsFollowMasks) {
  SensorView view = ConstantView(2.0);
  MaskImage mask(kIntr.width, kIntr.height, 0);
  const VoxelGridSpec spec = AxisColumn(2.0, 1);
  const auto [u, v] = RoundPixel(Project(kIntr, Pose::Identity(), VoxelCenter(spec, {0, 0, 0}))->pixel);
  mask(u + 1, v) = 1;
  view.outlier_mask = mask;
  std::vector<SensorView> views = {view};
  FeatureVolume f = ExtractFeatureVolume(views, spec, 0.3, false);
  EXPECT_EQ(f.outlier_flags[0], kOutlierInPatch);
  mask(u, v) = 1;
  views[0].outlier_mask = mask;
  f = ExtractFeatureVolume(views, spec, 0.3, false);
  EXPECT_EQ(f.outlier_flags[0], kOutlierInPatch | kOutlierAtCenter);
}

}  // namespace
}  // namespace semfuse
