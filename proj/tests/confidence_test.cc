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
#include "semfuse/confidence.h"

#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "semfuse/errors.h"
#include "semfuse/reference.h"
#include "test_util.h"

namespace semfuse {
namespace {

MlpParams TinyNet() {
  MlpParams p;
  p.layers.resize(2);
  p.layers[0].weight = Eigen::MatrixXd::Constant(1, 1, 2.0);
  p.layers[0].bias = Eigen::VectorXd::Constant(1, 0.0);
  p.layers[1].weight = Eigen::MatrixXd::Constant(1, 1, 1.0);
  p.layers[1].bias = Eigen::VectorXd::Constant(1, -1.0);
  return p;
}

// Randomizes every parameter including the final layer.
MlpParams RandomNet(std::mt19937_64& rng, const std::vector<int>& widths) {
  MlpParams p = InitMlpParams(rng(), widths);
  std::vector<double> flat;
  p.Flatten(&flat);
  flat = testing::RandomVector(rng, flat.size(), -1.0, 1.0);
  p.Unflatten(flat);
  return p;
}

TEST(InitMlpParamsTest, FreshNetworkOutputsOne) {
  std::mt19937_64 rng(1);
  for (std::uint64_t seed : {0ull, 7ull, 12345ull}) {
    std::vector<int> widths = {13};
    widths.insert(widths.end(), kDefaultHiddenWidths.begin(), kDefaultHiddenWidths.end());
    const MlpParams p = InitMlpParams(seed, widths);
    for (int i = 0; i < 20; ++i) {
      const auto f = testing::RandomVector(rng, 13, -10.0, 10.0);
      EXPECT_EQ(MlpForward(p, f), 1.0);
    }
  }
}

TEST(InitMlpParamsTest, DeterministicAndShaped) {
  const MlpParams a = InitMlpParams(9, {2, 2, 1}, 0);
  const MlpParams b = InitMlpParams(9, {2, 2, 1}, 1);
  std::vector<double> fa, fb;
  a.Flatten(&fa);
  b.Flatten(&fb);
  ASSERT_EQ(fa.size(), fb.size());
  EXPECT_EQ(std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(double)), 0);
  EXPECT_EQ(a.Widths(), (std::vector<int>{2, 2, 1}));
  EXPECT_EQ(a.NumParams(), 2u * 2 + 2 + 2 + 1);
  EXPECT_EQ(a.layers[0].bias, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(a.layers[1].weight, Eigen::MatrixXd::Zero(1, 2));
  EXPECT_EQ(a.layers[1].bias(0), 1.0);
  EXPECT_NE(InitMlpParams(10, {2, 2, 1}).layers[0].weight, a.layers[0].weight);
}

TEST(InitMlpParamsTest, HeScale) {
  const MlpParams p = InitMlpParams(3, {400, 300, 1});
  const Eigen::MatrixXd& w = p.layers[0].weight;
  const double mean = w.mean();
  const double var = (w.array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.0, 0.003);
  EXPECT_NEAR(var, 2.0 / 400.0, 0.0002);
}

TEST(InitMlpParamsTest, BadWidthsAreContractErrors) {
  EXPECT_THROW(InitMlpParams(1, {}), ContractError);
  EXPECT_THROW(InitMlpParams(1, {3}), ContractError);
  EXPECT_THROW(InitMlpParams(1, {3, 2}), ContractError);
  EXPECT_THROW(InitMlpParams(1, {3, 0, 1}), ContractError);
}

TEST(MlpForwardTest, HandExamples) {
  const MlpParams p = TinyNet();
  const double pos[] = {3.0};
  const double neg[] = {-3.0};
  EXPECT_EQ(MlpForward(p, pos), 5.0);
  EXPECT_EQ(MlpForward(p, neg), 0.0);
  const double two[] = {1.0, 2.0};
  EXPECT_THROW(MlpForward(p, two), ContractError);
}

TEST(MlpBackwardTest, HandExamples) {
  const MlpParams p = TinyNet();
  const double pos[] = {3.0};
  const MlpGradients g = MlpBackward(p, pos, 1.0);
  EXPECT_EQ(g.layers[1].bias(0), 1.0);
  EXPECT_EQ(g.layers[1].weight(0, 0), 6.0);
  EXPECT_EQ(g.layers[0].weight(0, 0), 3.0);
  EXPECT_EQ(g.layers[0].bias(0), 1.0);
  EXPECT_EQ(g.input(0), 2.0);

  const double neg[] = {-3.0};
  std::vector<double> flat;
  MlpBackward(p, neg, 1.0).Flatten(&flat);
  for (double v : flat) EXPECT_EQ(v, 0.0);
  MlpBackward(p, pos, 0.0).Flatten(&flat);
  for (double v : flat) EXPECT_EQ(v, 0.0);
}

TEST(MlpBackwardTest, MatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> width(1, 8);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<int> widths = {width(rng)};
    const int hidden = 1 + trial % 4;
    for (int h = 0; h < hidden; ++h) widths.push_back(width(rng));
    widths.push_back(1);
    const MlpParams p = RandomNet(rng, widths);
    const auto x = testing::RandomVector(rng, widths[0], -2.0, 2.0);
    if (MlpForward(p, x) <= 0.0) continue;
    const double upstream = 0.7;
    std::vector<double> analytic;
    const MlpGradients g = MlpBackward(p, x, upstream);
    g.Flatten(&analytic);
    std::vector<double> flat;
    p.Flatten(&flat);
    const double h = 1e-5;
    for (std::size_t i = 0; i < flat.size(); ++i) {
      MlpParams q = p;
      std::vector<double> probe = flat;
      probe[i] = flat[i] + h;
      q.Unflatten(probe);
      const double plus = MlpForward(q, x);
      probe[i] = flat[i] - h;
      q.Unflatten(probe);
      const double minus = MlpForward(q, x);
      const double numeric = upstream * (plus - minus) / (2 * h);
      EXPECT_LT(testing::RelativeError(analytic[i], numeric), 1e-4)
          << "trial " << trial << " param " << i;
      ++checked;
    }
    for (int i = 0; i < widths[0]; ++i) {
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double numeric = upstream * (MlpForward(p, xp) - MlpForward(p, xm)) / (2 * h);
      EXPECT_LT(testing::RelativeError(g.input(i), numeric), 1e-4);
    }
  }
  EXPECT_GT(checked, 200);
}

TEST(MlpBatchTest, MatchesSingleAndReference) {
  std::mt19937_64 rng(13);
  const MlpParams p = RandomNet(rng, {11, 16, 8, 1});
  const std::int64_t count = 1000;
  const auto features = testing::RandomVector(rng, count * 11, -1.0, 1.0);
  const auto upstream = testing::RandomVector(rng, count, -1.0, 1.0);
  const auto batch = MlpForwardBatch(p, features.data(), count);
  const auto ref = reference::MlpForwardBatch(p, features.data(), count);
  ASSERT_EQ(batch.size(), static_cast<std::size_t>(count));
  MlpGradients summed = MlpGradients::ZerosLike(p);
  for (std::int64_t r = 0; r < count; ++r) {
    std::span<const double> row(features.data() + r * 11, 11);
    const double single = MlpForward(p, row);
    EXPECT_NEAR(batch[r], single, 1e-12);
    EXPECT_NEAR(ref[r], single, 1e-12);
    EXPECT_GE(batch[r], 0.0);
    const MlpGradients g = MlpBackward(p, row, upstream[r]);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      summed.layers[l].weight += g.layers[l].weight;
      summed.layers[l].bias += g.layers[l].bias;
    }
  }
  MlpGradients batch_grads = MlpGradients::ZerosLike(p);
  MlpBackwardBatch(p, features.data(), upstream.data(), count, &batch_grads);
  std::vector<double> a, b;
  summed.Flatten(&a);
  batch_grads.Flatten(&b);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10);

  // Accumulates rather than overwrites.
  MlpBackwardBatch(p, features.data(), upstream.data(), count, &batch_grads);
  std::vector<double> twice;
  batch_grads.Flatten(&twice);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(twice[i], 2 * b[i], 1e-10);
}

TEST(MlpBatchTest, BitwiseRepeatable) {
  std::mt19937_64 rng(15);
  const MlpParams p = RandomNet(rng, {13, 20, 10, 1});
  const std::int64_t count = 3000;
  const auto features = testing::RandomVector(rng, count * 13);
  const auto upstream = testing::RandomVector(rng, count);
  MlpGradients g1 = MlpGradients::ZerosLike(p), g2 = MlpGradients::ZerosLike(p);
  MlpBackwardBatch(p, features.data(), upstream.data(), count, &g1);
  MlpBackwardBatch(p, features.data(), upstream.data(), count, &g2);
  std::vector<double> a, b;
  g1.Flatten(&a);
  g2.Flatten(&b);
  EXPECT_EQ(a, b);
  EXPECT_EQ(MlpForwardBatch(p, features.data(), count), MlpForwardBatch(p, features.data(), count));
}

TEST(MlpParamsTest, IndependentSensors) {
  std::mt19937_64 rng(17);
  const MlpParams a = RandomNet(rng, {4, 6, 1});
  MlpParams b = a;
  b.sensor_id = 1;
  const auto x = testing::RandomVector(rng, 4);
  const double before = MlpForward(a, x);
  b.layers[0].weight.array() += 1.0;
  EXPECT_EQ(MlpForward(a, x), before);
}

TEST(MlpParamsTest, FlattenRoundTripAndValidate) {
  std::mt19937_64 rng(19);
  MlpParams p = RandomNet(rng, {5, 7, 3, 1});
  std::vector<double> flat;
  p.Flatten(&flat);
  EXPECT_EQ(flat.size(), p.NumParams());
  MlpParams q = InitMlpParams(0, {5, 7, 3, 1});
  q.Unflatten(flat);
  std::vector<double> again;
  q.Flatten(&again);
  EXPECT_EQ(flat, again);
  EXPECT_NO_THROW(p.Validate());
  p.layers[1].bias(0) = std::nan("");
  EXPECT_THROW(p.Validate(), ContractError);
  flat.pop_back();
  EXPECT_THROW(q.Unflatten(flat), ContractError);
}

}  // namespace
}  // namespace semfuse
