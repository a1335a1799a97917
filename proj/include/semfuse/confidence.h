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
#include <span>
#include <vector>

#include <Eigen/Core>

namespace semfuse {

// Hidden and output widths of the confidence network; the input width is the
// feature dimension of the sensor.
inline const std::vector<int> kDefaultHiddenWidths = {100, 50, 20, 10, 1};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Fully connected ReLU network mapping a feature vector to a confidence. A
// ReLU follows every layer, including the last.
struct MlpParams {
  int sensor_id = 0;
  std::vector<DenseLayer> layers;

  int InputDim() const { return static_cast<int>(layers.front().weight.cols()); }
  std::vector<int> Widths() const;
  std::size_t NumParams() const;
  void Validate() const;

  // Flat view in layer order: weight (column-major), then bias.
  void Flatten(std::vector<double>* out) const;
  void Unflatten(std::span<const double> flat);
};

// Same shape as MlpParams.
struct MlpGradients {
  std::vector<DenseLayer> layers;
  Eigen::VectorXd input;

  static MlpGradients ZerosLike(const MlpParams& params);
  void Flatten(std::vector<double>* out) const;
};

// `widths` includes the input width and must end in 1. Hidden weights are
// He-normal from `seed`, hidden biases 0, final weights 0 and final bias 1, so
// a fresh network outputs exactly 1 for every input.
MlpParams InitMlpParams(std::uint64_t seed, const std::vector<int>& widths, int sensor_id = 0);

double MlpForward(const MlpParams& params, std::span<const double> features);

// Exact gradients of upstream * confidence. ReLU'(0) = 0.
MlpGradients MlpBackward(const MlpParams& params, std::span<const double> features,
                         double upstream);

// Confidence for `count` voxel-major feature rows.
std::vector<double> MlpForwardBatch(const MlpParams& params, const double* features,
                                    std::int64_t count);

// Sum over rows of upstream[r] * d confidence_r / d params, accumulated into
// `grads` (input gradients are not formed). Rows are processed in fixed-size
// chunks reduced in chunk order, so the result does not depend on the number
// of threads.
void MlpBackwardBatch(const MlpParams& params, const double* features,
                      const double* upstream, std::int64_t count, MlpGradients* grads);

}  // namespace semfuse
