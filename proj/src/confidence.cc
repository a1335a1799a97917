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

#include <algorithm>
#include <cmath>
#include <random>

#include "semfuse/errors.h"

namespace semfuse {
namespace {

constexpr std::int64_t kChunk = 256;

using ColMatrix = Eigen::MatrixXd;
using ConstMap = Eigen::Map<const ColMatrix>;

// Forward pass over a block of rows; keeps post-activation outputs per layer.
void ForwardBlock(const MlpParams& params, const ConstMap& input,
                  std::vector<ColMatrix>* activations) {
  activations->resize(params.layers.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    ColMatrix& out = (*activations)[l];
    if (l == 0) {
      out.noalias() = layer.weight * input;
    } else {
      out.noalias() = layer.weight * (*activations)[l - 1];
    }
    out.colwise() += layer.bias;
    out = out.cwiseMax(0.0);
  }
}

}  // namespace

std::vector<int> MlpParams::Widths() const {
  std::vector<int> widths;
  if (layers.empty()) return widths;
  widths.push_back(InputDim());
  for (const DenseLayer& layer : layers) widths.push_back(static_cast<int>(layer.weight.rows()));
  return widths;
}

std::size_t MlpParams::NumParams() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

void MlpParams::Validate() const {
  Require(!layers.empty(), "mlp: no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Require(layers[l].bias.size() == layers[l].weight.rows(), "mlp: bias size mismatch");
    if (l > 0) {
      Require(layers[l].weight.cols() == layers[l - 1].weight.rows(),
              "mlp: consecutive layer widths incompatible");
    }
    Require(layers[l].weight.allFinite() && layers[l].bias.allFinite(), "mlp: non-finite entry");
  }
  Require(layers.back().weight.rows() == 1, "mlp: output width must be 1");
}

void MlpParams::Flatten(std::vector<double>* out) const {
  for (const DenseLayer& layer : layers) {
    out->insert(out->end(), layer.weight.data(), layer.weight.data() + layer.weight.size());
    out->insert(out->end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
}

void MlpParams::Unflatten(std::span<const double> flat) {
  Require(flat.size() == NumParams(), "mlp: flat parameter size mismatch");
  std::size_t pos = 0;
  for (DenseLayer& layer : layers) {
    std::copy_n(flat.data() + pos, layer.weight.size(), layer.weight.data());
    pos += layer.weight.size();
    std::copy_n(flat.data() + pos, layer.bias.size(), layer.bias.data());
    pos += layer.bias.size();
  }
}

MlpGradients MlpGradients::ZerosLike(const MlpParams& params) {
  MlpGradients g;
  for (const DenseLayer& layer : params.layers) {
    g.layers.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                        Eigen::VectorXd::Zero(layer.bias.size())});
  }
  g.input = Eigen::VectorXd::Zero(params.InputDim());
  return g;
}

void MlpGradients::Flatten(std::vector<double>* out) const {
  for (const DenseLayer& layer : layers) {
    out->insert(out->end(), layer.weight.data(), layer.weight.data() + layer.weight.size());
    out->insert(out->end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
}

MlpParams InitMlpParams(std::uint64_t seed, const std::vector<int>& widths, int sensor_id) {
  Require(widths.size() >= 2, "mlp: need an input and at least one layer width");
  Require(widths.back() == 1, "mlp: widths must end in 1");
  for (int w : widths) Require(w >= 1, "mlp: widths must be positive");
  std::mt19937_64 rng(seed);
  MlpParams params;
  params.sensor_id = sensor_id;
  const std::size_t num_layers = widths.size() - 1;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    DenseLayer layer{Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)};
    if (l + 1 < num_layers) {
      std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / in));
      for (int c = 0; c < in; ++c) {
        for (int r = 0; r < out; ++r) layer.weight(r, c) = normal(rng);
      }
    } else {
      layer.bias.setOnes();
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

double MlpForward(const MlpParams& params, std::span<const double> features) {
  Require(static_cast<int>(features.size()) == params.InputDim(),
          "mlp: feature dimension does not match first layer");
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(features.data(), features.size());
  for (const DenseLayer& layer : params.layers) {
    a = (layer.weight * a + layer.bias).cwiseMax(0.0);
  }
  return a(0);
}

MlpGradients MlpBackward(const MlpParams& params, std::span<const double> features,
                         double upstream) {
  Require(static_cast<int>(features.size()) == params.InputDim(),
          "mlp: feature dimension does not match first layer");
  const std::size_t num_layers = params.layers.size();
  std::vector<Eigen::VectorXd> inputs(num_layers);
  std::vector<Eigen::VectorXd> pre(num_layers);
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(features.data(), features.size());
  for (std::size_t l = 0; l < num_layers; ++l) {
    inputs[l] = a;
    pre[l] = params.layers[l].weight * a + params.layers[l].bias;
    a = pre[l].cwiseMax(0.0);
  }
  MlpGradients grads = MlpGradients::ZerosLike(params);
  Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, upstream);
  for (std::size_t l = num_layers; l-- > 0;) {
    for (Eigen::Index r = 0; r < delta.size(); ++r) {
      if (!(pre[l](r) > 0.0)) delta(r) = 0.0;
    }
    grads.layers[l].weight = delta * inputs[l].transpose();
    grads.layers[l].bias = delta;
    delta = params.layers[l].weight.transpose() * delta;
  }
  grads.input = delta;
  return grads;
}

std::vector<double> MlpForwardBatch(const MlpParams& params, const double* features,
                                    std::int64_t count) {
  params.Validate();
  const int dim = params.InputDim();
  std::vector<double> out(static_cast<std::size_t>(count), 0.0);
  const std::int64_t chunks = (count + kChunk - 1) / kChunk;
#pragma omp parallel
  {
    std::vector<ColMatrix> acts;
#pragma omp for schedule(static)
    for (std::int64_t c = 0; c < chunks; ++c) {
      const std::int64_t begin = c * kChunk;
      const std::int64_t len = std::min(kChunk, count - begin);
      const ConstMap input(features + begin * dim, dim, len);
      ForwardBlock(params, input, &acts);
      std::copy_n(acts.back().data(), len, out.data() + begin);
    }
  }
  return out;
}

void MlpBackwardBatch(const MlpParams& params, const double* features,
                      const double* upstream, std::int64_t count, MlpGradients* grads) {
  params.Validate();
  const int dim = params.InputDim();
  const std::size_t num_layers = params.layers.size();
  const std::int64_t chunks = (count + kChunk - 1) / kChunk;
  std::vector<MlpGradients> partial(static_cast<std::size_t>(chunks));
#pragma omp parallel
  {
    std::vector<ColMatrix> acts;
    ColMatrix delta, next;
#pragma omp for schedule(static)
    for (std::int64_t c = 0; c < chunks; ++c) {
      const std::int64_t begin = c * kChunk;
      const std::int64_t len = std::min(kChunk, count - begin);
      const ConstMap input(features + begin * dim, dim, len);
      ForwardBlock(params, input, &acts);
      MlpGradients& g = partial[c];
      g.layers.resize(num_layers);
      delta = Eigen::Map<const ColMatrix>(upstream + begin, 1, len);
      for (std::size_t l = num_layers; l-- > 0;) {
        // Post-activation > 0 iff pre-activation > 0.
        delta = (acts[l].array() > 0.0).select(delta, 0.0);
        if (l > 0) {
          g.layers[l].weight.noalias() = delta * acts[l - 1].transpose();
        } else {
          g.layers[l].weight.noalias() = delta * input.transpose();
        }
        g.layers[l].bias = delta.rowwise().sum();
        if (l > 0) {
          next.noalias() = params.layers[l].weight.transpose() * delta;
          delta.swap(next);
        }
      }
    }
  }
  for (const MlpGradients& g : partial) {
    for (std::size_t l = 0; l < num_layers; ++l) {
      grads->layers[l].weight += g.layers[l].weight;
      grads->layers[l].bias += g.layers[l].bias;
    }
  }
}

}  // namespace semfuse
