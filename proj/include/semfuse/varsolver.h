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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "semfuse/fusion.h"
#include "semfuse/geometry.h"

namespace semfuse {

// Learned linear regularizer: a 3x3x3 convolution from |labels| input channels
// to 3*|labels| output channels (one 3-vector group per label), plus the
// primal and dual step sizes. Step sizes are stored as logarithms so they stay
// positive under gradient updates.
struct RegularizerW {
  static constexpr int kTaps = 27;

  int num_labels = 2;
  std::vector<double> kernel;  // [(out * num_labels + in) * kTaps + tap]
  double log_sigma = 0.0;
  double log_tau = 0.0;

  static int Tap(int dx, int dy, int dz) { return (dx + 1) + 3 * ((dy + 1) + 3 * (dz + 1)); }
  int OutChannels() const { return 3 * num_labels; }
  double& K(int out, int in, int tap) { return kernel[(out * num_labels + in) * kTaps + tap]; }
  double K(int out, int in, int tap) const {
    return kernel[(out * num_labels + in) * kTaps + tap];
  }
  double sigma() const;
  double tau() const;

  static RegularizerW Zero(int num_labels, double sigma = 0.1, double tau = 0.1);
  // Group 3*l+a holds weight * forward difference of label l along axis a.
  static RegularizerW ForwardDifference(int num_labels, double weight, double sigma = 0.1,
                                        double tau = 0.1);

  std::size_t NumParams() const { return kernel.size() + 2; }
  // kernel, then log_sigma, log_tau.
  void Flatten(std::vector<double>* out) const;
  void Unflatten(std::span<const double> flat);
  void Validate() const;
};

// Relaxed labeling, label-major: u[label * N + voxel].
struct LabelVolume {
  VoxelGridSpec spec;
  std::vector<std::string> labels;
  std::vector<double> u;

  int NumLabels() const { return static_cast<int>(labels.size()); }
  double at(int label, std::int64_t voxel) const { return u[label * spec.NumVoxels() + voxel]; }
};

struct SolverState {
  VoxelGridSpec spec;
  int num_labels = 2;
  std::vector<double> u;     // L planes
  std::vector<double> ubar;  // L planes
  std::vector<double> xi;    // 3L planes, channel 3*label + axis
  std::vector<double> nu;    // 1 plane
  int iteration = 0;

  // u = ubar = 1/L, xi = 0, nu = 0.
  static SolverState Initial(const VoxelGridSpec& spec, int num_labels);
};

struct SolverConfig {
  int iterations = 50;
  int levels = 1;
  double constraint_tolerance = 1e-2;
};

// Wu: L planes in, 3L planes out. Reads past the grid border take the value
// of the nearest border voxel.
std::vector<double> ApplyW(const RegularizerW& w, const VoxelGridSpec& spec,
                           std::span<const double> u);
// W*xi: exact adjoint of ApplyW.
std::vector<double> ApplyWAdjoint(const RegularizerW& w, const VoxelGridSpec& spec,
                                  std::span<const double> xi);
// d<g, Wu>/d kernel, shaped like RegularizerW::kernel.
std::vector<double> WKernelGradient(const VoxelGridSpec& spec, int num_labels,
                                    std::span<const double> g, std::span<const double> u);

// One primal-dual update: nu, then xi (per-group unit-ball projection), then u
// (clamped to [0,1]), then the over-relaxation ubar = 2u_new - u_old.
void PdIteration(const SemanticDatacost& datacost, const RegularizerW& w, SolverState* state);

// Runs config.iterations unrolled updates from the uniform labeling and
// returns u. With config.levels > 1 the problem is first solved on a 2x
// coarser grid and the trilinearly upsampled result is the starting point.
LabelVolume Solve(const SemanticDatacost& datacost, const RegularizerW& w,
                  const SolverConfig& config);

// Sum over voxels and label groups of ||(Wu)_group||_2, plus <datacost, u>.
double Energy(const LabelVolume& u, const SemanticDatacost& datacost, const RegularizerW& w);

// Per-voxel argmax; ties go to the lowest label index.
std::vector<std::int32_t> ExtractLabels(const LabelVolume& u);

struct SolverGradients {
  std::vector<double> datacost;  // L planes
  std::vector<double> kernel;
  double log_sigma = 0.0;
  double log_tau = 0.0;
};

// Unrolled solver that records every iterate so the loss gradient can be
// propagated back through all updates, including both projections.
class UnrolledSolver {
 public:
  UnrolledSolver(const VoxelGridSpec& spec, int num_labels);
  ~UnrolledSolver();
  UnrolledSolver(UnrolledSolver&&) noexcept;
  UnrolledSolver& operator=(UnrolledSolver&&) noexcept;

  // Returns u after `iterations` updates (unpadded, label-major).
  std::vector<double> Forward(std::span<const double> datacost, const RegularizerW& w,
                              int iterations);
  // Gradients of a scalar loss given d loss / d u_K.
  SolverGradients Backward(std::span<const double> grad_u) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace semfuse
