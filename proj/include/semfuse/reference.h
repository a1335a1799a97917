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

// Straightforward single-threaded implementations of the hot kernels. They
// are kept for testing and benchmarking the OpenMP versions and are not used
// by the library itself.

#include <span>
#include <vector>

#include "semfuse/confidence.h"
#include "semfuse/fusion.h"
#include "semfuse/varsolver.h"

namespace semfuse::reference {

void IntegrateDepthMap(const DepthMap& depth, const CameraIntrinsics& intr, const Pose& pose,
                       TsdfVolume* volume);

TsdfVolume FuseWeighted(std::span<const TsdfVolume> volumes,
                        std::span<const ConfidenceVolume> confs);

SemanticDatacost CombineDatacosts(std::span<const SemanticDatacost> datacosts,
                                  std::span<const ConfidenceVolume> confs);

std::vector<double> ApplyW(const RegularizerW& w, const VoxelGridSpec& spec,
                           std::span<const double> u);
std::vector<double> ApplyWAdjoint(const RegularizerW& w, const VoxelGridSpec& spec,
                                  std::span<const double> xi);
std::vector<double> WKernelGradient(const VoxelGridSpec& spec, int num_labels,
                                    std::span<const double> g, std::span<const double> u);

void PdIteration(const SemanticDatacost& datacost, const RegularizerW& w, SolverState* state);

std::vector<double> MlpForwardBatch(const MlpParams& params, const double* features,
                                    std::int64_t count);

}  // namespace semfuse::reference
