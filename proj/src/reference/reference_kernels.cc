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
#include <algorithm>
#include <cmath>

#include "semfuse/errors.h"
#include "semfuse/reference.h"

namespace semfuse::reference {

void IntegrateDepthMap(const DepthMap& depth, const CameraIntrinsics& intr, const Pose& pose,
                       TsdfVolume* volume) {
  Require(depth.width() == intr.width && depth.height() == intr.height,
          "depth map size does not match intrinsics");
  const VoxelGridSpec& spec = volume->spec;
  const double mu = volume->trunc;
  for (int k = 0; k < spec.dims[2]; ++k) {
    for (int j = 0; j < spec.dims[1]; ++j) {
      for (int i = 0; i < spec.dims[0]; ++i) {
        const auto proj = Project(intr, pose, VoxelCenter(spec, {i, j, k}));
        if (!proj || !InFrustum(intr, proj->pixel, proj->cam_depth)) continue;
        const auto [u, v] = RoundPixel(proj->pixel);
        const double d = depth(u, v);
        if (!IsValidDepth(d)) continue;
        const double s = d - proj->cam_depth;
        if (s < -mu) continue;
        const std::int64_t idx = spec.Linear(i, j, k);
        const double w = volume->weights[idx];
        volume->values[idx] = (volume->values[idx] * w + std::clamp(s / mu, -1.0, 1.0)) / (w + 1.0);
        volume->weights[idx] = w + 1.0;
      }
    }
  }
}

TsdfVolume FuseWeighted(std::span<const TsdfVolume> volumes,
                        std::span<const ConfidenceVolume> confs) {
  Require(!volumes.empty() && volumes.size() == confs.size(), "fuse: bad sensor lists");
  TsdfVolume out = TsdfVolume::Empty(volumes[0].spec, volumes[0].trunc);
  for (std::int64_t x = 0; x < out.spec.NumVoxels(); ++x) {
    double num = 0.0, den = 0.0;
    for (std::size_t s = 0; s < volumes.size(); ++s) {
      const double w = volumes[s].weights[x] > 0.0 ? confs[s].conf[x] : 0.0;
      num += w * volumes[s].values[x];
      den += w;
    }
    if (den >= kConfEpsilon) {
      out.values[x] = num / den;
      out.weights[x] = den;
    }
  }
  return out;
}

SemanticDatacost CombineDatacosts(std::span<const SemanticDatacost> datacosts,
                                  std::span<const ConfidenceVolume> confs) {
  Require(!datacosts.empty() && datacosts.size() == confs.size(), "combine: bad sensor lists");
  SemanticDatacost out = SemanticDatacost::Zero(datacosts[0].spec, datacosts[0].labels);
  for (int l = 0; l < out.NumLabels(); ++l) {
    for (std::int64_t x = 0; x < out.spec.NumVoxels(); ++x) {
      double acc = 0.0;
      for (std::size_t s = 0; s < datacosts.size(); ++s) acc += confs[s].conf[x] * datacosts[s].at(l, x);
      out.at(l, x) = acc;
    }
  }
  return out;
}

namespace {

// Border voxels extend outward: reads past the grid take the nearest voxel.
std::int64_t ClampedLinear(const VoxelGridSpec& spec, int i, int j, int k) {
  return spec.Linear(std::clamp(i, 0, spec.dims[0] - 1), std::clamp(j, 0, spec.dims[1] - 1),
                     std::clamp(k, 0, spec.dims[2] - 1));
}

}  // namespace

std::vector<double> ApplyW(const RegularizerW& w, const VoxelGridSpec& spec,
                           std::span<const double> u) {
  const int L = w.num_labels;
  const std::int64_t n = spec.NumVoxels();
  std::vector<double> out(static_cast<std::size_t>(3 * L * n), 0.0);
  for (int k = 0; k < spec.dims[2]; ++k)
    for (int j = 0; j < spec.dims[1]; ++j)
      for (int i = 0; i < spec.dims[0]; ++i)
        for (int o = 0; o < 3 * L; ++o) {
          double acc = 0.0;
          for (int in = 0; in < L; ++in)
            for (int dz = -1; dz <= 1; ++dz)
              for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                  acc += w.K(o, in, RegularizerW::Tap(dx, dy, dz)) *
                         u[in * n + ClampedLinear(spec, i + dx, j + dy, k + dz)];
                }
          out[o * n + spec.Linear(i, j, k)] = acc;
        }
  return out;
}

std::vector<double> ApplyWAdjoint(const RegularizerW& w, const VoxelGridSpec& spec,
                                  std::span<const double> xi) {
  const int L = w.num_labels;
  const std::int64_t n = spec.NumVoxels();
  std::vector<double> out(static_cast<std::size_t>(L * n), 0.0);
  // Scatter form: every term K * u(x + tap) of Wu contributes K * xi(x) to u's slot.
  for (int k = 0; k < spec.dims[2]; ++k)
    for (int j = 0; j < spec.dims[1]; ++j)
      for (int i = 0; i < spec.dims[0]; ++i)
        for (int o = 0; o < 3 * L; ++o)
          for (int in = 0; in < L; ++in)
            for (int dz = -1; dz <= 1; ++dz)
              for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                  out[in * n + ClampedLinear(spec, i + dx, j + dy, k + dz)] +=
                      w.K(o, in, RegularizerW::Tap(dx, dy, dz)) * xi[o * n + spec.Linear(i, j, k)];
                }
  return out;
}

std::vector<double> WKernelGradient(const VoxelGridSpec& spec, int num_labels,
                                    std::span<const double> g, std::span<const double> u) {
  const int L = num_labels;
  const std::int64_t n = spec.NumVoxels();
  std::vector<double> grad(static_cast<std::size_t>(3 * L * L * RegularizerW::kTaps), 0.0);
  for (int o = 0; o < 3 * L; ++o)
    for (int in = 0; in < L; ++in)
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            double acc = 0.0;
            for (int k = 0; k < spec.dims[2]; ++k)
              for (int j = 0; j < spec.dims[1]; ++j)
                for (int i = 0; i < spec.dims[0]; ++i) {
                  acc += g[o * n + spec.Linear(i, j, k)] *
                         u[in * n + ClampedLinear(spec, i + dx, j + dy, k + dz)];
                }
            grad[(o * L + in) * RegularizerW::kTaps + RegularizerW::Tap(dx, dy, dz)] = acc;
          }
  return grad;
}

void PdIteration(const SemanticDatacost& datacost, const RegularizerW& w, SolverState* state) {
  const int L = state->num_labels;
  const std::int64_t n = state->spec.NumVoxels();
  const double sigma = w.sigma();
  const double tau = w.tau();
  for (std::int64_t x = 0; x < n; ++x) {
    double sum = 0.0;
    for (int l = 0; l < L; ++l) sum += state->ubar[l * n + x];
    state->nu[x] += sigma * (sum - 1.0);
  }
  const std::vector<double> wu = reference::ApplyW(w, state->spec, state->ubar);
  for (std::int64_t x = 0; x < n; ++x) {
    for (int l = 0; l < L; ++l) {
      double z[3], norm2 = 0.0;
      for (int a = 0; a < 3; ++a) {
        z[a] = state->xi[(3 * l + a) * n + x] + sigma * wu[(3 * l + a) * n + x];
        norm2 += z[a] * z[a];
      }
      const double norm = std::sqrt(norm2);
      for (int a = 0; a < 3; ++a) state->xi[(3 * l + a) * n + x] = norm > 1.0 ? z[a] / norm : z[a];
    }
  }
  const std::vector<double> adj = reference::ApplyWAdjoint(w, state->spec, state->xi);
  for (int l = 0; l < L; ++l) {
    for (std::int64_t x = 0; x < n; ++x) {
      const std::int64_t idx = l * n + x;
      const double u_old = state->u[idx];
      const double u_new =
          std::clamp(u_old - tau * (adj[idx] + state->nu[x] + datacost.cost[idx]), 0.0, 1.0);
      state->u[idx] = u_new;
      state->ubar[idx] = 2.0 * u_new - u_old;
    }
  }
  ++state->iteration;
}

std::vector<double> MlpForwardBatch(const MlpParams& params, const double* features,
                                    std::int64_t count) {
  const int dim = params.InputDim();
  std::vector<double> out(static_cast<std::size_t>(count));
  for (std::int64_t r = 0; r < count; ++r) {
    out[r] = MlpForward(params, std::span<const double>(features + r * dim, dim));
  }
  return out;
}

}  // namespace semfuse::reference
