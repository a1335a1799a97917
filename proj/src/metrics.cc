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
#include "semfuse/metrics.h"

#include <cmath>
#include <limits>

#include "semfuse/errors.h"
#include "semfuse/image.h"

namespace semfuse {
namespace {

void CheckSameSize(std::span<const std::int32_t> pred, std::span<const std::int32_t> gt) {
  Require(pred.size() == gt.size(), "metrics: prediction and ground truth sizes differ");
}

std::optional<double> Ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

// Squared distance transform of a sampled function along one line
// (lower envelope of parabolas).
void Edt1d(const double* f, int n, std::int64_t stride, double* d, std::vector<int>& v,
           std::vector<double>& z, std::vector<double>& line) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (int q = 0; q < n; ++q) line[q] = f[q * stride];
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (line[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[k];
      s = ((line[q] + static_cast<double>(q) * q) - (line[p] + static_cast<double>(p) * p)) /
          (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      v[k] = q;  // only reachable with k == 0
      z[k] = -kInf;
    } else {
      ++k;
      v[k] = q;
      z[k] = s;
    }
    z[k + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) d[q * stride] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double diff = q - v[j];
    d[q * stride] = diff * diff + line[v[j]];
  }
}

// Voxels satisfying `self` with at least one 6-neighbor satisfying `other`.
// The grid border is not a neighbor.
template <typename Self, typename Other>
std::vector<std::uint8_t> NeighborMask(const Index3& dims, Self self, Other other) {
  const VoxelGridSpec spec{Vec3::Zero(), 1.0, dims};
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(spec.NumVoxels()), 0);
  static constexpr int kNeighbors[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                           {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const std::int64_t v = spec.Linear(i, j, k);
        if (!self(v)) continue;
        for (const auto& d : kNeighbors) {
          const int a = i + d[0], b = j + d[1], c = k + d[2];
          if (spec.Contains(a, b, c) && other(spec.Linear(a, b, c))) {
            mask[v] = 1;
            break;
          }
        }
      }
  return mask;
}

}  // namespace

std::optional<double> SemanticAccuracy(std::span<const std::int32_t> pred,
                                       std::span<const std::int32_t> gt) {
  CheckSameSize(pred, gt);
  std::int64_t correct = 0, total = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] <= kFreeLabel) continue;
    ++total;
    correct += pred[i] == gt[i];
  }
  return Ratio(correct, total);
}

std::optional<double> FreeSpaceAccuracy(std::span<const std::int32_t> pred,
                                        std::span<const std::int32_t> gt) {
  CheckSameSize(pred, gt);
  std::int64_t correct = 0, total = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] != kFreeLabel) continue;
    ++total;
    correct += pred[i] == kFreeLabel;
  }
  return Ratio(correct, total);
}

std::optional<double> CompletionTpRate(std::span<const std::int32_t> pred,
                                       std::span<const std::int32_t> gt) {
  CheckSameSize(pred, gt);
  std::int64_t hit = 0, total = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] <= kFreeLabel) continue;
    ++total;
    hit += pred[i] > kFreeLabel;
  }
  return Ratio(hit, total);
}

std::vector<std::uint8_t> SurfaceMask(const Index3& dims, std::span<const std::int32_t> labels) {
  Require(labels.size() == static_cast<std::size_t>(VoxelGridSpec{Vec3::Zero(), 1.0, dims}.NumVoxels()),
          "surface: label count differs from the grid");
  return NeighborMask(
      dims, [&](std::int64_t v) { return labels[v] > kFreeLabel; },
      [&](std::int64_t v) { return labels[v] <= kFreeLabel; });
}

std::vector<std::uint8_t> FreeBoundaryMask(const Index3& dims, std::span<const std::int32_t> labels) {
  Require(labels.size() == static_cast<std::size_t>(VoxelGridSpec{Vec3::Zero(), 1.0, dims}.NumVoxels()),
          "surface: label count differs from the grid");
  return NeighborMask(
      dims, [&](std::int64_t v) { return labels[v] > kFreeLabel; },
      [&](std::int64_t v) { return labels[v] == kFreeLabel; });
}

std::vector<std::uint8_t> ZeroCrossingMask(const TsdfVolume& tsdf) {
  tsdf.Validate();
  return NeighborMask(
      tsdf.spec.dims,
      [&](std::int64_t v) { return tsdf.weights[v] > 0.0 && tsdf.values[v] <= 0.0; },
      [&](std::int64_t v) { return tsdf.weights[v] > 0.0 && tsdf.values[v] > 0.0; });
}

std::optional<double> SurfaceRecall(const Index3& dims, std::span<const std::uint8_t> reference,
                                    std::span<const std::uint8_t> candidate, double tolerance) {
  Require(reference.size() == candidate.size(), "surface recall: mask sizes differ");
  const std::vector<double> dist = DistanceTransform(dims, candidate);
  std::int64_t hit = 0, total = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (!reference[i]) continue;
    ++total;
    hit += dist[i] <= tolerance;
  }
  return Ratio(hit, total);
}

std::vector<double> DistanceTransform(const Index3& dims, std::span<const std::uint8_t> mask) {
  const std::int64_t nx = dims[0], ny = dims[1], nz = dims[2];
  Require(mask.size() == static_cast<std::size_t>(nx * ny * nz),
          "distance transform: mask size differs from the grid");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> f(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) f[i] = mask[i] ? 0.0 : kInf;
  const int longest = static_cast<int>(std::max({nx, ny, nz}));
  const std::int64_t strides[3] = {1, nx, nx * ny};
  for (int axis = 0; axis < 3; ++axis) {
    const int n = dims[axis];
    const int o1 = (axis + 1) % 3, o2 = (axis + 2) % 3;
#pragma omp parallel
    {
      std::vector<int> v(longest);
      std::vector<double> z(longest + 1), line(longest);
#pragma omp for schedule(static)
      for (int b = 0; b < dims[o2]; ++b) {
        for (int a = 0; a < dims[o1]; ++a) {
          double* base = f.data() + a * strides[o1] + b * strides[o2];
          Edt1d(base, n, strides[axis], base, v, z, line);
        }
      }
    }
  }
  for (double& x : f) x = std::sqrt(x);
  return f;
}

std::optional<double> MeanSurfaceDistance(const Index3& dims, std::span<const std::int32_t> pred,
                                          std::span<const std::int32_t> gt) {
  CheckSameSize(pred, gt);
  const std::vector<std::uint8_t> pred_surface = SurfaceMask(dims, pred);
  const std::vector<std::uint8_t> gt_surface = SurfaceMask(dims, gt);
  bool any_gt = false;
  for (std::uint8_t m : gt_surface) any_gt = any_gt || m;
  if (!any_gt) return std::nullopt;
  const std::vector<double> dist = DistanceTransform(dims, gt_surface);
  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < pred_surface.size(); ++i) {
    if (!pred_surface[i]) continue;
    sum += dist[i];
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

MetricsReport Evaluate(std::span<const std::int32_t> pred, const GroundTruthVolume& gt) {
  gt.Validate();
  CheckSameSize(pred, gt.values);
  MetricsReport r;
  r.num_labels = gt.NumLabels();
  for (std::int32_t p : pred) {
    if (p < kUnknownLabel || p >= r.num_labels) {
      throw DataError("metrics: predicted label out of range");
    }
  }
  r.semantic_accuracy = SemanticAccuracy(pred, gt.values);
  r.free_space_accuracy = FreeSpaceAccuracy(pred, gt.values);
  r.completion_tp_rate = CompletionTpRate(pred, gt.values);
  r.mean_surface_distance = MeanSurfaceDistance(gt.spec.dims, pred, gt.values);
  r.confusion.assign(static_cast<std::size_t>(r.num_labels * r.num_labels), 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (gt.values[i] == kUnknownLabel || pred[i] == kUnknownLabel) continue;
    ++r.confusion[gt.values[i] * r.num_labels + pred[i]];
  }
  return r;
}

}  // namespace semfuse
