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

#include "semfuse/errors.h"

namespace semfuse {
namespace {

inline int Clamp(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

double GradientNorm(const GrayImage& image, int x, int y) {
  const int w = image.width();
  const int h = image.height();
  const int x0 = Clamp(x - 1, 0, w - 1);
  const int x1 = Clamp(x + 1, 0, w - 1);
  const int y0 = Clamp(y - 1, 0, h - 1);
  const int y1 = Clamp(y + 1, 0, h - 1);
  const double gx = x1 > x0 ? (image(x1, y) - image(x0, y)) / (x1 - x0) : 0.0;
  const double gy = y1 > y0 ? (image(x, y1) - image(x, y0)) / (y1 - y0) : 0.0;
  return std::sqrt(gx * gx + gy * gy);
}

}  // namespace

std::optional<std::array<double, kDepthPatchValues>> DepthPatch(const DepthMap& depth, int x,
                                                                int y) {
  Require(depth.Inside(x, y), "depth patch: pixel outside image");
  const double center = depth(x, y);
  if (!IsValidDepth(center)) return std::nullopt;
  std::array<double, kDepthPatchValues> patch{};
  int n = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const int u = x + dx;
      const int v = y + dy;
      double value = center;
      if (depth.Inside(u, v) && IsValidDepth(depth(u, v))) value = depth(u, v);
      patch[n++] = value;
    }
  }
  return patch;
}

GradStats GradientStats(const GrayImage& image, int x, int y) {
  Require(image.Inside(x, y), "gradient stats: pixel outside image");
  std::array<double, 9> norms{};
  int n = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      norms[n++] = GradientNorm(image, Clamp(x + dx, 0, image.width() - 1),
                                Clamp(y + dy, 0, image.height() - 1));
    }
  }
  double mean = 0.0;
  for (double g : norms) mean += g;
  mean /= 9.0;
  double var = 0.0;
  for (double g : norms) var += (g - mean) * (g - mean);
  return {mean, std::sqrt(var / 9.0)};
}

Patch5 SamplePatch5(const GrayImage& image, int x, int y) {
  Patch5 patch{};
  int n = 0;
  for (int dy = -2; dy <= 2; ++dy) {
    for (int dx = -2; dx <= 2; ++dx) {
      patch[n++] = image(Clamp(x + dx, 0, image.width() - 1), Clamp(y + dy, 0, image.height() - 1));
    }
  }
  return patch;
}

double Ncc(const Patch5& a, const Patch5& b) {
  double mean_a = 0.0, mean_b = 0.0;
  for (int i = 0; i < 25; ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= 25.0;
  mean_b /= 25.0;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (int i = 0; i < 25; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a < 1e-12 || var_b < 1e-12) return 0.0;
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

FeatureVolume FeatureVolume::Zero(const VoxelGridSpec& spec, int sensor_id, int dim) {
  spec.Validate();
  Require(dim == kMonoFeatureDim || dim == kStereoFeatureDim, "features: unsupported dimension");
  const auto n = static_cast<std::size_t>(spec.NumVoxels());
  FeatureVolume out;
  out.spec = spec;
  out.sensor_id = sensor_id;
  out.dim = dim;
  out.values.assign(n * dim, 0.0);
  out.counts.assign(n, 0);
  return out;
}

void FeatureVolume::Validate() const {
  spec.Validate();
  const auto n = static_cast<std::size_t>(spec.NumVoxels());
  Require(values.size() == n * dim && counts.size() == n, "features: storage size mismatch");
  Require(outlier_flags.empty() || outlier_flags.size() == n, "features: flag size mismatch");
}

ViewFeatureMap ViewFeatureMap::Compute(const SensorView& view, bool stereo) {
  view.intr.Validate();
  const int w = view.intr.width;
  const int h = view.intr.height;
  Require(view.depth.width() == w && view.depth.height() == h, "view: depth size mismatch");
  Require(view.image.width() == w && view.image.height() == h, "view: image size mismatch");
  if (stereo) {
    Require(view.right_image.has_value() && view.baseline > 0.0,
            "view: stereo features need a right image and a positive baseline");
    Require(view.right_image->width() == w && view.right_image->height() == h,
            "view: right image size mismatch");
  }
  if (view.outlier_mask) {
    Require(view.outlier_mask->width() == w && view.outlier_mask->height() == h,
            "view: outlier mask size mismatch");
  }
  ViewFeatureMap map;
  map.dim = stereo ? kStereoFeatureDim : kMonoFeatureDim;
  map.width = w;
  map.height = h;
  const auto pixels = static_cast<std::size_t>(w) * h;
  map.values.assign(pixels * map.dim, 0.0);
  map.valid.assign(pixels, 0);
  if (view.outlier_mask) map.outlier_flags.assign(pixels, 0);

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = x + static_cast<std::size_t>(w) * y;
      const auto patch = DepthPatch(view.depth, x, y);
      if (!patch) continue;
      map.valid[p] = 1;
      double* f = map.values.data() + p * map.dim;
      std::copy(patch->begin(), patch->end(), f);
      const GradStats g = GradientStats(view.image, x, y);
      f[9] = g.mean;
      f[10] = g.std;
      if (stereo) {
        const double disparity = view.intr.fx * view.baseline / view.depth(x, y);
        const int xr = static_cast<int>(std::lround(x - disparity));
        f[11] = Ncc(SamplePatch5(view.image, x, y), SamplePatch5(*view.right_image, xr, y));
      }
      if (view.outlier_mask) {
        const MaskImage& mask = *view.outlier_mask;
        std::uint8_t flags = mask(x, y) ? kOutlierAtCenter : 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (mask.Inside(x + dx, y + dy) && mask(x + dx, y + dy)) flags |= kOutlierInPatch;
          }
        }
        map.outlier_flags[p] = flags;
      }
    }
  }
  return map;
}

FeatureVolume ExtractFeatureVolume(std::span<const SensorView> views, const VoxelGridSpec& spec,
                                   double trunc, bool stereo, int sensor_id) {
  Require(trunc > 0.0, "features: truncation must be positive");
  const int dim = stereo ? kStereoFeatureDim : kMonoFeatureDim;
  FeatureVolume out = FeatureVolume::Zero(spec, sensor_id, dim);
  std::vector<ViewFeatureMap> maps;
  maps.reserve(views.size());
  bool any_mask = false;
  for (const SensorView& view : views) {
    maps.push_back(ViewFeatureMap::Compute(view, stereo));
    any_mask = any_mask || view.outlier_mask.has_value();
  }
  if (any_mask) out.outlier_flags.assign(static_cast<std::size_t>(spec.NumVoxels()), 0);

  const std::int64_t n = spec.NumVoxels();
  const std::size_t num_views = views.size();
  // Only the first dim - 1 slots of a view map are per-view samples; the NCC
  // std is computed from the samples afterwards.
  const int sample_dim = stereo ? kStereoFeatureDim - 1 : kMonoFeatureDim;

#pragma omp parallel
  {
    std::vector<const double*> rows;
    rows.reserve(num_views);
#pragma omp for schedule(static)
    for (std::int64_t x = 0; x < n; ++x) {
      const Index3 idx = spec.Unravel(x);
      const Vec3 center = spec.CenterUnchecked(idx[0], idx[1], idx[2]);
      rows.clear();
      std::uint8_t flags = 0;
      for (std::size_t v = 0; v < num_views; ++v) {
        const auto proj = Project(views[v].intr, views[v].pose, center);
        if (!proj || !InFrustum(views[v].intr, proj->pixel, proj->cam_depth)) continue;
        const auto [u, vv] = RoundPixel(proj->pixel);
        const std::size_t p = u + static_cast<std::size_t>(maps[v].width) * vv;
        if (!maps[v].valid[p]) continue;
        const double d = views[v].depth(u, vv);
        if (std::abs(d - proj->cam_depth) > trunc) continue;
        rows.push_back(maps[v].values.data() + p * maps[v].dim);
        if (!maps[v].outlier_flags.empty()) flags |= maps[v].outlier_flags[p];
      }
      if (rows.empty()) continue;
      // Canonical order makes the floating-point sums independent of view order.
      std::sort(rows.begin(), rows.end(), [sample_dim](const double* a, const double* b) {
        return std::lexicographical_compare(a, a + sample_dim, b, b + sample_dim);
      });
      double* f = out.values.data() + x * dim;
      const double count = static_cast<double>(rows.size());
      for (int c = 0; c < sample_dim; ++c) {
        double sum = 0.0;
        for (const double* row : rows) sum += row[c];
        f[c] = sum / count;
      }
      if (stereo) {
        double var = 0.0;
        if (rows.size() >= 2) {
          for (const double* row : rows) var += (row[11] - f[11]) * (row[11] - f[11]);
          var /= count;
        }
        f[12] = std::sqrt(var);
      }
      out.counts[x] = static_cast<std::int32_t>(rows.size());
      if (any_mask) out.outlier_flags[x] = flags;
    }
  }
  return out;
}

}  // namespace semfuse
