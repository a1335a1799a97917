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
#include "semfuse/simdata.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "semfuse/errors.h"
#include "semfuse/random.h"

namespace semfuse {
namespace {

Vec3 PixelRay(const CameraIntrinsics& intr, const Pose& pose, int x, int y) {
  const Vec3 cam((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0);
  return pose.rotation.transpose() * cam;
}

std::optional<double> IntersectBox(const Box& box, const Vec3& origin, const Vec3& dir) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] <= box.min[a] || origin[a] >= box.max[a]) return std::nullopt;
      continue;
    }
    double t1 = (box.min[a] - origin[a]) / dir[a];
    double t2 = (box.max[a] - origin[a]) / dir[a];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
  }
  if (t_near > t_far || t_near <= 1e-9) return std::nullopt;
  return t_near;
}

template <typename T, typename F>
Image<T> RenderPixels(const Scene& scene, const CameraIntrinsics& intr, const Pose& pose,
                      T miss, F&& shade) {
  intr.Validate();
  Image<T> out(intr.width, intr.height, miss);
  const Vec3 origin = pose.CameraCenter();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      const auto hit = IntersectScene(scene, origin, PixelRay(intr, pose, x, y));
      if (hit) out(x, y) = shade(*hit);
    }
  }
  return out;
}

int UniformInt(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

double StripeTexture::At(const Vec3& p) const {
  const double v = base + contrast * std::sin(2.0 * std::numbers::pi * frequency * p.sum());
  return std::clamp(v, 0.0, 1.0);
}

void Scene::Validate() const {
  Require(labels.size() >= 2, "scene: need free plus at least one label");
  Require(textures.size() == labels.size(), "scene: one texture per label");
  Require((room_max.array() > room_min.array()).all(), "scene: empty room");
  for (const Box& box : boxes) {
    Require(box.label >= 1 && box.label < static_cast<int>(labels.size()),
            "scene: box label out of range");
    Require((box.max.array() > box.min.array()).all(), "scene: empty box");
    Require((box.min.array() >= room_min.array() - 1e-9).all() &&
                (box.max.array() <= room_max.array() + 1e-9).all(),
            "scene: box outside the room");
  }
}

Scene MakeRoomScene(std::uint64_t seed, const RoomOptions& options) {
  Require(options.snap > 0.0 && options.shell_thickness > 0.0, "room: invalid options");
  Require(options.min_boxes >= 0 && options.max_boxes >= options.min_boxes,
          "room: invalid box count range");
  std::mt19937_64 rng(DeriveSeed(seed, 0));
  const double s = options.snap;
  const auto cells = [&](double meters) { return static_cast<int>(std::lround(meters / s)); };
  const int nx = cells(options.size.x());
  const int ny = cells(options.size.y());
  const int nz = cells(options.size.z());
  const int th = cells(options.shell_thickness);
  Require(nx > 2 * th + 8 && ny > 2 * th + 8 && nz > 2 * th + 12, "room: too small");

  Scene scene;
  scene.room_max = options.size;
  const auto add = [&](int label, int x0, int y0, int z0, int x1, int y1, int z1) {
    scene.boxes.push_back({label, Vec3(x0, y0, z0) * s, Vec3(x1, y1, z1) * s});
  };
  add(1, 0, 0, 0, nx, ny, th);                    // floor
  add(3, 0, 0, nz - th, nx, ny, nz);              // ceiling
  add(2, 0, 0, th, th, ny, nz - th);              // walls
  add(2, nx - th, 0, th, nx, ny, nz - th);
  add(2, th, 0, th, nx - th, th, nz - th);
  add(2, th, ny - th, th, nx - th, ny, nz - th);

  // Footprints already taken, in cells, with a one-cell gap between objects.
  std::vector<std::array<int, 4>> taken;
  const auto overlaps = [&](int x0, int y0, int x1, int y1) {
    for (const auto& r : taken) {
      if (x0 < r[2] + 1 && r[0] < x1 + 1 && y0 < r[3] + 1 && r[1] < y1 + 1) return true;
    }
    return false;
  };
  const int lo_x = th + 2, lo_y = th + 2, hi_x = nx - th - 2, hi_y = ny - th - 2;
  if (options.table) {
    const int w = UniformInt(rng, 10, 16), d = UniformInt(rng, 6, 10);
    const int x0 = UniformInt(rng, lo_x, hi_x - w), y0 = UniformInt(rng, lo_y, hi_y - d);
    const int top = th + 6;
    add(4, x0, y0, top - 1, x0 + w, y0 + d, top);
    for (int cx : {x0, x0 + w - 1}) {
      for (int cy : {y0, y0 + d - 1}) add(4, cx, cy, th, cx + 1, cy + 1, top - 1);
    }
    taken.push_back({x0, y0, x0 + w, y0 + d});
  }
  const int count = UniformInt(rng, options.min_boxes, options.max_boxes);
  for (int b = 0, attempts = 0; b < count && attempts < 1000; ++attempts) {
    const int w = UniformInt(rng, 3, 8), d = UniformInt(rng, 3, 8), h = UniformInt(rng, 3, 9);
    const int x0 = UniformInt(rng, lo_x, hi_x - w), y0 = UniformInt(rng, lo_y, hi_y - d);
    if (overlaps(x0, y0, x0 + w, y0 + d)) continue;
    add(5, x0, y0, th, x0 + w, y0 + d, th + h);
    taken.push_back({x0, y0, x0 + w, y0 + d});
    ++b;
  }

  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  scene.textures = {StripeTexture{},
                    {0.45 + jitter(rng), 0.25, 3.0},
                    {0.70 + jitter(rng), 0.02, 1.0},
                    {0.80 + jitter(rng), 0.0, 0.0},
                    {0.35 + jitter(rng), 0.30, 5.0},
                    {0.55 + jitter(rng), 0.30, 4.0}};
  scene.Validate();
  return scene;
}

std::optional<RayHit> IntersectScene(const Scene& scene, const Vec3& origin, const Vec3& dir) {
  std::optional<RayHit> best;
  for (std::size_t b = 0; b < scene.boxes.size(); ++b) {
    const auto t = IntersectBox(scene.boxes[b], origin, dir);
    if (t && (!best || *t < best->t)) best = RayHit{*t, static_cast<int>(b), origin + *t * dir};
  }
  return best;
}

DepthMap RenderDepth(const Scene& scene, const CameraIntrinsics& intr, const Pose& pose) {
  // The ray direction has unit camera z, so the hit parameter is the z-depth.
  return RenderPixels<double>(scene, intr, pose, kInvalidDepth,
                              [](const RayHit& hit) { return hit.t; });
}

LabelImage RenderSemantics(const Scene& scene, const CameraIntrinsics& intr, const Pose& pose) {
  return RenderPixels<std::int32_t>(scene, intr, pose, kUnknownLabel, [&](const RayHit& hit) {
    return static_cast<std::int32_t>(scene.boxes[hit.box].label);
  });
}

GrayImage RenderImage(const Scene& scene, const CameraIntrinsics& intr, const Pose& pose) {
  return RenderPixels<double>(scene, intr, pose, 0.0, [&](const RayHit& hit) {
    return scene.textures[scene.boxes[hit.box].label].At(hit.point);
  });
}

Pose RightCameraPose(const Pose& left, double baseline) {
  Pose right = left;
  right.translation.x() -= baseline;
  return right;
}

void SensorModel::Validate() const {
  for (const NoiseComponent& c : components) {
    if (const auto* g = std::get_if<GaussianNoise>(&c)) {
      Require(g->a >= 0.0 && g->b >= 0.0, "sensor: gaussian parameters must be nonnegative");
    } else if (const auto* o = std::get_if<OutlierNoise>(&c)) {
      Require(o->p >= 0.0 && o->p <= 1.0, "sensor: outlier probability outside [0,1]");
      Require(o->sigma >= 0.0, "sensor: outlier sigma must be nonnegative");
    } else {
      Require(std::get<LowTextureDropout>(c).g_min >= 0.0, "sensor: g_min must be nonnegative");
    }
  }
  Require(!stereo || baseline > 0.0, "sensor: stereo needs a positive baseline");
}

CorruptedDepth Corrupt(const DepthMap& depth, const GrayImage& image, const SensorModel& model,
                       std::mt19937_64& rng) {
  model.Validate();
  CorruptedDepth out{depth, MaskImage(depth.width(), depth.height(), 0)};
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const int w = depth.width(), h = depth.height();
  for (const NoiseComponent& c : model.components) {
    if (const auto* g = std::get_if<GaussianNoise>(&c)) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double& d = out.depth(x, y);
          if (!IsValidDepth(d)) continue;
          d += normal(rng) * (g->a + g->b * d * d);
          if (d <= 0.0) d = kInvalidDepth;
        }
      }
    } else if (const auto* o = std::get_if<OutlierNoise>(&c)) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double& d = out.depth(x, y);
          if (!IsValidDepth(d) || uniform(rng) >= o->p) continue;
          out.outliers(x, y) = 1;
          const double noise = o->sigma * normal(rng);
          d = o->mode == OutlierMode::kOffset ? d + noise : noise;
          if (d <= 0.0) d = kInvalidDepth;
        }
      }
    } else {
      const double g_min = std::get<LowTextureDropout>(c).g_min;
      Require(image.width() == w && image.height() == h, "corrupt: image size mismatch");
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (IsValidDepth(out.depth(x, y)) && GradientStats(image, x, y).mean < g_min) {
            out.depth(x, y) = kInvalidDepth;
          }
        }
      }
    }
  }
  return out;
}

std::vector<Pose> GenerateTrajectory(const Scene& scene, const TrajectoryOptions& options,
                                     std::uint64_t seed) {
  Require(options.views >= 1, "trajectory: need at least one view");
  std::mt19937_64 rng(DeriveSeed(seed, 0));
  const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  const Vec3 center = 0.5 * (scene.room_min + scene.room_max);
  const Vec3 extent = scene.room_max - scene.room_min;
  const double radius = options.radius_fraction * std::min(extent.x(), extent.y());
  const double reach = 0.5 * std::min(extent.x(), extent.y());
  std::vector<Pose> poses;
  poses.reserve(options.views);
  for (int i = 0; i < options.views; ++i) {
    const double angle = phase + 2.0 * std::numbers::pi * i / options.views;
    const Vec3 dir(std::cos(angle), std::sin(angle), 0.0);
    Vec3 eye = center + radius * dir;
    eye.z() = scene.room_min.z() + options.height;
    Vec3 target = center - reach * dir;
    target.z() = scene.room_min.z() + (i % 2 == 0 ? options.pitch_low : options.pitch_high);
    poses.push_back(Pose::LookAt(eye, target, Vec3(0, 0, 1)));
  }
  return poses;
}

GroundTruthVolume RasterizeGroundTruth(const Scene& scene, const VoxelGridSpec& spec) {
  scene.Validate();
  GroundTruthVolume gt = GroundTruthVolume::Unknown(spec, scene.labels);
  const std::int64_t n = spec.NumVoxels();
#pragma omp parallel for schedule(static)
  for (std::int64_t v = 0; v < n; ++v) {
    const Index3 i = spec.Unravel(v);
    const Vec3 p = spec.CenterUnchecked(i[0], i[1], i[2]);
    if (!((p.array() > scene.room_min.array()).all() && (p.array() < scene.room_max.array()).all())) {
      continue;
    }
    std::int32_t label = kFreeLabel;
    for (const Box& box : scene.boxes) {
      if (box.Contains(p)) label = box.label;
    }
    gt.values[v] = label;
  }
  return gt;
}

void MarkUnobserved(std::span<const DepthMap> depths, const CameraIntrinsics& intr,
                    std::span<const Pose> poses, double trunc, GroundTruthVolume* gt) {
  Require(depths.size() == poses.size(), "mark unobserved: one pose per depth map");
  const VoxelGridSpec& spec = gt->spec;
  const std::int64_t n = spec.NumVoxels();
#pragma omp parallel for schedule(static)
  for (std::int64_t v = 0; v < n; ++v) {
    if (gt->values[v] == kUnknownLabel) continue;
    const Index3 i = spec.Unravel(v);
    const Vec3 p = spec.CenterUnchecked(i[0], i[1], i[2]);
    bool observed = false;
    for (std::size_t k = 0; k < poses.size() && !observed; ++k) {
      const auto proj = Project(intr, poses[k], p);
      if (!proj || !InFrustum(intr, proj->pixel, proj->cam_depth)) continue;
      const auto [x, y] = RoundPixel(proj->pixel);
      const double d = depths[k](x, y);
      observed = IsValidDepth(d) && proj->cam_depth <= d + trunc;
    }
    if (!observed) gt->values[v] = kUnknownLabel;
  }
}

VoxelGridSpec RoomGrid(const Scene& scene, double voxel_size) {
  Require(voxel_size > 0.0, "room grid: voxel size must be positive");
  const Vec3 extent = scene.room_max - scene.room_min;
  VoxelGridSpec spec;
  spec.origin = scene.room_min;
  spec.voxel_size = voxel_size;
  for (int a = 0; a < 3; ++a) {
    spec.dims[a] = static_cast<int>(std::ceil(extent[a] / voxel_size - 1e-9));
  }
  spec.Validate();
  return spec;
}

SimulatedScene Simulate(const Scene& scene, const SimulationConfig& config) {
  scene.Validate();
  Require(!config.sensors.empty(), "simulate: no sensors configured");
  for (const SensorModel& m : config.sensors) m.Validate();
  SimulatedScene out;
  out.scene = scene;
  out.spec = RoomGrid(scene, config.voxel_size);
  const std::vector<Pose> poses =
      GenerateTrajectory(scene, config.trajectory, DeriveSeed(config.seed, 1));

  std::vector<DepthMap> clean_depth;
  std::vector<LabelImage> semantics;
  std::vector<GrayImage> images;
  for (const Pose& pose : poses) {
    clean_depth.push_back(RenderDepth(scene, config.intr, pose));
    semantics.push_back(RenderSemantics(scene, config.intr, pose));
    images.push_back(RenderImage(scene, config.intr, pose));
  }
  out.gt = RasterizeGroundTruth(scene, out.spec);
  MarkUnobserved(clean_depth, config.intr, poses, config.truncation, &out.gt);

  for (std::size_t s = 0; s < config.sensors.size(); ++s) {
    const SensorModel& model = config.sensors[s];
    SensorCapture capture;
    capture.model = model;
    const std::uint64_t sensor_seed = DeriveSeed(config.seed, 2 + s);
    for (std::size_t v = 0; v < poses.size(); ++v) {
      std::mt19937_64 rng(DeriveSeed(sensor_seed, v));
      CorruptedDepth corrupted = Corrupt(clean_depth[v], images[v], model, rng);
      SensorView view;
      view.intr = config.intr;
      view.pose = poses[v];
      view.depth = std::move(corrupted.depth);
      view.image = images[v];
      if (model.stereo) {
        view.right_image = RenderImage(scene, config.intr, RightCameraPose(poses[v], model.baseline));
        view.baseline = model.baseline;
      }
      view.outlier_mask = std::move(corrupted.outliers);
      capture.views.push_back(std::move(view));
      capture.semantics.push_back(semantics[v]);
    }
    out.sensors.push_back(std::move(capture));
  }
  return out;
}

std::vector<SensorModel> DefaultSensors() {
  SensorModel kinect;
  kinect.name = "kinect";
  kinect.components = {GaussianNoise{0.002, 0.002}};
  SensorModel noisy = kinect;
  noisy.name = "kinect_outliers";
  noisy.components.push_back(OutlierNoise{0.01, 2.0, OutlierMode::kOffset});
  return {kinect, noisy};
}

}  // namespace semfuse
