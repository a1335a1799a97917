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
// Acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semfuse/io.h"
#include "semfuse/metrics.h"
#include "semfuse/pipeline.h"
#include "semfuse/random.h"
#include "test_util.h"

namespace fs = std::filesystem;

namespace semfuse {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* format, ...) {
  char buf[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<std::string> Labels(int n) {
  std::vector<std::string> labels = {"free"};
  for (int i = 1; i < n; ++i) labels.push_back("l" + std::to_string(i));
  return labels;
}

// ---- 1: fusion identities ----

Outcome FusionIdentities() {
  std::mt19937_64 rng(101);
  const VoxelGridSpec spec{Vec3::Zero(), 0.05, {64, 64, 64}};
  const int sensors = 3;
  std::uniform_real_distribution<double> value(-1.0, 1.0), conf(0.05, 4.0), coin(0.0, 1.0);
  std::vector<TsdfVolume> vols;
  std::vector<ConfidenceVolume> ones, confs, scaled;
  const double alpha = 7.3;
  for (int s = 0; s < sensors; ++s) {
    TsdfVolume v = TsdfVolume::Empty(spec, 0.15);
    ConfidenceVolume c = ConfidenceVolume::Constant(spec, 0.0);
    for (std::size_t i = 0; i < v.values.size(); ++i) {
      if (coin(rng) < 0.6) {
        v.values[i] = value(rng);
        v.weights[i] = 1.0 + std::floor(coin(rng) * 5);
      }
      c.conf[i] = conf(rng);
    }
    vols.push_back(std::move(v));
    ones.push_back(ConfidenceVolume::Constant(spec, 1.0));
    ConfidenceVolume cs = c;
    for (double& x : cs.conf) x *= alpha;
    confs.push_back(std::move(c));
    scaled.push_back(std::move(cs));
  }
  const auto t0 = Clock::now();
  const TsdfVolume unit = FuseWeighted(vols, ones);
  const double runtime = Seconds(t0);
  std::int64_t mismatches = 0;
  for (std::size_t i = 0; i < unit.values.size(); ++i) {
    double sum = 0.0, count = 0.0;
    for (const TsdfVolume& v : vols) {
      if (v.weights[i] > 0.0) {
        sum += v.values[i];
        count += 1.0;
      }
    }
    mismatches += unit.values[i] != (count > 0 ? sum / count : 0.0);
  }
  const TsdfVolume a = FuseWeighted(vols, confs);
  const TsdfVolume b = FuseWeighted(vols, scaled);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  }
  return {mismatches == 0 && worst <= 1e-12 && runtime < 1.0,
          Fmt("masked-mean mismatches %lld, rescale max diff %.3g, 64^3 x %d runtime %.3fs",
              static_cast<long long>(mismatches), worst, sensors, runtime)};
}

// ---- 2: gradient suite ----

double MlpGradientError(std::mt19937_64& rng) {
  double worst = 0.0;
  const std::vector<std::vector<int>> shapes = {
      {kMonoFeatureDim, 100, 50, 20, 10, 1}, {kStereoFeatureDim, 16, 8, 1}, {3, 5, 1}};
  for (const auto& widths : shapes) {
    for (int trial = 0; trial < 3; ++trial) {
      MlpParams p = InitMlpParams(rng(), widths);
      std::vector<double> flat;
      p.Flatten(&flat);
      const double scale = 1.0 / std::sqrt(static_cast<double>(widths[1]));
      flat = testing::RandomVector(rng, flat.size(), -scale, scale);
      p.Unflatten(flat);
      p.layers.back().bias.setConstant(1.0);
      flat.clear();
      p.Flatten(&flat);
      const auto x = testing::RandomVector(rng, widths[0], 0.0, 2.0);
      if (MlpForward(p, x) <= 0.0) continue;
      std::vector<double> analytic;
      MlpBackward(p, x, 1.0).Flatten(&analytic);
      // Checking every entry of the big network is slow; sample it.
      std::vector<std::size_t> idx(flat.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(std::min<std::size_t>(idx.size(), 400));
      const double h = 1e-5;
      MlpParams q = p;
      for (std::size_t i : idx) {
        std::vector<double> probe = flat;
        probe[i] = flat[i] + h;
        q.Unflatten(probe);
        const double plus = MlpForward(q, x);
        probe[i] = flat[i] - h;
        q.Unflatten(probe);
        const double minus = MlpForward(q, x);
        worst = std::max(worst, testing::RelativeError(analytic[i], (plus - minus) / (2 * h)));
      }
    }
  }
  return worst;
}

double WGradientError(std::mt19937_64& rng) {
  const VoxelGridSpec spec{Vec3::Zero(), 0.1, {4, 3, 5}};
  const int L = 3;
  const std::int64_t n = spec.NumVoxels();
  RegularizerW w = RegularizerW::Zero(L);
  w.kernel = testing::RandomVector(rng, w.kernel.size());
  const auto u = testing::RandomVector(rng, L * n);
  const auto g = testing::RandomVector(rng, 3 * L * n);
  auto f = [&](const RegularizerW& ww, const std::vector<double>& uu) {
    return testing::Dot(g, ApplyW(ww, spec, uu));
  };
  const double h = 1e-6;
  double worst = 0.0;
  const auto grad_u = ApplyWAdjoint(w, spec, g);
  for (std::int64_t i = 0; i < L * n; ++i) {
    auto up = u, down = u;
    up[i] += h;
    down[i] -= h;
    worst = std::max(worst, testing::RelativeError(grad_u[i], (f(w, up) - f(w, down)) / (2 * h)));
  }
  const auto grad_k = WKernelGradient(spec, L, g, u);
  for (std::size_t i = 0; i < w.kernel.size(); ++i) {
    RegularizerW up = w, down = w;
    up.kernel[i] += h;
    down.kernel[i] -= h;
    worst = std::max(worst, testing::RelativeError(grad_k[i], (f(up, u) - f(down, u)) / (2 * h)));
  }
  return worst;
}

double UnrolledLoss(const VoxelGridSpec& spec, std::span<const double> dc, const RegularizerW& w,
                    const std::vector<double>& g, int k) {
  UnrolledSolver solver(spec, w.num_labels);
  return testing::Dot(solver.Forward(dc, w, k), g);
}

double SolverGradientError(std::mt19937_64& rng) {
  const VoxelGridSpec spec{Vec3::Zero(), 0.1, {3, 3, 3}};
  const int L = 2, K = 5;
  const auto dc = testing::RandomVector(rng, L * spec.NumVoxels(), -2.0, 2.0);
  RegularizerW w = RegularizerW::Zero(L, 0.3, 0.25);
  w.kernel = testing::RandomVector(rng, w.kernel.size());
  const auto g = testing::RandomVector(rng, L * spec.NumVoxels());
  UnrolledSolver solver(spec, L);
  solver.Forward(dc, w, K);
  const SolverGradients grads = solver.Backward(g);
  const double h = 1e-5;
  double worst = 0.0;
  auto loss = [&](std::span<const double> d, const RegularizerW& ww) {
    return UnrolledLoss(spec, d, ww, g, K);
  };
  for (std::size_t i = 0; i < dc.size(); ++i) {
    auto up = dc, down = dc;
    up[i] += h;
    down[i] -= h;
    const double numeric = (loss(up, w) - loss(down, w)) / (2 * h);
    worst = std::max(worst, testing::RelativeError(grads.datacost[i], numeric));
  }
  // Kernel entries, then log sigma and log tau.
  std::vector<double> flat, analytic = grads.kernel;
  w.Flatten(&flat);
  analytic.push_back(grads.log_sigma);
  analytic.push_back(grads.log_tau);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    RegularizerW up = w, down = w;
    auto probe = flat;
    probe[i] += h;
    up.Unflatten(probe);
    probe[i] -= 2 * h;
    down.Unflatten(probe);
    const double numeric = (loss(dc, up) - loss(dc, down)) / (2 * h);
    worst = std::max(worst, testing::RelativeError(analytic[i], numeric));
  }
  return worst;
}

TrainingScene RandomScene(std::mt19937_64& rng, const Index3& dims, int labels, int sensors,
                          double cost_lo, double cost_hi) {
  const VoxelGridSpec spec{Vec3::Zero(), 0.1, dims};
  TrainingScene scene;
  scene.gt = GroundTruthVolume::Unknown(spec, Labels(labels));
  for (auto& v : scene.gt.values) v = std::uniform_int_distribution<int>(-1, labels - 1)(rng);
  for (int s = 0; s < sensors; ++s) {
    SensorInputs in;
    in.features = FeatureVolume::Zero(spec, s, s == 0 ? kMonoFeatureDim : kStereoFeatureDim);
    in.features.values = testing::RandomVector(rng, in.features.values.size(), 0.0, 1.0);
    in.datacost = SemanticDatacost::Zero(spec, Labels(labels));
    in.datacost.cost = testing::RandomVector(rng, in.datacost.cost.size(), cost_lo, cost_hi);
    scene.sensors.push_back(std::move(in));
  }
  return scene;
}

double FullChainGradientError(std::mt19937_64& rng) {
  TrainingConfig config;
  config.hidden_widths = {8, 4, 1};
  config.solver.iterations = 5;
  config.crop = 4;
  const TrainingScene scene = RandomScene(rng, {4, 4, 4}, 3, 2, -0.3, 0.3);
  CropTransform t;
  t.size = 4;
  const CropSample crop = ExtractCrop(scene, t);
  Model model = InitModel(scene, config);
  for (MlpParams& p : model.mlps) {
    std::vector<double> flat;
    p.Flatten(&flat);
    p.Unflatten(testing::RandomVector(rng, flat.size(), -0.3, 0.3));
    p.layers.back().bias.setConstant(1.0);
  }
  model.w.kernel = testing::RandomVector(rng, model.w.kernel.size(), -0.3, 0.3);
  model.w.log_sigma = std::log(0.15);
  model.w.log_tau = std::log(0.12);
  const CropResult r = CropLossAndGradient(model, crop, config);
  const std::vector<double> params = FlattenTrainable(model, config);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::vector<double> up = params, down = params;
    up[i] += h;
    down[i] -= h;
    Model mu = model, md = model;
    UnflattenTrainable(up, config, &mu);
    UnflattenTrainable(down, config, &md);
    const double numeric = (CropLossAndGradient(mu, crop, config).loss.total -
                            CropLossAndGradient(md, crop, config).loss.total) /
                           (2 * h);
    worst = std::max(worst, testing::RelativeError(r.gradient[i], numeric));
  }
  return worst;
}

Outcome GradientSuite() {
  std::mt19937_64 rng(202);
  const auto t0 = Clock::now();
  const double mlp = MlpGradientError(rng);
  const double w = WGradientError(rng);
  const double solver = SolverGradientError(rng);
  const double chain = FullChainGradientError(rng);
  const double runtime = Seconds(t0);
  return {mlp < 1e-4 && w < 1e-3 && solver < 1e-3 && chain < 1e-3 && runtime < 300.0,
          Fmt("max rel err: mlp %.2e, W conv %.2e, unrolled solver %.2e, full chain %.2e; "
              "%.1fs",
              mlp, w, solver, chain, runtime)};
}

// ---- 3: feasibility and projections ----

Outcome Feasibility() {
  std::mt19937_64 rng(303);
  double worst_sum = 0.0, worst_dual = 0.0;
  bool in_box = true;
  int over = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int L = 2 + trial % 5;
    const VoxelGridSpec spec{Vec3::Zero(), 0.1, {4, 4, 4}};
    const std::int64_t n = spec.NumVoxels();
    SemanticDatacost dc = SemanticDatacost::Zero(spec, Labels(L));
    dc.cost = testing::RandomVector(rng, dc.cost.size());
    RegularizerW w = RegularizerW::ForwardDifference(L, 0.2, 0.1, 0.1);
    SolverState state = SolverState::Initial(spec, L);
    for (int it = 0; it < 200; ++it) PdIteration(dc, w, &state);
    double trial_sum = 0.0;
    for (std::int64_t v = 0; v < n; ++v) {
      double sum = 0.0;
      for (int l = 0; l < L; ++l) {
        const double u = state.u[l * n + v];
        in_box = in_box && u >= 0.0 && u <= 1.0;
        sum += u;
      }
      trial_sum = std::max(trial_sum, std::abs(sum - 1.0));
      for (int l = 0; l < L; ++l) {
        double norm2 = 0.0;
        for (int a = 0; a < 3; ++a) norm2 += std::pow(state.xi[(3 * l + a) * n + v], 2);
        worst_dual = std::max(worst_dual, std::sqrt(norm2) - 1.0);
      }
    }
    over += trial_sum > 1e-2;
    worst_sum = std::max(worst_sum, trial_sum);
  }
  return {worst_sum <= 1e-2 && in_box && worst_dual <= 1e-12,
          Fmt("200 iterations, sigma = tau = 0.1: max |sum u - 1| = %.4f (%d/100 instances "
              "above 1e-2), u in [0,1]: %s, max dual norm excess %.2e",
              worst_sum, over, in_box ? "yes" : "no", std::max(worst_dual, 0.0))};
}

// ---- 4: exhaustive oracle ----

Outcome ExhaustiveOracle() {
  std::mt19937_64 rng(404);
  const VoxelGridSpec spec{Vec3::Zero(), 0.1, {2, 2, 2}};
  const RegularizerW w = RegularizerW::ForwardDifference(2, 0.2);
  int matches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SemanticDatacost dc = SemanticDatacost::Zero(spec, Labels(2));
    dc.cost = testing::RandomVector(rng, dc.cost.size());
    double best = std::numeric_limits<double>::infinity();
    int best_mask = 0;
    for (int mask = 0; mask < 256; ++mask) {
      LabelVolume u{spec, dc.labels, std::vector<double>(16, 0.0)};
      for (int v = 0; v < 8; ++v) u.u[((mask >> v) & 1) * 8 + v] = 1.0;
      const double e = Energy(u, dc, w);
      if (e < best) {
        best = e;
        best_mask = mask;
      }
    }
    const LabelVolume u = Solve(dc, w, SolverConfig{500, 1, 1e-2});
    int mask = 0;
    for (int v = 0; v < 8; ++v) mask |= (u.at(1, v) > 0.5 ? 1 : 0) << v;
    matches += mask == best_mask;
  }
  return {matches >= 90, Fmt("%d/100 thresholded solutions match the 256-assignment optimum",
                             matches)};
}

// ---- 5: desk-scale learned fusion ----

struct Criterion5Options {
  int epochs = 100;
  double learning_rate = 3e-4;
  int seeds = 3;
};

struct HeldOut {
  double sa = 0.0;
  double fa = 0.0;
  double conf_outlier = 0.0;
  double conf_clean = 0.0;
};

HeldOut EvaluateHeldOut(const Model& model, std::span<const TrainingScene> test,
                        const SolverConfig& solver) {
  HeldOut h;
  double co = 0.0, cc = 0.0;
  std::int64_t no = 0, nc = 0;
  for (const TrainingScene& t : test) {
    const MetricsReport r = Evaluate(ExtractLabels(Reconstruct(model, t.sensors, solver)), t.gt);
    h.sa += *r.semantic_accuracy / test.size();
    h.fa += *r.free_space_accuracy / test.size();
    const auto confs = PredictConfidences(model, t.sensors);
    const FeatureVolume& f = t.sensors[1].features;
    for (std::size_t x = 0; x < f.counts.size(); ++x) {
      if (!f.counts[x]) continue;
      if (f.outlier_flags[x] & kOutlierInPatch) {
        co += confs[1].conf[x];
        ++no;
      } else {
        cc += confs[1].conf[x];
        ++nc;
      }
    }
  }
  h.conf_outlier = no ? co / no : 0.0;
  h.conf_clean = nc ? cc / nc : 0.0;
  return h;
}

Outcome DeskScale(const Criterion5Options& opt) {
  const auto t0 = Clock::now();
  int passed = 0;
  std::ostringstream detail;
  for (int seed = 1; seed <= opt.seeds; ++seed) {
    std::vector<TrainingScene> train, test;
    for (int s = 0; s < 6; ++s) {
      SimulationConfig cfg;
      cfg.seed = DeriveSeed(seed, s);
      cfg.sensors = DefaultSensors();
      const SimulatedScene sim = Simulate(MakeRoomScene(DeriveSeed(seed, 100 + s)), cfg);
      (s < 4 ? train : test).push_back(BuildTrainingScene(sim, cfg.truncation));
    }
    HeldOut result[2];
    for (int learn = 0; learn < 2; ++learn) {
      TrainingConfig tc;
      tc.learning_rate = opt.learning_rate;
      tc.solver.iterations = 10;
      tc.epochs = opt.epochs;
      tc.seed = seed;
      tc.learn_confidence = learn == 1;
      Trainer trainer(tc, InitModel(train.front(), tc));
      for (int e = 0; e < opt.epochs; ++e) trainer.RunEpoch(train);
      result[learn] = EvaluateHeldOut(trainer.model, test, tc.solver);
    }
    const double gain = result[1].sa - result[0].sa;
    const double ratio = result[1].conf_outlier / result[1].conf_clean;
    const bool ok = gain >= 0.02 && ratio <= 0.7;
    passed += ok;
    detail << Fmt("[seed %d: SA frozen %.4f learned %.4f gain %+.4f, outlier/clean conf %.3f] ",
                  seed, result[0].sa, result[1].sa, gain, ratio);
  }
  detail << Fmt("%d/%d seeds pass, %d epochs at lr %.0e, %.0fs", passed, opt.seeds, opt.epochs,
                opt.learning_rate, Seconds(t0));
  return {2 * passed > opt.seeds, detail.str()};
}

// ---- 6: TSDF fidelity ----

Outcome TsdfFidelity() {
  const auto t0 = Clock::now();
  SimulationConfig config;
  config.seed = 6;
  config.sensors = {SensorModel{}};
  const SimulatedScene sim = Simulate(MakeRoomScene(6), config);
  const TsdfVolume tsdf = FuseSensor(sim.sensors[0], sim.spec, config.truncation);
  const auto recall = SurfaceRecall(sim.spec.dims, FreeBoundaryMask(sim.spec.dims, sim.gt.values),
                                    ZeroCrossingMask(tsdf), 1.0);
  const double runtime = Seconds(t0);
  return {recall && *recall >= 0.99 && runtime < 30.0,
          Fmt("perfect sensor: %.4f of observed surface voxels within 1 voxel, %.1fs",
              recall.value_or(0.0), runtime)};
}

// ---- 7: CLI determinism ----

int RunCommand(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return status;
}

std::map<std::string, std::string> Snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = ReadFile(e.path());
  }
  return files;
}

Outcome CliDeterminism(const std::string& cli, const fs::path& work) {
  if (cli.empty()) return {false, "no CLI path given (--cli)"};
  fs::remove_all(work);
  fs::create_directories(work);
  WriteFile(work / "scene.json", R"({"seed": 3, "room": {"seed": 5}})");
  std::map<std::string, std::string> runs[2];
  for (int r = 0; r < 2; ++r) {
    const fs::path d = work / ("run" + std::to_string(r));
    fs::create_directories(d);
    WriteFile(d / "train.json",
              R"({"learning_rate": 0.001, "solver": {"iterations": 10}, "scenes": ["fused"]})");
    const std::string q = "\"" + cli + "\" ";
    const std::string p = "\"" + d.string() + "\"";
    const std::vector<std::string> steps = {
        q + "simulate --scene \"" + (work / "scene.json").string() + "\" --seed 11 --out " + p + "/sim",
        q + "fuse --scene " + p + "/sim --seed 11 --out " + p + "/fused",
        q + "train --config " + p + "/train.json --epochs 2 --seed 11 --out " + p + "/train",
        q + "reconstruct --scene " + p + "/fused --checkpoint " + p +
            "/train/checkpoint.sfck --iterations 20 --seed 11 --out " + p + "/rec",
        q + "eval --pred " + p + "/rec/labels.sfvx --scene " + p + "/fused --seed 11 --out " + p +
            "/rec/metrics.json"};
    for (const std::string& step : steps) {
      if (RunCommand(step) != 0) return {false, "command failed: " + step};
    }
    runs[r] = Snapshot(d);
  }
  int differing = 0;
  std::string first;
  for (const auto& [name, bytes] : runs[0]) {
    auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != bytes) {
      if (!differing++) first = name;
    }
  }
  const bool same_set = runs[0].size() == runs[1].size();
  fs::remove_all(work);
  std::string detail = Fmt("simulate, fuse, train --epochs 2, reconstruct, eval: %zu artifacts, "
                           "%d differ",
                           runs[0].size(), differing);
  if (differing) detail += " (first: " + first + ")";
  return {differing == 0 && same_set, detail};
}

// ---- 8: outlier frequency ----

Outcome OutlierFrequency() {
  const DepthMap depth(1000, 1000, 2.5);
  const GrayImage image(1000, 1000, 0.5);
  SensorModel model;
  model.components = {OutlierNoise{0.01, 2.0, OutlierMode::kOffset}};
  std::mt19937_64 rng(808);
  const CorruptedDepth out = Corrupt(depth, image, model, rng);
  double count = 0.0;
  for (std::uint8_t m : out.outliers.data()) count += m;
  const double n = 1e6, p = 0.01;
  const double z = (count - n * p) / std::sqrt(n * p * (1 - p));
  return {std::abs(z) <= 3.0,
          Fmt("%.0f outliers in 1e6 samples (expected %.0f), z = %+.2f", count, n * p, z)};
}

}  // namespace
}  // namespace semfuse

int main(int argc, char** argv) {
  using namespace semfuse;
  CLI::App app{"Acceptance criteria"};
  std::string cli;
  std::string work = (fs::temp_directory_path() / "semfuse_acceptance").string();
  std::vector<int> only;
  Criterion5Options c5;
  app.add_option("--cli", cli, "Path of the semfuse executable");
  app.add_option("--work", work, "Scratch directory for the CLI runs");
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--c5-epochs", c5.epochs, "Training epochs per run for criterion 5")->check(CLI::Range(1, 300));
  app.add_option("--c5-seeds", c5.seeds, "Seeds for criterion 5");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, FusionIdentities},
      {2, GradientSuite},
      {3, Feasibility},
      {4, ExhaustiveOracle},
      {5, [&] { return DeskScale(c5); }},
      {6, TsdfFidelity},
      {7, [&] { return CliDeterminism(cli, work); }},
      {8, OutlierFrequency},
  };
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
