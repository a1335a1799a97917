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
// semfuse: simulate -> fuse -> train -> reconstruct -> eval -> export.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "semfuse/config.h"
#include "semfuse/errors.h"
#include "semfuse/io.h"
#include "semfuse/metrics.h"
#include "semfuse/pipeline.h"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace semfuse {
namespace {

constexpr const char* kManifest = "manifest.json";

std::string ViewFile(std::size_t v, const char* what) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "view_%03zu_%s.pfm", v, what);
  return buf;
}

std::string SensorDir(std::size_t s) { return "sensor_" + std::to_string(s); }

template <typename T>
Image<double> ToDouble(const Image<T>& img) {
  Image<double> out(img.width(), img.height());
  for (std::size_t i = 0; i < img.data().size(); ++i) out.data()[i] = img.data()[i];
  return out;
}

template <typename T>
Image<T> FromDouble(const Image<double>& img) {
  Image<T> out(img.width(), img.height());
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    out.data()[i] = static_cast<T>(img.data()[i]);
  }
  return out;
}

void MakeDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

json LoadJson(const fs::path& path) {
  try {
    return json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void WriteJson(const fs::path& path, const ordered_json& j) { WriteFile(path, j.dump(2) + "\n"); }

// ---- simulate ----

struct SimulateArgs {
  std::string scene;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void RunSimulate(const SimulateArgs& a) {
  SceneDocument doc = LoadSceneDocument(a.scene);
  if (a.seed) doc.simulation.seed = *a.seed;
  const SimulatedScene sim = Simulate(doc.scene, doc.simulation);
  const fs::path out = a.out;
  MakeDir(out);
  WriteFile(out / "scene.json", SceneDocumentToJson(doc));
  SaveVolume(out / "gt.sfvx", ToVolumeFile(sim.gt));
  for (std::size_t s = 0; s < sim.sensors.size(); ++s) {
    const SensorCapture& cap = sim.sensors[s];
    const fs::path dir = out / SensorDir(s);
    MakeDir(dir);
    std::vector<Pose> poses;
    for (std::size_t v = 0; v < cap.views.size(); ++v) {
      const SensorView& view = cap.views[v];
      poses.push_back(view.pose);
      SavePfm(dir / ViewFile(v, "depth"), view.depth);
      SavePfm(dir / ViewFile(v, "image"), view.image);
      if (view.right_image) SavePfm(dir / ViewFile(v, "right"), *view.right_image);
      SavePfm(dir / ViewFile(v, "labels"), ToDouble(cap.semantics[v]));
      if (view.outlier_mask) SavePfm(dir / ViewFile(v, "outliers"), ToDouble(*view.outlier_mask));
    }
    WriteFile(dir / "camera.json", CameraRigToJson(doc.simulation.intr, poses, cap.model));
  }
  std::cout << "simulated " << sim.sensors.size() << " sensors, "
            << sim.sensors.front().views.size() << " views, grid " << sim.spec.dims[0] << "x"
            << sim.spec.dims[1] << "x" << sim.spec.dims[2] << " -> " << out.string() << "\n";
}

// Reads the sensors written by `simulate`.
SimulatedScene LoadSimulation(const fs::path& dir, SceneDocument* doc) {
  *doc = LoadSceneDocument(dir / "scene.json");
  SimulatedScene sim;
  sim.scene = doc->scene;
  sim.spec = RoomGrid(sim.scene, doc->simulation.voxel_size);
  sim.gt = LabelsFromFile(LoadVolume(dir / "gt.sfvx"));
  if (sim.gt.spec != sim.spec) throw DataError("gt.sfvx does not match the scene grid");
  for (std::size_t s = 0; fs::exists(dir / SensorDir(s)); ++s) {
    const fs::path sdir = dir / SensorDir(s);
    const CameraRig rig = ParseCameraRig(ReadFile(sdir / "camera.json"));
    SensorCapture cap;
    cap.model = rig.model;
    for (std::size_t v = 0; v < rig.poses.size(); ++v) {
      SensorView view;
      view.intr = rig.intr;
      view.pose = rig.poses[v];
      view.depth = LoadPfm(sdir / ViewFile(v, "depth"));
      view.image = LoadPfm(sdir / ViewFile(v, "image"));
      if (rig.model.stereo) {
        view.right_image = LoadPfm(sdir / ViewFile(v, "right"));
        view.baseline = rig.model.baseline;
      }
      if (fs::exists(sdir / ViewFile(v, "outliers"))) {
        view.outlier_mask = FromDouble<std::uint8_t>(LoadPfm(sdir / ViewFile(v, "outliers")));
      }
      cap.semantics.push_back(FromDouble<std::int32_t>(LoadPfm(sdir / ViewFile(v, "labels"))));
      cap.views.push_back(std::move(view));
    }
    sim.sensors.push_back(std::move(cap));
  }
  if (sim.sensors.empty()) throw DataError(dir.string() + ": no sensor directories");
  return sim;
}

// ---- fuse ----

struct FuseArgs {
  std::string scene;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void RunFuse(const FuseArgs& a) {
  SceneDocument doc;
  const SimulatedScene sim = LoadSimulation(a.scene, &doc);
  const double trunc = doc.simulation.truncation;
  const fs::path out = a.out;
  MakeDir(out);
  ordered_json manifest;
  manifest["truncation"] = trunc;
  manifest["labels"] = sim.scene.labels;
  manifest["gt"] = "gt.sfvx";
  manifest["fused_tsdf"] = "fused_tsdf.sfvx";
  manifest["sensors"] = ordered_json::array();
  std::vector<TsdfVolume> tsdfs;
  for (std::size_t s = 0; s < sim.sensors.size(); ++s) {
    const SensorCapture& cap = sim.sensors[s];
    const std::string prefix = SensorDir(s);
    tsdfs.push_back(FuseSensor(cap, sim.spec, trunc));
    const SensorInputs in =
        BuildSensorInputs(cap, sim.spec, sim.scene.labels, trunc, {}, static_cast<int>(s));
    SaveVolume(out / (prefix + "_tsdf.sfvx"), ToVolumeFile(tsdfs.back()));
    SaveVolume(out / (prefix + "_datacost.sfvx"), ToVolumeFile(in.datacost));
    SaveVolume(out / (prefix + "_features.sfvx"), ToVolumeFile(in.features));
    manifest["sensors"].push_back({{"name", cap.model.name},
                                   {"stereo", cap.model.stereo},
                                   {"tsdf", prefix + "_tsdf.sfvx"},
                                   {"datacost", prefix + "_datacost.sfvx"},
                                   {"features", prefix + "_features.sfvx"}});
  }
  std::vector<ConfidenceVolume> ones(tsdfs.size(), ConfidenceVolume::Constant(sim.spec, 1.0));
  SaveVolume(out / "fused_tsdf.sfvx", ToVolumeFile(FuseWeighted(tsdfs, ones)));
  SaveVolume(out / "gt.sfvx", ToVolumeFile(sim.gt));
  WriteJson(out / kManifest, manifest);
  std::cout << "fused " << sim.sensors.size() << " sensors -> " << out.string() << "\n";
}

// Reads the per-sensor inputs written by `fuse`.
TrainingScene LoadFused(const fs::path& dir) {
  const json m = LoadJson(dir / kManifest);
  TrainingScene scene;
  try {
    scene.gt = LabelsFromFile(LoadVolume(dir / m.at("gt").get<std::string>()));
    int id = 0;
    for (const json& s : m.at("sensors")) {
      SensorInputs in;
      in.features = FeaturesFromFile(LoadVolume(dir / s.at("features").get<std::string>()), id);
      in.datacost = DatacostFromFile(LoadVolume(dir / s.at("datacost").get<std::string>()));
      scene.sensors.push_back(std::move(in));
      ++id;
    }
  } catch (const json::exception& e) {
    throw DataError((dir / kManifest).string() + ": " + e.what());
  }
  try {
    scene.Validate();
  } catch (const ContractError& e) {
    throw DataError(dir.string() + ": " + e.what());
  }
  return scene;
}

// ---- train ----

struct TrainArgs {
  std::string config;
  std::string out;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> iterations;
  std::optional<int> levels;
};

void RunTrain(const TrainArgs& a) {
  TrainingDocument doc = LoadTrainingDocument(a.config);
  if (a.seed) doc.config.seed = *a.seed;
  if (a.epochs) doc.config.epochs = *a.epochs;
  if (a.iterations) doc.config.solver.iterations = *a.iterations;
  if (a.levels) doc.config.solver.levels = *a.levels;
  try {
    doc.config.Validate();
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
  if (doc.scenes.empty()) throw DataError(a.config + ": no training scenes listed");
  std::vector<TrainingScene> scenes;
  for (const fs::path& p : doc.scenes) scenes.push_back(LoadFused(p));

  Trainer trainer(doc.config, InitModel(scenes.front(), doc.config));
  if (!a.checkpoint.empty()) {
    Checkpoint ck = LoadCheckpoint(a.checkpoint);
    if (FlattenTrainable(ck.model, doc.config).size() !=
        FlattenTrainable(trainer.model, doc.config).size()) {
      throw DataError("checkpoint does not match the configured model");
    }
    trainer.model = std::move(ck.model);
    trainer.adam = std::move(ck.adam);
    trainer.epoch = ck.epoch;
  }
  const fs::path out = a.out;
  MakeDir(out);
  std::ostringstream curve;
  curve << "# epoch loss semantic free sigma tau\n";
  char line[256];
  for (int e = 0; e < doc.config.epochs; ++e) {
    const EpochStats st = trainer.RunEpoch(scenes);
    std::snprintf(line, sizeof(line), "%d %.9g %.9g %.9g %.9g %.9g\n", st.epoch, st.loss,
                  st.semantic, st.free, st.sigma, st.tau);
    curve << line;
    std::cout << line << std::flush;
  }
  WriteFile(out / "loss_curve.txt", curve.str());
  SaveCheckpoint(out / "checkpoint.sfck",
                 {TrainingConfigToJson(doc.config), trainer.model, trainer.adam, trainer.epoch});
}

// ---- reconstruct ----

struct ReconstructArgs {
  std::string scene;
  std::string checkpoint;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<int> levels;
};

void RunReconstruct(const ReconstructArgs& a) {
  const TrainingScene scene = LoadFused(a.scene);
  TrainingConfig config;
  Model model;
  if (!a.checkpoint.empty()) {
    Checkpoint ck = LoadCheckpoint(a.checkpoint);
    config = TrainingConfigFromJson(ck.config_json);
    model = std::move(ck.model);
    if (model.mlps.size() != scene.sensors.size() || model.w.num_labels != scene.gt.NumLabels()) {
      throw DataError("checkpoint does not match the scene's sensors or labels");
    }
  } else {
    // Unit confidences and the initial regularizer.
    model = InitModel(scene, config);
  }
  SolverConfig solver = config.solver;
  if (a.iterations) solver.iterations = *a.iterations;
  if (a.levels) solver.levels = *a.levels;
  if (solver.iterations < 1 || solver.levels < 1) {
    throw DataError("iterations and levels must be at least 1");
  }
  const fs::path out = a.out;
  MakeDir(out);
  const LabelVolume u = Reconstruct(model, scene.sensors, solver);
  GroundTruthVolume labels;
  labels.spec = u.spec;
  labels.labels = u.labels;
  labels.values = ExtractLabels(u);
  SaveVolume(out / "labels.sfvx", ToVolumeFile(labels));
  const std::vector<ConfidenceVolume> confs = PredictConfidences(model, scene.sensors);
  for (std::size_t s = 0; s < confs.size(); ++s) {
    SaveVolume(out / (SensorDir(s) + "_confidence.sfvx"), ToVolumeFile(confs[s]));
  }
  std::cout << "reconstructed " << labels.spec.dims[0] << "x" << labels.spec.dims[1] << "x"
            << labels.spec.dims[2] << " with " << solver.iterations << " iterations, "
            << solver.levels << " level(s) -> " << out.string() << "\n";
}

// ---- eval ----

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string scene;
  std::string out;
  std::optional<std::uint64_t> seed;
};

ordered_json Optional(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

void RunEval(const EvalArgs& a) {
  fs::path gt_path = a.gt;
  if (gt_path.empty()) {
    if (a.scene.empty()) throw DataError("eval needs --gt or --scene");
    gt_path = fs::path(a.scene) / LoadJson(fs::path(a.scene) / kManifest).value("gt", "gt.sfvx");
  }
  const GroundTruthVolume gt = LabelsFromFile(LoadVolume(gt_path));
  const GroundTruthVolume pred = LabelsFromFile(LoadVolume(a.pred));
  if (pred.spec != gt.spec) throw DataError("prediction and ground truth grids differ");
  if (pred.labels != gt.labels) throw DataError("prediction and ground truth labels differ");
  const MetricsReport r = Evaluate(pred.values, gt);
  ordered_json j;
  j["semantic_accuracy"] = Optional(r.semantic_accuracy);
  j["free_space_accuracy"] = Optional(r.free_space_accuracy);
  j["completion_tp_rate"] = Optional(r.completion_tp_rate);
  j["mean_surface_distance"] = Optional(r.mean_surface_distance);
  j["num_labels"] = r.num_labels;
  j["labels"] = gt.labels;
  ordered_json rows = ordered_json::array();
  for (int g = 0; g < r.num_labels; ++g) {
    rows.push_back(std::vector<std::int64_t>(r.confusion.begin() + g * r.num_labels,
                                             r.confusion.begin() + (g + 1) * r.num_labels));
  }
  j["confusion"] = rows;
  j["definitions"] = {
      {"semantic_accuracy", "correctly labeled GT-occupied voxels / GT-occupied voxels"},
      {"free_space_accuracy", "GT-free voxels predicted free / GT-free voxels"},
      {"completion_tp_rate", "GT-occupied voxels predicted as any occupied label / GT-occupied voxels"},
      {"mean_surface_distance",
       "one-directional: mean distance in voxels from each predicted surface voxel to the nearest "
       "GT surface voxel (surface = occupied voxel with a free or unknown 6-neighbor)"},
      {"confusion", "rows are GT labels, columns predicted labels; unknown GT voxels excluded"},
      {"absent", "null means the denominator is empty"}};
  const std::string text = j.dump(2) + "\n";
  if (!a.out.empty()) WriteFile(a.out, text);
  std::cout << text;
}

// ---- export ----

struct ExportArgs {
  std::string volume;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void RunExport(const ExportArgs& a) {
  const VolumeFile v = LoadVolume(a.volume);
  switch (v.kind) {
    case PayloadKind::kLabels:
      ExportLabelsPly(a.out, LabelsFromFile(v));
      break;
    case PayloadKind::kTsdf:
      // Only the sign matters for the zero crossing.
      ExportTsdfPly(a.out, TsdfFromFile(v, 1.0));
      break;
    default:
      throw DataError(std::string("cannot export a ") + PayloadKindName(v.kind) + " volume");
  }
  std::cout << "wrote " << a.out << "\n";
}

void AddSeed(CLI::App* cmd, std::optional<std::uint64_t>* seed, const char* help) {
  cmd->add_option("--seed", *seed, help);
}

}  // namespace
}  // namespace semfuse

int main(int argc, char** argv) {
  using namespace semfuse;
  CLI::App app{"Multi-sensor semantic volumetric fusion with learned confidences"};
  app.require_subcommand(1);
  const char* no_randomness = "Accepted for uniformity; this command has no random state";

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Render a scene file into depth maps and GT");
  simulate->add_option("--scene", sim.scene, "Scene file (JSON)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Output directory")->required();
  AddSeed(simulate, &sim.seed, "Overrides the scene file's seed");

  FuseArgs fuse;
  auto* fuse_cmd = app.add_subcommand("fuse", "Per-sensor TSDFs, datacosts and features");
  fuse_cmd->add_option("--scene", fuse.scene, "Directory written by simulate")->required()->check(CLI::ExistingDirectory);
  fuse_cmd->add_option("--out", fuse.out, "Output directory")->required();
  AddSeed(fuse_cmd, &fuse.seed, no_randomness);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train confidences and regularizer end to end");
  train_cmd->add_option("--config", train.config, "Training config (JSON)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--checkpoint", train.checkpoint, "Resume from this checkpoint")->check(CLI::ExistingFile);
  AddSeed(train_cmd, &train.seed, "Overrides the config seed");
  train_cmd->add_option("--epochs", train.epochs, "Overrides the config epoch count")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--iterations", train.iterations, "Unrolled solver iterations")->check(CLI::PositiveNumber);
  train_cmd->add_option("--levels", train.levels, "Solver pyramid levels")->check(CLI::PositiveNumber);

  ReconstructArgs rec;
  auto* rec_cmd = app.add_subcommand("reconstruct", "Solve for the semantic labeling");
  rec_cmd->add_option("--scene", rec.scene, "Directory written by fuse")->required()->check(CLI::ExistingDirectory);
  rec_cmd->add_option("--checkpoint", rec.checkpoint, "Trained model; unit confidences if omitted")->check(CLI::ExistingFile);
  rec_cmd->add_option("--out", rec.out, "Output directory")->required();
  rec_cmd->add_option("--iterations", rec.iterations, "Solver iterations")->check(CLI::PositiveNumber);
  rec_cmd->add_option("--levels", rec.levels, "Solver pyramid levels")->check(CLI::PositiveNumber);
  AddSeed(rec_cmd, &rec.seed, no_randomness);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Compare a label volume against ground truth");
  eval_cmd->add_option("--pred", ev.pred, "Predicted label volume")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--gt", ev.gt, "Ground-truth label volume")->check(CLI::ExistingFile);
  eval_cmd->add_option("--scene", ev.scene, "Directory written by fuse (GT source)")->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--out", ev.out, "Metrics file (JSON); stdout only if omitted");
  AddSeed(eval_cmd, &ev.seed, no_randomness);

  ExportArgs ex;
  auto* export_cmd = app.add_subcommand("export", "Write a label or TSDF volume as PLY cubes");
  export_cmd->add_option("--volume", ex.volume, "Label or TSDF volume")->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--out", ex.out, "PLY file")->required();
  AddSeed(export_cmd, &ex.seed, no_randomness);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*simulate) RunSimulate(sim);
    if (*fuse_cmd) RunFuse(fuse);
    if (*train_cmd) RunTrain(train);
    if (*rec_cmd) RunReconstruct(rec);
    if (*eval_cmd) RunEval(ev);
    if (*export_cmd) RunExport(ex);
  } catch (const std::exception& e) {
    std::cerr << "semfuse: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
