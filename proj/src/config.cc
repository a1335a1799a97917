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
#include "semfuse/config.h"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "semfuse/errors.h"
#include "semfuse/io.h"

namespace semfuse {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void CheckKeys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw DataError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw DataError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T Get(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError("key '" + key + "': " + e.what());
  }
}

Vec3 GetVec3(const json& obj, const std::string& key, const Vec3& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto v = Get<std::vector<double>>(obj, key, {});
  if (v.size() != 3) throw DataError("key '" + key + "': expected 3 numbers");
  return {v[0], v[1], v[2]};
}

json Vec3Json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json Parse(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(what + ": " + e.what());
  }
}

SensorModel ParseSensor(const json& j) {
  CheckKeys(j, {"name", "stereo", "baseline", "noise"}, "sensor");
  SensorModel m;
  m.name = Get<std::string>(j, "name", "sensor");
  m.stereo = Get<bool>(j, "stereo", false);
  m.baseline = Get<double>(j, "baseline", m.baseline);
  if (j.contains("noise")) {
    for (const json& c : j.at("noise")) {
      const std::string type = Get<std::string>(c, "type", "");
      if (type == "gaussian") {
        CheckKeys(c, {"type", "a", "b"}, "gaussian noise");
        GaussianNoise g;
        m.components.push_back(GaussianNoise{Get(c, "a", g.a), Get(c, "b", g.b)});
      } else if (type == "outlier") {
        CheckKeys(c, {"type", "p", "sigma", "mode"}, "outlier noise");
        OutlierNoise o;
        o.p = Get(c, "p", o.p);
        o.sigma = Get(c, "sigma", o.sigma);
        const std::string mode = Get<std::string>(c, "mode", "offset");
        if (mode != "offset" && mode != "absolute") {
          throw DataError("outlier noise: mode must be offset or absolute");
        }
        o.mode = mode == "offset" ? OutlierMode::kOffset : OutlierMode::kAbsolute;
        m.components.push_back(o);
      } else if (type == "dropout") {
        CheckKeys(c, {"type", "g_min"}, "dropout noise");
        m.components.push_back(LowTextureDropout{Get(c, "g_min", LowTextureDropout{}.g_min)});
      } else {
        throw DataError("sensor noise: unknown type '" + type + "'");
      }
    }
  }
  try {
    m.Validate();
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
  return m;
}

ordered_json SensorJson(const SensorModel& m) {
  ordered_json j;
  j["name"] = m.name;
  j["stereo"] = m.stereo;
  j["baseline"] = m.baseline;
  j["noise"] = ordered_json::array();
  for (const NoiseComponent& c : m.components) {
    ordered_json n;
    if (const auto* g = std::get_if<GaussianNoise>(&c)) {
      n["type"] = "gaussian";
      n["a"] = g->a;
      n["b"] = g->b;
    } else if (const auto* o = std::get_if<OutlierNoise>(&c)) {
      n["type"] = "outlier";
      n["p"] = o->p;
      n["sigma"] = o->sigma;
      n["mode"] = o->mode == OutlierMode::kOffset ? "offset" : "absolute";
    } else {
      n["type"] = "dropout";
      n["g_min"] = std::get<LowTextureDropout>(c).g_min;
    }
    j["noise"].push_back(n);
  }
  return j;
}

CameraIntrinsics ParseCamera(const json& j, CameraIntrinsics intr) {
  CheckKeys(j, {"fx", "fy", "cx", "cy", "width", "height"}, "camera");
  intr.fx = Get(j, "fx", intr.fx);
  intr.fy = Get(j, "fy", intr.fy);
  intr.cx = Get(j, "cx", intr.cx);
  intr.cy = Get(j, "cy", intr.cy);
  intr.width = Get(j, "width", intr.width);
  intr.height = Get(j, "height", intr.height);
  try {
    intr.Validate();
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
  return intr;
}

ordered_json CameraJson(const CameraIntrinsics& intr) {
  return {{"fx", intr.fx}, {"fy", intr.fy},       {"cx", intr.cx},
          {"cy", intr.cy}, {"width", intr.width}, {"height", intr.height}};
}

}  // namespace

SceneDocument ParseSceneDocument(std::string_view json_text) {
  const json j = Parse(json_text, "scene file");
  CheckKeys(j,
            {"seed", "room", "labels", "room_min", "room_max", "boxes", "textures", "camera",
             "voxel_size", "truncation", "trajectory", "sensors"},
            "scene file");
  SceneDocument doc;
  SimulationConfig& sim = doc.simulation;
  sim.seed = Get<std::uint64_t>(j, "seed", 0);
  if (j.contains("boxes")) {
    Scene& s = doc.scene;
    s.labels = Get(j, "labels", kDefaultLabels);
    s.room_min = GetVec3(j, "room_min", s.room_min);
    s.room_max = GetVec3(j, "room_max", s.room_max);
    for (const json& b : j.at("boxes")) {
      CheckKeys(b, {"label", "min", "max"}, "box");
      const std::string name = Get<std::string>(b, "label", "");
      const auto it = std::find(s.labels.begin(), s.labels.end(), name);
      if (it == s.labels.end() || it == s.labels.begin()) {
        throw DataError("box: label '" + name + "' is not an occupied label");
      }
      s.boxes.push_back({static_cast<int>(it - s.labels.begin()), GetVec3(b, "min", Vec3::Zero()),
                         GetVec3(b, "max", Vec3::Zero())});
    }
    s.textures.assign(s.labels.size(), StripeTexture{});
    if (j.contains("textures")) {
      for (const auto& [name, t] : j.at("textures").items()) {
        const auto it = std::find(s.labels.begin(), s.labels.end(), name);
        if (it == s.labels.end()) throw DataError("textures: unknown label '" + name + "'");
        CheckKeys(t, {"base", "contrast", "frequency"}, "texture");
        StripeTexture& tex = s.textures[it - s.labels.begin()];
        tex.base = Get(t, "base", tex.base);
        tex.contrast = Get(t, "contrast", tex.contrast);
        tex.frequency = Get(t, "frequency", tex.frequency);
      }
    }
  } else {
    if (j.contains("labels") || j.contains("textures") || j.contains("room_min") ||
        j.contains("room_max")) {
      throw DataError("scene file: labels, textures and room extents need explicit boxes");
    }
    RoomOptions opts;
    std::uint64_t room_seed = 0;
    if (j.contains("room")) {
      const json& r = j.at("room");
      CheckKeys(r, {"seed", "size", "shell_thickness", "snap", "min_boxes", "max_boxes", "table"},
                "room");
      room_seed = Get<std::uint64_t>(r, "seed", 0);
      opts.size = GetVec3(r, "size", opts.size);
      opts.shell_thickness = Get(r, "shell_thickness", opts.shell_thickness);
      opts.snap = Get(r, "snap", opts.snap);
      opts.min_boxes = Get(r, "min_boxes", opts.min_boxes);
      opts.max_boxes = Get(r, "max_boxes", opts.max_boxes);
      opts.table = Get(r, "table", opts.table);
    }
    try {
      doc.scene = MakeRoomScene(room_seed, opts);
    } catch (const ContractError& e) {
      throw DataError(e.what());
    }
  }
  if (j.contains("camera")) sim.intr = ParseCamera(j.at("camera"), sim.intr);
  sim.voxel_size = Get(j, "voxel_size", sim.voxel_size);
  sim.truncation = Get(j, "truncation", sim.truncation);
  if (!(sim.voxel_size > 0.0) || !(sim.truncation > 0.0)) {
    throw DataError("scene file: voxel_size and truncation must be positive");
  }
  if (j.contains("trajectory")) {
    const json& t = j.at("trajectory");
    CheckKeys(t, {"views", "height", "radius_fraction", "pitch_low", "pitch_high"}, "trajectory");
    TrajectoryOptions& o = sim.trajectory;
    o.views = Get(t, "views", o.views);
    o.height = Get(t, "height", o.height);
    o.radius_fraction = Get(t, "radius_fraction", o.radius_fraction);
    o.pitch_low = Get(t, "pitch_low", o.pitch_low);
    o.pitch_high = Get(t, "pitch_high", o.pitch_high);
    if (o.views < 1) throw DataError("trajectory: views must be at least 1");
  }
  if (j.contains("sensors")) {
    for (const json& s : j.at("sensors")) sim.sensors.push_back(ParseSensor(s));
  } else {
    sim.sensors = DefaultSensors();
  }
  if (sim.sensors.empty()) throw DataError("scene file: no sensors");
  try {
    doc.scene.Validate();
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
  return doc;
}

SceneDocument LoadSceneDocument(const std::filesystem::path& path) {
  return ParseSceneDocument(ReadFile(path));
}

std::string SceneDocumentToJson(const SceneDocument& doc) {
  ordered_json j;
  const SimulationConfig& sim = doc.simulation;
  j["seed"] = sim.seed;
  j["labels"] = doc.scene.labels;
  j["room_min"] = Vec3Json(doc.scene.room_min);
  j["room_max"] = Vec3Json(doc.scene.room_max);
  j["boxes"] = ordered_json::array();
  for (const Box& b : doc.scene.boxes) {
    j["boxes"].push_back(
        {{"label", doc.scene.labels[b.label]}, {"min", Vec3Json(b.min)}, {"max", Vec3Json(b.max)}});
  }
  j["textures"] = ordered_json::object();
  for (std::size_t l = 1; l < doc.scene.labels.size(); ++l) {
    const StripeTexture& t = doc.scene.textures[l];
    j["textures"][doc.scene.labels[l]] = {
        {"base", t.base}, {"contrast", t.contrast}, {"frequency", t.frequency}};
  }
  j["camera"] = CameraJson(sim.intr);
  j["voxel_size"] = sim.voxel_size;
  j["truncation"] = sim.truncation;
  j["trajectory"] = {{"views", sim.trajectory.views},
                     {"height", sim.trajectory.height},
                     {"radius_fraction", sim.trajectory.radius_fraction},
                     {"pitch_low", sim.trajectory.pitch_low},
                     {"pitch_high", sim.trajectory.pitch_high}};
  j["sensors"] = ordered_json::array();
  for (const SensorModel& m : sim.sensors) j["sensors"].push_back(SensorJson(m));
  return j.dump(2) + "\n";
}

namespace {

TrainingConfig ConfigFromJson(const json& j) {
  TrainingConfig c;
  c.learning_rate = Get(j, "learning_rate", c.learning_rate);
  c.batch_size = Get(j, "batch_size", c.batch_size);
  c.crop = Get(j, "crop", c.crop);
  c.lambda_f = Get(j, "lambda_f", c.lambda_f);
  c.epochs = Get(j, "epochs", c.epochs);
  c.seed = Get<std::uint64_t>(j, "seed", c.seed);
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    CheckKeys(s, {"iterations", "levels"}, "solver");
    c.solver.iterations = Get(s, "iterations", c.solver.iterations);
    c.solver.levels = Get(s, "levels", c.solver.levels);
  }
  c.eps_log = Get(j, "eps_log", c.eps_log);
  c.learn_confidence = Get(j, "learn_confidence", c.learn_confidence);
  c.learn_regularizer = Get(j, "learn_regularizer", c.learn_regularizer);
  c.learn_step_sizes = Get(j, "learn_step_sizes", c.learn_step_sizes);
  c.hidden_widths = Get(j, "hidden_widths", c.hidden_widths);
  c.regularizer_init = Get(j, "regularizer_init", c.regularizer_init);
  try {
    c.Validate();
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
  return c;
}

const std::set<std::string> kConfigKeys = {
    "learning_rate",    "batch_size",        "crop",          "lambda_f",
    "epochs",           "seed",              "solver",        "eps_log",
    "learn_confidence", "learn_regularizer", "learn_step_sizes", "hidden_widths",
    "regularizer_init"};

}  // namespace

TrainingDocument ParseTrainingDocument(std::string_view json_text,
                                       const std::filesystem::path& base_dir) {
  const json j = Parse(json_text, "training config");
  std::set<std::string> allowed = kConfigKeys;
  allowed.insert("scenes");
  CheckKeys(j, allowed, "training config");
  TrainingDocument doc;
  doc.config = ConfigFromJson(j);
  for (const std::string& s : Get<std::vector<std::string>>(j, "scenes", {})) {
    doc.scenes.push_back(base_dir / s);
  }
  return doc;
}

TrainingDocument LoadTrainingDocument(const std::filesystem::path& path) {
  return ParseTrainingDocument(ReadFile(path), path.parent_path());
}

std::string TrainingConfigToJson(const TrainingConfig& c) {
  ordered_json j;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["crop"] = c.crop;
  j["lambda_f"] = c.lambda_f;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["solver"] = {{"iterations", c.solver.iterations}, {"levels", c.solver.levels}};
  j["eps_log"] = c.eps_log;
  j["learn_confidence"] = c.learn_confidence;
  j["learn_regularizer"] = c.learn_regularizer;
  j["learn_step_sizes"] = c.learn_step_sizes;
  j["hidden_widths"] = c.hidden_widths;
  j["regularizer_init"] = c.regularizer_init;
  return j.dump(2) + "\n";
}

TrainingConfig TrainingConfigFromJson(std::string_view json_text) {
  const json j = Parse(json_text, "training config");
  CheckKeys(j, kConfigKeys, "training config");
  return ConfigFromJson(j);
}

std::string CameraRigToJson(const CameraIntrinsics& intr, const std::vector<Pose>& poses,
                            const SensorModel& model) {
  ordered_json j;
  j["camera"] = CameraJson(intr);
  j["sensor"] = SensorJson(model);
  j["poses"] = ordered_json::array();
  for (const Pose& p : poses) {
    ordered_json rot = ordered_json::array();
    for (int r = 0; r < 3; ++r) rot.push_back({p.rotation(r, 0), p.rotation(r, 1), p.rotation(r, 2)});
    j["poses"].push_back({{"rotation", rot}, {"translation", Vec3Json(p.translation)}});
  }
  return j.dump(2) + "\n";
}

CameraRig ParseCameraRig(std::string_view json_text) {
  const json j = Parse(json_text, "camera rig");
  CheckKeys(j, {"camera", "sensor", "poses"}, "camera rig");
  CameraRig rig;
  rig.intr = ParseCamera(j.at("camera"), rig.intr);
  rig.model = ParseSensor(j.at("sensor"));
  for (const json& p : j.at("poses")) {
    CheckKeys(p, {"rotation", "translation"}, "pose");
    Pose pose;
    const auto rows = Get<std::vector<std::vector<double>>>(p, "rotation", {});
    if (rows.size() != 3) throw DataError("pose: rotation needs 3 rows");
    for (int r = 0; r < 3; ++r) {
      if (rows[r].size() != 3) throw DataError("pose: rotation rows need 3 numbers");
      for (int c = 0; c < 3; ++c) pose.rotation(r, c) = rows[r][c];
    }
    pose.translation = GetVec3(p, "translation", Vec3::Zero());
    try {
      pose.Validate();
    } catch (const ContractError& e) {
      throw DataError(e.what());
    }
    rig.poses.push_back(pose);
  }
  return rig;
}

}  // namespace semfuse
