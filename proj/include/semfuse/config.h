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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "semfuse/simdata.h"
#include "semfuse/training.h"

namespace semfuse {

// Scene description file (JSON object):
//   seed            simulation seed (noise and trajectory), default 0
//   room            {seed, size[3], shell_thickness, snap, min_boxes, max_boxes, table};
//                   generates the geometry when "boxes" is absent
//   labels          label names, "free" first (with "boxes")
//   room_min, room_max, boxes [{label, min[3], max[3]}],
//   textures        {label: {base, contrast, frequency}}
//   camera          {fx, fy, cx, cy, width, height}
//   voxel_size, truncation
//   trajectory      {views, height, radius_fraction, pitch_low, pitch_high}
//   sensors         [{name, stereo, baseline, noise: [{type: gaussian, a, b} |
//                    {type: outlier, p, sigma, mode: offset|absolute} |
//                    {type: dropout, g_min}]}]; default: the two benchmark sensors
// Unknown keys are rejected.
struct SceneDocument {
  Scene scene;
  SimulationConfig simulation;
};

SceneDocument ParseSceneDocument(std::string_view json_text);
SceneDocument LoadSceneDocument(const std::filesystem::path& path);
// Canonical JSON with explicit boxes; parses back to the same document.
std::string SceneDocumentToJson(const SceneDocument& doc);

// Training config file (JSON object): the TrainingConfig fields by name
// (learning_rate, batch_size, crop, lambda_f, epochs, seed, solver {iterations,
// levels}, eps_log, learn_confidence, learn_regularizer, learn_step_sizes,
// hidden_widths, regularizer_init) plus "scenes", a list of directories
// written by `fuse`, relative to the config file.
struct TrainingDocument {
  TrainingConfig config;
  std::vector<std::filesystem::path> scenes;
};

TrainingDocument ParseTrainingDocument(std::string_view json_text,
                                       const std::filesystem::path& base_dir = {});
TrainingDocument LoadTrainingDocument(const std::filesystem::path& path);
std::string TrainingConfigToJson(const TrainingConfig& config);
TrainingConfig TrainingConfigFromJson(std::string_view json_text);

// Camera intrinsics and per-view poses of one sensor.
std::string CameraRigToJson(const CameraIntrinsics& intr, const std::vector<Pose>& poses,
                            const SensorModel& model);
struct CameraRig {
  CameraIntrinsics intr;
  std::vector<Pose> poses;
  SensorModel model;
};
CameraRig ParseCameraRig(std::string_view json_text);

}  // namespace semfuse
