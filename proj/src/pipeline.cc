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
#include "semfuse/pipeline.h"

#include "semfuse/errors.h"

namespace semfuse {

TsdfVolume FuseSensor(const SensorCapture& capture, const VoxelGridSpec& spec, double trunc) {
  TsdfVolume tsdf = TsdfVolume::Empty(spec, trunc);
  for (const SensorView& view : capture.views) {
    IntegrateDepthMap(view.depth, view.intr, view.pose, &tsdf);
  }
  return tsdf;
}

SensorInputs BuildSensorInputs(const SensorCapture& capture, const VoxelGridSpec& spec,
                               const std::vector<std::string>& labels, double trunc,
                               const DatacostParams& params, int sensor_id) {
  Require(capture.views.size() == capture.semantics.size(),
          "sensor inputs: one semantic image per view required");
  SensorInputs out;
  out.features =
      ExtractFeatureVolume(capture.views, spec, trunc, capture.model.stereo, sensor_id);
  out.datacost = SemanticDatacost::Zero(spec, labels);
  for (std::size_t v = 0; v < capture.views.size(); ++v) {
    const SensorView& view = capture.views[v];
    AccumulateSemanticDatacost(view.depth, capture.semantics[v], view.intr, view.pose, trunc,
                               params, &out.datacost);
  }
  return out;
}

TrainingScene BuildTrainingScene(const SimulatedScene& sim, double trunc,
                                 const DatacostParams& params) {
  TrainingScene scene;
  scene.gt = sim.gt;
  for (std::size_t s = 0; s < sim.sensors.size(); ++s) {
    scene.sensors.push_back(BuildSensorInputs(sim.sensors[s], sim.spec, sim.scene.labels, trunc,
                                              params, static_cast<int>(s)));
  }
  scene.Validate();
  return scene;
}

}  // namespace semfuse
