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

#include <vector>

#include "semfuse/fusion.h"
#include "semfuse/simdata.h"
#include "semfuse/training.h"

namespace semfuse {

// TSDF of one sensor's views.
TsdfVolume FuseSensor(const SensorCapture& capture, const VoxelGridSpec& spec, double trunc);

// Features and semantic datacost of one sensor's views.
SensorInputs BuildSensorInputs(const SensorCapture& capture, const VoxelGridSpec& spec,
                               const std::vector<std::string>& labels, double trunc,
                               const DatacostParams& params = {}, int sensor_id = 0);

TrainingScene BuildTrainingScene(const SimulatedScene& sim, double trunc,
                                 const DatacostParams& params = {});

}  // namespace semfuse
