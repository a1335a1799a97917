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

#include <cstdint>
#include <string>
#include <vector>

#include "semfuse/geometry.h"
#include "semfuse/image.h"

namespace semfuse {

// Discrete labeling of a grid: kUnknownLabel, kFreeLabel, or an occupied
// label index in [1, labels.size()).
struct GroundTruthVolume {
  VoxelGridSpec spec;
  std::vector<std::string> labels;
  std::vector<std::int32_t> values;  // per voxel, x-fastest

  static GroundTruthVolume Unknown(const VoxelGridSpec& spec, std::vector<std::string> labels);
  int NumLabels() const { return static_cast<int>(labels.size()); }
  void Validate() const;
};

}  // namespace semfuse
