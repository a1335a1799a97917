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
#include "semfuse/ground_truth.h"

#include "semfuse/errors.h"

namespace semfuse {

GroundTruthVolume GroundTruthVolume::Unknown(const VoxelGridSpec& spec,
                                             std::vector<std::string> labels) {
  spec.Validate();
  GroundTruthVolume gt;
  gt.spec = spec;
  gt.labels = std::move(labels);
  gt.values.assign(static_cast<std::size_t>(spec.NumVoxels()), kUnknownLabel);
  gt.Validate();
  return gt;
}

void GroundTruthVolume::Validate() const {
  spec.Validate();
  Require(labels.size() >= 2, "ground truth: need free plus at least one label");
  Require(values.size() == static_cast<std::size_t>(spec.NumVoxels()),
          "ground truth: storage size mismatch");
  for (std::int32_t v : values) {
    Require(v >= kUnknownLabel && v < NumLabels(), "ground truth: label out of range");
  }
}

}  // namespace semfuse
