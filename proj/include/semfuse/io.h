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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "semfuse/features.h"
#include "semfuse/fusion.h"
#include "semfuse/ground_truth.h"
#include "semfuse/image.h"
#include "semfuse/training.h"

namespace semfuse {

enum class PayloadKind : std::uint32_t {
  kTsdf = 0,        // channels: value, weight
  kDatacost = 1,    // one channel per label
  kLabels = 2,      // one channel of label ids (kUnknownLabel allowed)
  kConfidence = 3,  // one channel
  kFeatures = 4,    // feature channels followed by the view count
};

const char* PayloadKindName(PayloadKind kind);

inline constexpr std::uint32_t kVolumeFileVersion = 1;

// Header (little-endian): "SFVX", u32 version, u32 kind, i32 dims[3],
// f64 origin[3], f64 voxel size, u32 channels, u32 label count, per label a
// u32 byte length and the bytes, u64 float count, then f32 payload with the
// channel slowest and x fastest.
struct VolumeFile {
  PayloadKind kind = PayloadKind::kLabels;
  VoxelGridSpec spec;
  std::vector<std::string> labels;
  int channels = 1;
  std::vector<float> payload;

  void Validate() const;
  bool operator==(const VolumeFile& other) const = default;
};

std::string EncodeVolume(const VolumeFile& volume);
VolumeFile DecodeVolume(std::string_view bytes);
void SaveVolume(const std::filesystem::path& path, const VolumeFile& volume);
VolumeFile LoadVolume(const std::filesystem::path& path);

VolumeFile ToVolumeFile(const TsdfVolume& tsdf);
VolumeFile ToVolumeFile(const SemanticDatacost& datacost);
VolumeFile ToVolumeFile(const GroundTruthVolume& labels);
VolumeFile ToVolumeFile(const ConfidenceVolume& conf);
VolumeFile ToVolumeFile(const FeatureVolume& features);

TsdfVolume TsdfFromFile(const VolumeFile& file, double trunc);
SemanticDatacost DatacostFromFile(const VolumeFile& file);
GroundTruthVolume LabelsFromFile(const VolumeFile& file);
ConfidenceVolume ConfidenceFromFile(const VolumeFile& file);
FeatureVolume FeaturesFromFile(const VolumeFile& file, int sensor_id = 0);

// Portable float map, single channel, float32.
void SavePfm(const std::filesystem::path& path, const Image<double>& image);
Image<double> LoadPfm(const std::filesystem::path& path);

using Rgb = std::array<std::uint8_t, 3>;
// Fixed colors per label id; ids past the table wrap around.
Rgb LabelColor(int label);

// ASCII PLY with one unshared 8-vertex, 12-triangle cube per selected voxel in
// linear voxel order. `mask` selects voxels; `colors` gives each voxel's color.
std::string CubesPly(const VoxelGridSpec& spec, const std::vector<std::uint8_t>& mask,
                     const std::vector<Rgb>& colors);
void ExportLabelsPly(const std::filesystem::path& path, const GroundTruthVolume& labels);
// Exports the zero-crossing voxels of a TSDF.
void ExportTsdfPly(const std::filesystem::path& path, const TsdfVolume& tsdf);

// Training state: the config as a JSON document, every trainable parameter,
// the Adam moments and the epoch counter. Binary layout: "SFCK", u32 version,
// u64 length and config bytes, u32 sensor count, per sensor u32 id, u32 width
// count, i32 widths, f64 parameters; u32 label count, f64 kernel, f64 log
// sigma, f64 log tau; u64 Adam step, u64 moment count, f64 m, f64 v; u32 epoch.
struct Checkpoint {
  std::string config_json;
  Model model;
  AdamState adam;
  int epoch = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string EncodeCheckpoint(const Checkpoint& checkpoint);
Checkpoint DecodeCheckpoint(std::string_view bytes);
void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

std::string ReadFile(const std::filesystem::path& path);
// Writes through a temporary sibling and renames it into place.
void WriteFile(const std::filesystem::path& path, std::string_view bytes);

}  // namespace semfuse
