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
#include "semfuse/io.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "semfuse/errors.h"
#include "semfuse/metrics.h"

namespace semfuse {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in host order and require a little-endian host");

namespace {

constexpr char kVolumeMagic[4] = {'S', 'F', 'V', 'X'};
constexpr char kCheckpointMagic[4] = {'S', 'F', 'C', 'K'};

class ByteWriter {
 public:
  template <typename T>
  void Put(T value) {
    char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    bytes_.append(raw, sizeof(T));
  }
  template <typename T>
  void PutArray(const T* data, std::size_t count) {
    bytes_.append(reinterpret_cast<const char*>(data), count * sizeof(T));
  }
  void PutString(std::string_view s) {
    Put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes_.append(s);
  }
  void PutMagic(const char (&magic)[4]) { bytes_.append(magic, 4); }
  std::string Take() { return std::move(bytes_); }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  ByteReader(std::string_view bytes, const char* what) : bytes_(bytes), what_(what) {}

  std::uint64_t offset() const { return pos_; }

  template <typename T>
  T Get() {
    Need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  template <typename T>
  void GetArray(T* out, std::uint64_t count) {
    if (count > (bytes_.size() - pos_) / sizeof(T)) Fail("truncated array");
    std::memcpy(out, bytes_.data() + pos_, count * sizeof(T));
    pos_ += count * sizeof(T);
  }
  std::string GetString() {
    const auto size = Get<std::uint32_t>();
    Need(size);
    std::string s(bytes_.substr(pos_, size));
    pos_ += size;
    return s;
  }
  void ExpectMagic(const char (&magic)[4]) {
    Need(4);
    if (std::memcmp(bytes_.data(), magic, 4) != 0) Fail("bad magic");
    pos_ += 4;
  }
  void ExpectEnd() {
    if (pos_ != bytes_.size()) Fail("trailing bytes");
  }
  [[noreturn]] void Fail(const std::string& message) const {
    throw FormatError(std::string(what_) + ": " + message, pos_);
  }

 private:
  void Need(std::uint64_t count) {
    if (count > bytes_.size() - pos_) Fail("unexpected end of data");
  }

  std::string_view bytes_;
  const char* what_;
  std::uint64_t pos_ = 0;
};

template <typename T>
std::vector<float> ToFloats(const std::vector<T>& values) {
  return std::vector<float>(values.begin(), values.end());
}

void CheckKind(const VolumeFile& file, PayloadKind kind) {
  file.Validate();
  if (file.kind != kind) {
    throw DataError(std::string("volume: expected a ") + PayloadKindName(kind) + " payload, got " +
                    PayloadKindName(file.kind));
  }
}

std::int64_t PayloadChannelSize(const VolumeFile& file) { return file.spec.NumVoxels(); }

}  // namespace

const char* PayloadKindName(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::kTsdf: return "tsdf";
    case PayloadKind::kDatacost: return "datacost";
    case PayloadKind::kLabels: return "labels";
    case PayloadKind::kConfidence: return "confidence";
    case PayloadKind::kFeatures: return "features";
  }
  return "unknown";
}

void VolumeFile::Validate() const {
  spec.Validate();
  Require(channels >= 1, "volume: need at least one channel");
  Require(static_cast<std::uint32_t>(kind) <= static_cast<std::uint32_t>(PayloadKind::kFeatures),
          "volume: unknown payload kind");
  Require(payload.size() == static_cast<std::size_t>(spec.NumVoxels()) * channels,
          "volume: payload length differs from dims x channels");
}

std::string EncodeVolume(const VolumeFile& volume) {
  volume.Validate();
  ByteWriter w;
  w.PutMagic(kVolumeMagic);
  w.Put<std::uint32_t>(kVolumeFileVersion);
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(volume.kind));
  for (int d : volume.spec.dims) w.Put<std::int32_t>(d);
  for (int a = 0; a < 3; ++a) w.Put<double>(volume.spec.origin[a]);
  w.Put<double>(volume.spec.voxel_size);
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(volume.channels));
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(volume.labels.size()));
  for (const std::string& l : volume.labels) w.PutString(l);
  w.Put<std::uint64_t>(volume.payload.size());
  w.PutArray(volume.payload.data(), volume.payload.size());
  return w.Take();
}

VolumeFile DecodeVolume(std::string_view bytes) {
  ByteReader r(bytes, "volume");
  r.ExpectMagic(kVolumeMagic);
  const auto version = r.Get<std::uint32_t>();
  if (version != kVolumeFileVersion) {
    throw FormatError("volume: unsupported version " + std::to_string(version), 4);
  }
  VolumeFile v;
  const std::uint64_t kind_offset = r.offset();
  const auto kind = r.Get<std::uint32_t>();
  if (kind > static_cast<std::uint32_t>(PayloadKind::kFeatures)) {
    throw FormatError("volume: unknown payload kind " + std::to_string(kind), kind_offset);
  }
  v.kind = static_cast<PayloadKind>(kind);
  const std::uint64_t dims_offset = r.offset();
  for (int& d : v.spec.dims) d = r.Get<std::int32_t>();
  for (int a = 0; a < 3; ++a) v.spec.origin[a] = r.Get<double>();
  v.spec.voxel_size = r.Get<double>();
  try {
    v.spec.Validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("volume: invalid grid: ") + e.what(), dims_offset);
  }
  const std::uint64_t channels_offset = r.offset();
  const auto channels = r.Get<std::uint32_t>();
  if (channels == 0 || channels > (1u << 16)) {
    throw FormatError("volume: invalid channel count", channels_offset);
  }
  v.channels = static_cast<int>(channels);
  const auto label_count = r.Get<std::uint32_t>();
  if (label_count > (1u << 16)) r.Fail("implausible label count");
  for (std::uint32_t i = 0; i < label_count; ++i) v.labels.push_back(r.GetString());
  const std::uint64_t count_offset = r.offset();
  const auto count = r.Get<std::uint64_t>();
  if (count != static_cast<std::uint64_t>(v.spec.NumVoxels()) * channels) {
    throw FormatError("volume: payload length differs from dims x channels", count_offset);
  }
  v.payload.resize(count);
  r.GetArray(v.payload.data(), count);
  r.ExpectEnd();
  return v;
}

void SaveVolume(const std::filesystem::path& path, const VolumeFile& volume) {
  WriteFile(path, EncodeVolume(volume));
}

VolumeFile LoadVolume(const std::filesystem::path& path) { return DecodeVolume(ReadFile(path)); }

VolumeFile ToVolumeFile(const TsdfVolume& tsdf) {
  tsdf.Validate();
  VolumeFile f{PayloadKind::kTsdf, tsdf.spec, {}, 2, ToFloats(tsdf.values)};
  f.payload.insert(f.payload.end(), tsdf.weights.begin(), tsdf.weights.end());
  return f;
}

VolumeFile ToVolumeFile(const SemanticDatacost& datacost) {
  datacost.Validate();
  return {PayloadKind::kDatacost, datacost.spec, datacost.labels, datacost.NumLabels(),
          ToFloats(datacost.cost)};
}

VolumeFile ToVolumeFile(const GroundTruthVolume& labels) {
  labels.Validate();
  return {PayloadKind::kLabels, labels.spec, labels.labels, 1, ToFloats(labels.values)};
}

VolumeFile ToVolumeFile(const ConfidenceVolume& conf) {
  conf.Validate();
  return {PayloadKind::kConfidence, conf.spec, {}, 1, ToFloats(conf.conf)};
}

VolumeFile ToVolumeFile(const FeatureVolume& features) {
  features.Validate();
  const std::int64_t n = features.spec.NumVoxels();
  const int dim = features.dim;
  VolumeFile f{PayloadKind::kFeatures, features.spec, {}, dim + 1, {}};
  f.payload.resize(static_cast<std::size_t>(n * (dim + 1)));
  for (int c = 0; c < dim; ++c)
    for (std::int64_t x = 0; x < n; ++x)
      f.payload[c * n + x] = static_cast<float>(features.values[x * dim + c]);
  for (std::int64_t x = 0; x < n; ++x) f.payload[dim * n + x] = static_cast<float>(features.counts[x]);
  return f;
}

TsdfVolume TsdfFromFile(const VolumeFile& file, double trunc) {
  CheckKind(file, PayloadKind::kTsdf);
  if (file.channels != 2) throw DataError("volume: tsdf payload needs 2 channels");
  TsdfVolume t = TsdfVolume::Empty(file.spec, trunc);
  const std::int64_t n = PayloadChannelSize(file);
  std::copy_n(file.payload.begin(), n, t.values.begin());
  std::copy_n(file.payload.begin() + n, n, t.weights.begin());
  return t;
}

SemanticDatacost DatacostFromFile(const VolumeFile& file) {
  CheckKind(file, PayloadKind::kDatacost);
  if (file.channels != static_cast<int>(file.labels.size())) {
    throw DataError("volume: datacost channel count differs from the label count");
  }
  SemanticDatacost d = SemanticDatacost::Zero(file.spec, file.labels);
  std::copy(file.payload.begin(), file.payload.end(), d.cost.begin());
  return d;
}

GroundTruthVolume LabelsFromFile(const VolumeFile& file) {
  CheckKind(file, PayloadKind::kLabels);
  if (file.channels != 1) throw DataError("volume: label payload needs 1 channel");
  GroundTruthVolume g = GroundTruthVolume::Unknown(file.spec, file.labels);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    const float v = file.payload[i];
    if (v != std::floor(v) || v < kUnknownLabel || v >= g.NumLabels()) {
      throw DataError("volume: invalid label value at voxel " + std::to_string(i));
    }
    g.values[i] = static_cast<std::int32_t>(v);
  }
  return g;
}

ConfidenceVolume ConfidenceFromFile(const VolumeFile& file) {
  CheckKind(file, PayloadKind::kConfidence);
  if (file.channels != 1) throw DataError("volume: confidence payload needs 1 channel");
  return ConfidenceVolume{file.spec, std::vector<double>(file.payload.begin(), file.payload.end())};
}

FeatureVolume FeaturesFromFile(const VolumeFile& file, int sensor_id) {
  CheckKind(file, PayloadKind::kFeatures);
  const int dim = file.channels - 1;
  if (dim != kMonoFeatureDim && dim != kStereoFeatureDim) {
    throw DataError("volume: unsupported feature channel count");
  }
  FeatureVolume f = FeatureVolume::Zero(file.spec, sensor_id, dim);
  const std::int64_t n = PayloadChannelSize(file);
  for (int c = 0; c < dim; ++c)
    for (std::int64_t x = 0; x < n; ++x) f.values[x * dim + c] = file.payload[c * n + x];
  for (std::int64_t x = 0; x < n; ++x) f.counts[x] = static_cast<std::int32_t>(file.payload[dim * n + x]);
  return f;
}

void SavePfm(const std::filesystem::path& path, const Image<double>& image) {
  std::string bytes = "Pf\n" + std::to_string(image.width()) + " " +
                      std::to_string(image.height()) + "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(image.width()));
  // Rows are stored bottom to top.
  for (int y = image.height() - 1; y >= 0; --y) {
    for (int x = 0; x < image.width(); ++x) row[x] = static_cast<float>(image(x, y));
    bytes.append(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
  }
  WriteFile(path, bytes);
}

Image<double> LoadPfm(const std::filesystem::path& path) {
  const std::string bytes = ReadFile(path);
  std::istringstream header(bytes);
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  header >> magic >> width >> height >> scale;
  if (!header || magic != "Pf") throw FormatError("pfm: bad header in " + path.string(), 0);
  if (scale >= 0.0) throw FormatError("pfm: only little-endian files are supported", 0);
  if (width <= 0 || height <= 0) throw FormatError("pfm: invalid size", 3);
  const auto data_offset = static_cast<std::uint64_t>(header.tellg()) + 1;
  const std::uint64_t expected = static_cast<std::uint64_t>(width) * height * sizeof(float);
  if (bytes.size() < data_offset || bytes.size() - data_offset != expected) {
    throw FormatError("pfm: pixel data size differs from the header", data_offset);
  }
  Image<double> image(width, height);
  const char* p = bytes.data() + data_offset;
  for (int y = height - 1; y >= 0; --y) {
    for (int x = 0; x < width; ++x, p += sizeof(float)) {
      float v;
      std::memcpy(&v, p, sizeof(float));
      image(x, y) = v;
    }
  }
  return image;
}

Rgb LabelColor(int label) {
  static constexpr Rgb kPalette[] = {{200, 200, 200}, {140, 100, 60},  {220, 210, 170},
                                     {120, 160, 220}, {200, 60, 60},   {60, 170, 90},
                                     {230, 170, 40},  {150, 80, 170},  {40, 160, 170},
                                     {240, 120, 160}};
  constexpr int kCount = sizeof(kPalette) / sizeof(kPalette[0]);
  return kPalette[((label % kCount) + kCount) % kCount];
}

std::string CubesPly(const VoxelGridSpec& spec, const std::vector<std::uint8_t>& mask,
                     const std::vector<Rgb>& colors) {
  spec.Validate();
  Require(mask.size() == static_cast<std::size_t>(spec.NumVoxels()) && colors.size() == mask.size(),
          "ply: mask and colors must cover the grid");
  std::int64_t cubes = 0;
  for (std::uint8_t m : mask) cubes += m != 0;
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\nelement vertex " << 8 * cubes
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\n"
         "element face "
      << 12 * cubes << "\nproperty list uchar int vertex_indices\nend_header\n";
  char line[128];
  for (std::int64_t x = 0; x < spec.NumVoxels(); ++x) {
    if (!mask[x]) continue;
    const Index3 idx = spec.Unravel(x);
    const Vec3 lo = spec.origin + spec.voxel_size * Vec3(idx[0], idx[1], idx[2]);
    const Rgb c = colors[x];
    for (int corner = 0; corner < 8; ++corner) {
      const Vec3 p = lo + spec.voxel_size * Vec3(corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
      std::snprintf(line, sizeof(line), "%.6f %.6f %.6f %d %d %d\n", p.x(), p.y(), p.z(), c[0],
                    c[1], c[2]);
      out << line;
    }
  }
  // Corner bits are (x, y, z); triangles wind outward.
  static constexpr int kFaces[12][3] = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6},
                                        {0, 1, 4}, {1, 5, 4}, {2, 6, 3}, {3, 6, 7},
                                        {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  for (std::int64_t cube = 0; cube < cubes; ++cube) {
    const std::int64_t base = 8 * cube;
    for (const auto& f : kFaces) {
      out << "3 " << base + f[0] << ' ' << base + f[1] << ' ' << base + f[2] << '\n';
    }
  }
  return out.str();
}

void ExportLabelsPly(const std::filesystem::path& path, const GroundTruthVolume& labels) {
  labels.Validate();
  std::vector<std::uint8_t> mask(labels.values.size());
  std::vector<Rgb> colors(labels.values.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = labels.values[i] > kFreeLabel;
    colors[i] = LabelColor(labels.values[i]);
  }
  WriteFile(path, CubesPly(labels.spec, mask, colors));
}

void ExportTsdfPly(const std::filesystem::path& path, const TsdfVolume& tsdf) {
  const std::vector<std::uint8_t> mask = ZeroCrossingMask(tsdf);
  WriteFile(path, CubesPly(tsdf.spec, mask, std::vector<Rgb>(mask.size(), LabelColor(0))));
}

std::string EncodeCheckpoint(const Checkpoint& checkpoint) {
  checkpoint.model.Validate();
  ByteWriter w;
  w.PutMagic(kCheckpointMagic);
  w.Put<std::uint32_t>(kCheckpointVersion);
  w.Put<std::uint64_t>(checkpoint.config_json.size());
  w.PutArray(checkpoint.config_json.data(), checkpoint.config_json.size());
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(checkpoint.model.mlps.size()));
  std::vector<double> flat;
  for (const MlpParams& p : checkpoint.model.mlps) {
    w.Put<std::uint32_t>(static_cast<std::uint32_t>(p.sensor_id));
    const std::vector<int> widths = p.Widths();
    w.Put<std::uint32_t>(static_cast<std::uint32_t>(widths.size()));
    for (int width : widths) w.Put<std::int32_t>(width);
    flat.clear();
    p.Flatten(&flat);
    w.PutArray(flat.data(), flat.size());
  }
  const RegularizerW& rw = checkpoint.model.w;
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(rw.num_labels));
  w.PutArray(rw.kernel.data(), rw.kernel.size());
  w.Put<double>(rw.log_sigma);
  w.Put<double>(rw.log_tau);
  Require(checkpoint.adam.m.size() == checkpoint.adam.v.size(), "checkpoint: Adam moment sizes differ");
  w.Put<std::uint64_t>(static_cast<std::uint64_t>(checkpoint.adam.step));
  w.Put<std::uint64_t>(checkpoint.adam.m.size());
  w.PutArray(checkpoint.adam.m.data(), checkpoint.adam.m.size());
  w.PutArray(checkpoint.adam.v.data(), checkpoint.adam.v.size());
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(checkpoint.epoch));
  return w.Take();
}

Checkpoint DecodeCheckpoint(std::string_view bytes) {
  ByteReader r(bytes, "checkpoint");
  r.ExpectMagic(kCheckpointMagic);
  const auto version = r.Get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version), 4);
  }
  Checkpoint c;
  const auto json_size = r.Get<std::uint64_t>();
  if (json_size > bytes.size()) r.Fail("config length exceeds the file");
  c.config_json.resize(json_size);
  r.GetArray(c.config_json.data(), json_size);
  const auto sensors = r.Get<std::uint32_t>();
  if (sensors == 0 || sensors > 64) r.Fail("implausible sensor count");
  for (std::uint32_t s = 0; s < sensors; ++s) {
    const auto id = r.Get<std::uint32_t>();
    const auto count = r.Get<std::uint32_t>();
    if (count < 2 || count > 64) r.Fail("implausible layer count");
    std::vector<int> widths(count);
    for (int& width : widths) {
      width = r.Get<std::int32_t>();
      if (width < 1 || width > 100000) r.Fail("implausible layer width");
    }
    if (widths.back() != 1) r.Fail("network does not end in one output");
    MlpParams p = InitMlpParams(0, widths, static_cast<int>(id));
    std::vector<double> flat(p.NumParams());
    r.GetArray(flat.data(), flat.size());
    p.Unflatten(flat);
    c.model.mlps.push_back(std::move(p));
  }
  const auto labels = r.Get<std::uint32_t>();
  if (labels < 2 || labels > 4096) r.Fail("implausible label count");
  c.model.w = RegularizerW::Zero(static_cast<int>(labels));
  r.GetArray(c.model.w.kernel.data(), c.model.w.kernel.size());
  c.model.w.log_sigma = r.Get<double>();
  c.model.w.log_tau = r.Get<double>();
  c.adam.step = static_cast<std::int64_t>(r.Get<std::uint64_t>());
  const auto moments = r.Get<std::uint64_t>();
  if (moments > bytes.size() / sizeof(double)) r.Fail("moment count exceeds the file");
  c.adam.m.resize(moments);
  c.adam.v.resize(moments);
  r.GetArray(c.adam.m.data(), moments);
  r.GetArray(c.adam.v.data(), moments);
  c.epoch = static_cast<int>(r.Get<std::uint32_t>());
  r.ExpectEnd();
  return c;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  WriteFile(path, EncodeCheckpoint(checkpoint));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  return DecodeCheckpoint(ReadFile(path));
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return buffer.str();
}

void WriteFile(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace semfuse
