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
#include <span>
#include <vector>

#include "semfuse/geometry.h"

namespace semfuse::internal {

// Grid with one layer of padding on every side. Multi-channel volumes are
// stored plane by plane, each plane holding Size() cells. Shifting a plane by
// a 3x3x3 tap is a constant pointer offset, and reads across the border hit
// the padding.
class PaddedGrid {
 public:
  explicit PaddedGrid(const Index3& dims)
      : nx_(dims[0]), ny_(dims[1]), nz_(dims[2]), px_(nx_ + 2), py_(ny_ + 2), pz_(nz_ + 2) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  std::int64_t Size() const { return static_cast<std::int64_t>(px_) * py_ * pz_; }
  std::int64_t Index(int i, int j, int k) const {
    return (i + 1) + static_cast<std::int64_t>(px_) * ((j + 1) + static_cast<std::int64_t>(py_) * (k + 1));
  }
  std::int64_t Offset(int dx, int dy, int dz) const {
    return dx + static_cast<std::int64_t>(px_) * (dy + static_cast<std::int64_t>(py_) * dz);
  }
  // Contiguous index range covering all interior cells (and some pad cells).
  std::int64_t First() const { return Index(0, 0, 0); }
  std::int64_t Last() const { return Index(nx_ - 1, ny_ - 1, nz_ - 1) + 1; }
  // Interior rows are indexed r in [0, ny*nz); row r starts at RowStart(r) and
  // holds nx cells.
  int NumRows() const { return ny_ * nz_; }
  std::int64_t RowStart(int r) const { return Index(0, r % ny_, r / ny_); }

  std::vector<double> Pad(std::span<const double> planes, int channels) const;
  void Unpad(std::span<const double> padded, int channels, std::vector<double>* out) const;
  // Resets every pad cell of `channels` planes to zero.
  void ZeroPads(double* data, int channels) const;
  // Copies the nearest interior value into every pad cell.
  void ReplicatePads(double* data, int channels) const;
  // Adjoint of ReplicatePads: adds each pad cell into its source cell, then
  // zeroes the pads.
  void FoldPads(double* data, int channels) const;

 private:
  int nx_, ny_, nz_;
  int px_, py_, pz_;
};

// The convolutions extend the volume past its border by replication, so a
// stencil whose taps sum to zero maps a constant volume to zero everywhere.
// Pad cells of convolution inputs are ignored.

// out (3L planes) = W in (L planes). Pads of `out` are zero on return.
void ConvForward(const PaddedGrid& grid, int num_labels, std::span<const double> kernel,
                 const double* in, double* out);
// out (L planes) = W* in (3L planes). Pads of `out` are zero on return.
void ConvAdjoint(const PaddedGrid& grid, int num_labels, std::span<const double> kernel,
                 const double* in, double* out);
// grad[o][i][tap] += scale * sum_x g_o(x) u_i(x + tap), x over interior cells.
void ConvKernelGradient(const PaddedGrid& grid, int num_labels, const double* g,
                        const double* u, double scale, std::span<double> grad);

}  // namespace semfuse::internal
