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
#include "padded_grid.h"

#include <algorithm>
#include <array>

#include <Eigen/Core>

#include "semfuse/errors.h"

namespace semfuse::internal {
namespace {

constexpr std::int64_t kBlock = 2048;
constexpr int kTaps = 27;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PlaneMap = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstPlaneMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

struct Tap {
  int dx, dy, dz;
};

std::array<Tap, kTaps> AllTaps() {
  std::array<Tap, kTaps> taps{};
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) taps[(dx + 1) + 3 * ((dy + 1) + 3 * (dz + 1))] = {dx, dy, dz};
  return taps;
}

// Per-tap (3L x L) matrices.
std::vector<RowMatrix> TapMatrices(int num_labels, std::span<const double> kernel) {
  const int out = 3 * num_labels;
  Require(kernel.size() == static_cast<std::size_t>(out * num_labels * kTaps),
          "regularizer: kernel size mismatch");
  std::vector<RowMatrix> mats(kTaps, RowMatrix::Zero(out, num_labels));
  for (int o = 0; o < out; ++o)
    for (int i = 0; i < num_labels; ++i)
      for (int t = 0; t < kTaps; ++t) mats[t](o, i) = kernel[(o * num_labels + i) * kTaps + t];
  return mats;
}

}  // namespace

std::vector<double> PaddedGrid::Pad(std::span<const double> planes, int channels) const {
  const std::int64_t n = static_cast<std::int64_t>(nx_) * ny_ * nz_;
  Require(planes.size() == static_cast<std::size_t>(n * channels), "pad: size mismatch");
  std::vector<double> out(static_cast<std::size_t>(Size() * channels), 0.0);
  for (int c = 0; c < channels; ++c) {
    for (int r = 0; r < NumRows(); ++r) {
      const double* src = planes.data() + c * n + static_cast<std::int64_t>(r) * nx_;
      std::copy_n(src, nx_, out.data() + c * Size() + RowStart(r));
    }
  }
  return out;
}

void PaddedGrid::Unpad(std::span<const double> padded, int channels,
                       std::vector<double>* out) const {
  const std::int64_t n = static_cast<std::int64_t>(nx_) * ny_ * nz_;
  out->assign(static_cast<std::size_t>(n * channels), 0.0);
  for (int c = 0; c < channels; ++c) {
    for (int r = 0; r < NumRows(); ++r) {
      std::copy_n(padded.data() + c * Size() + RowStart(r), nx_,
                  out->data() + c * n + static_cast<std::int64_t>(r) * nx_);
    }
  }
}

void PaddedGrid::ZeroPads(double* data, int channels) const {
  for (int c = 0; c < channels; ++c) {
    double* plane = data + c * Size();
    for (int k = 0; k < pz_; ++k) {
      for (int j = 0; j < py_; ++j) {
        double* row = plane + static_cast<std::int64_t>(px_) * (j + static_cast<std::int64_t>(py_) * k);
        if (k == 0 || k == pz_ - 1 || j == 0 || j == py_ - 1) {
          std::fill_n(row, px_, 0.0);
        } else {
          row[0] = 0.0;
          row[px_ - 1] = 0.0;
        }
      }
    }
  }
}

void PaddedGrid::ReplicatePads(double* data, int channels) const {
  const std::int64_t slab = static_cast<std::int64_t>(px_) * py_;
  for (int c = 0; c < channels; ++c) {
    double* plane = data + c * Size();
    for (int k = 1; k <= nz_; ++k) {
      for (int j = 1; j <= ny_; ++j) {
        double* row = plane + px_ * (j + static_cast<std::int64_t>(py_) * k);
        row[0] = row[1];
        row[px_ - 1] = row[nx_];
      }
      double* s = plane + slab * k;
      std::copy_n(s + px_, px_, s);
      std::copy_n(s + static_cast<std::int64_t>(px_) * ny_, px_, s + static_cast<std::int64_t>(px_) * (py_ - 1));
    }
    std::copy_n(plane + slab, slab, plane);
    std::copy_n(plane + slab * nz_, slab, plane + slab * (pz_ - 1));
  }
}

void PaddedGrid::FoldPads(double* data, int channels) const {
  const std::int64_t slab = static_cast<std::int64_t>(px_) * py_;
  auto fold = [](double* from, double* to, std::int64_t count) {
    for (std::int64_t i = 0; i < count; ++i) {
      to[i] += from[i];
      from[i] = 0.0;
    }
  };
  for (int c = 0; c < channels; ++c) {
    double* plane = data + c * Size();
    fold(plane, plane + slab, slab);
    fold(plane + slab * (pz_ - 1), plane + slab * nz_, slab);
    for (int k = 1; k <= nz_; ++k) {
      double* s = plane + slab * k;
      fold(s, s + px_, px_);
      fold(s + static_cast<std::int64_t>(px_) * (py_ - 1), s + static_cast<std::int64_t>(px_) * ny_, px_);
      for (int j = 1; j <= ny_; ++j) {
        double* row = s + static_cast<std::int64_t>(px_) * j;
        fold(row, row + 1, 1);
        fold(row + px_ - 1, row + nx_, 1);
      }
    }
  }
}

void ConvForward(const PaddedGrid& grid, int num_labels, std::span<const double> kernel,
                 const double* in, double* out) {
  const auto mats = TapMatrices(num_labels, kernel);
  const auto taps = AllTaps();
  const int out_channels = 3 * num_labels;
  const std::int64_t size = grid.Size();
  const std::int64_t first = grid.First();
  const std::int64_t range = grid.Last() - first;
  const std::int64_t blocks = (range + kBlock - 1) / kBlock;
  std::vector<double> src_planes(in, in + size * num_labels);
  grid.ReplicatePads(src_planes.data(), num_labels);
  in = src_planes.data();
  std::fill_n(out, size * out_channels, 0.0);

#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < blocks; ++b) {
    const std::int64_t begin = first + b * kBlock;
    const std::int64_t len = std::min(kBlock, grid.Last() - begin);
    PlaneMap dst(out + begin, out_channels, len, Eigen::OuterStride<>(size));
    for (int t = 0; t < kTaps; ++t) {
      const std::int64_t off = grid.Offset(taps[t].dx, taps[t].dy, taps[t].dz);
      const ConstPlaneMap src(in + begin + off, num_labels, len, Eigen::OuterStride<>(size));
      dst.noalias() += mats[t] * src;
    }
  }
  grid.ZeroPads(out, out_channels);
}

void ConvAdjoint(const PaddedGrid& grid, int num_labels, std::span<const double> kernel,
                 const double* in, double* out) {
  const auto mats = TapMatrices(num_labels, kernel);
  const auto taps = AllTaps();
  const int in_channels = 3 * num_labels;
  const std::int64_t size = grid.Size();
  const std::int64_t blocks = (size + kBlock - 1) / kBlock;
  std::vector<double> src_planes(in, in + size * in_channels);
  grid.ZeroPads(src_planes.data(), in_channels);
  in = src_planes.data();
  std::fill_n(out, size * num_labels, 0.0);

  // Correlation over every cell, pads included; the pad sums are folded back
  // onto the border cells they replicate.
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < blocks; ++b) {
    const std::int64_t block_begin = b * kBlock;
    const std::int64_t block_end = std::min(size, block_begin + kBlock);
    for (int t = 0; t < kTaps; ++t) {
      const std::int64_t off = grid.Offset(taps[t].dx, taps[t].dy, taps[t].dz);
      const std::int64_t begin = std::max(block_begin, off);
      const std::int64_t end = std::min(block_end, size + off);
      if (end <= begin) continue;
      PlaneMap dst(out + begin, num_labels, end - begin, Eigen::OuterStride<>(size));
      const ConstPlaneMap src(in + begin - off, in_channels, end - begin, Eigen::OuterStride<>(size));
      dst.noalias() += mats[t].transpose() * src;
    }
  }
  grid.FoldPads(out, num_labels);
}

void ConvKernelGradient(const PaddedGrid& grid, int num_labels, const double* g,
                        const double* u, double scale, std::span<double> grad) {
  const auto taps = AllTaps();
  const int out_channels = 3 * num_labels;
  Require(grad.size() == static_cast<std::size_t>(out_channels * num_labels * kTaps),
          "kernel gradient: size mismatch");
  const std::int64_t size = grid.Size();
  const std::int64_t first = grid.First();
  const std::int64_t range = grid.Last() - first;
  const std::int64_t blocks = (range + kBlock - 1) / kBlock;
  std::vector<double> g_planes(g, g + size * out_channels);
  grid.ZeroPads(g_planes.data(), out_channels);
  g = g_planes.data();
  std::vector<double> u_planes(u, u + size * num_labels);
  grid.ReplicatePads(u_planes.data(), num_labels);
  u = u_planes.data();
  std::vector<std::vector<RowMatrix>> partial(static_cast<std::size_t>(blocks));

#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < blocks; ++b) {
    const std::int64_t begin = first + b * kBlock;
    const std::int64_t len = std::min(kBlock, grid.Last() - begin);
    const ConstPlaneMap gm(g + begin, out_channels, len, Eigen::OuterStride<>(size));
    auto& mats = partial[b];
    mats.resize(kTaps);
    for (int t = 0; t < kTaps; ++t) {
      const std::int64_t off = grid.Offset(taps[t].dx, taps[t].dy, taps[t].dz);
      const ConstPlaneMap um(u + begin + off, num_labels, len, Eigen::OuterStride<>(size));
      mats[t].noalias() = gm * um.transpose();
    }
  }
  // Fixed block order keeps the reduction independent of the thread count.
  for (const auto& mats : partial) {
    for (int t = 0; t < kTaps; ++t) {
      for (int o = 0; o < out_channels; ++o)
        for (int i = 0; i < num_labels; ++i)
          grad[(o * num_labels + i) * kTaps + t] += scale * mats[t](o, i);
    }
  }
}

}  // namespace semfuse::internal
