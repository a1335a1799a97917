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

#include <cmath>
#include <cstdint>
#include <vector>

#include "semfuse/errors.h"

namespace semfuse {

// Row-major 2D image; pixel (x, y) lives at data[x + width * y].
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    Require(width > 0 && height > 0, "image: size must be positive");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool Inside(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  T& operator()(int x, int y) { return data_[x + static_cast<std::size_t>(width_) * y]; }
  const T& operator()(int x, int y) const {
    return data_[x + static_cast<std::size_t>(width_) * y];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Image& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Depth along the optical axis in meters; non-positive or non-finite means no measurement.
using DepthMap = Image<double>;
using GrayImage = Image<double>;
using LabelImage = Image<std::int32_t>;
using MaskImage = Image<std::uint8_t>;

inline constexpr double kInvalidDepth = 0.0;
inline constexpr std::int32_t kUnknownLabel = -1;
inline constexpr std::int32_t kFreeLabel = 0;

inline bool IsValidDepth(double d) { return std::isfinite(d) && d > 0.0; }

}  // namespace semfuse
