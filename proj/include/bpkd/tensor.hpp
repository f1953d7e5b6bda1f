// Copyright 2026 The BPKD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bpkd/error.hpp"

namespace bpkd {

using Label = std::uint32_t;
inline constexpr Label kDefaultIgnoreValue = 255;

/// Integer class-ID image. Pixels equal to ignore_value take part in no computation.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(std::size_t height, std::size_t width, Label fill = 0,
           Label ignore_value = kDefaultIgnoreValue);
  LabelMap(std::size_t height, std::size_t width, std::vector<Label> values,
           Label ignore_value = kDefaultIgnoreValue);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  Label ignore_value() const { return ignore_value_; }

  Label operator()(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
  Label& operator()(std::size_t row, std::size_t col) { return values_[row * width_ + col]; }
  std::span<const Label> values() const { return values_; }
  std::span<Label> values() { return values_; }

  bool ignored(std::size_t index) const { return values_[index] == ignore_value_; }

  /// Throws ValidationError if any non-ignored value is >= num_classes.
  void check_classes(std::size_t num_classes) const;

  bool operator==(const LabelMap&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  Label ignore_value_ = kDefaultIgnoreValue;
  std::vector<Label> values_;
};

/// Full-resolution {0,1} image.
class BinaryMap {
 public:
  BinaryMap() = default;
  BinaryMap(std::size_t height, std::size_t width, std::uint8_t fill = 0);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return values_.size(); }

  std::uint8_t operator()(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
  std::uint8_t& operator()(std::size_t row, std::size_t col) { return values_[row * width_ + col]; }
  std::span<const std::uint8_t> values() const { return values_; }
  std::span<std::uint8_t> values() { return values_; }

  std::size_t count() const;

  bool operator==(const BinaryMap&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> values_;
};

/// Channel-major C x H x W block of doubles. The tag keeps logits, masks and
/// gradients from being passed for one another.
template <class Tag>
class Volume {
 public:
  Volume() = default;
  Volume(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0)
      : channels_(channels), height_(height), width_(width),
        data_(channels * height * width, fill) {}
  Volume(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> data)
      : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != channels * height * width) {
      throw ShapeError("volume data holds " + std::to_string(data_.size()) + " values, expected " +
                       std::to_string(channels * height * width));
    }
  }

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t plane_size() const { return height_ * width_; }
  std::size_t size() const { return data_.size(); }

  double operator()(std::size_t c, std::size_t row, std::size_t col) const {
    return data_[(c * height_ + row) * width_ + col];
  }
  double& operator()(std::size_t c, std::size_t row, std::size_t col) {
    return data_[(c * height_ + row) * width_ + col];
  }

  std::span<const double> plane(std::size_t c) const {
    return std::span<const double>(data_).subspan(c * plane_size(), plane_size());
  }
  std::span<double> plane(std::size_t c) {
    return std::span<double>(data_).subspan(c * plane_size(), plane_size());
  }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  template <class Other>
  bool same_shape(const Volume<Other>& other) const {
    return channels_ == other.channels() && height_ == other.height() && width_ == other.width();
  }

  bool operator==(const Volume&) const = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

struct LogitTag {};
struct MaskTag {};
struct GradientTag {};

/// Pre-softmax class scores, C x H' x W'.
using LogitTensor = Volume<LogitTag>;
/// Per-class soft masks with values in [0,1].
using SoftMaskStack = Volume<MaskTag>;
/// d(loss)/d(student logits).
using GradientTensor = Volume<GradientTag>;

enum class DType { kFloat32, kFloat64 };

/// Row-major tensor of 1 to 4 axes, always held in 64-bit.
struct DenseTensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  DType source_dtype = DType::kFloat64;

  std::size_t rank() const { return shape.size(); }
  /// Throws ShapeError unless 1 <= rank <= 4 and product(shape) == values.size().
  void check() const;
  /// Bitwise equality of shape and values; source dtype is ignored.
  bool bitwise_equal(const DenseTensor& other) const;
};

std::string shape_string(std::span<const std::size_t> shape);

template <class Tag>
DenseTensor to_dense(const Volume<Tag>& v) {
  DenseTensor t;
  t.shape = {v.channels(), v.height(), v.width()};
  t.values.assign(v.data().begin(), v.data().end());
  return t;
}

/// Requires a 3-D tensor (C,H,W).
LogitTensor logits_from_dense(const DenseTensor& t);
/// Requires a 3-D tensor with every value in [0,1].
SoftMaskStack masks_from_dense(const DenseTensor& t);

/// Throws ValidationError if any value lies outside [0,1].
void check_unit_range(const SoftMaskStack& masks);

}  // namespace bpkd
