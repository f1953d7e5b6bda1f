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

#include "bpkd/tensor.hpp"

#include <algorithm>
#include <cstring>
#include <functional>
#include <numeric>

namespace bpkd {

LabelMap::LabelMap(std::size_t height, std::size_t width, Label fill, Label ignore_value)
    : LabelMap(height, width, std::vector<Label>(height * width, fill), ignore_value) {}

LabelMap::LabelMap(std::size_t height, std::size_t width, std::vector<Label> values,
                   Label ignore_value)
    : height_(height), width_(width), ignore_value_(ignore_value), values_(std::move(values)) {
  if (height == 0 || width == 0) {
    throw ShapeError("label map must be at least 1x1");
  }
  if (values_.size() != height * width) {
    throw ShapeError("label map holds " + std::to_string(values_.size()) + " values, expected " +
                     std::to_string(height * width));
  }
}

void LabelMap::check_classes(std::size_t num_classes) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] != ignore_value_ && values_[i] >= num_classes) {
      throw ValidationError("label " + std::to_string(values_[i]) + " at pixel " +
                            std::to_string(i) + " is not below class count " +
                            std::to_string(num_classes) + " and is not the ignore value " +
                            std::to_string(ignore_value_));
    }
  }
}

BinaryMap::BinaryMap(std::size_t height, std::size_t width, std::uint8_t fill)
    : height_(height), width_(width), values_(height * width, fill) {}

std::size_t BinaryMap::count() const {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

void DenseTensor::check() const {
  if (shape.empty() || shape.size() > 4) {
    throw ShapeError("tensor rank " + std::to_string(shape.size()) + " outside 1..4");
  }
  const std::size_t n =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  if (n != values.size()) {
    throw ShapeError("shape " + shape_string(shape) + " declares " + std::to_string(n) +
                     " values but " + std::to_string(values.size()) + " are stored");
  }
}

bool DenseTensor::bitwise_equal(const DenseTensor& other) const {
  return shape == other.shape && values.size() == other.values.size() &&
         (values.empty() ||
          std::memcmp(values.data(), other.values.data(), values.size() * sizeof(double)) == 0);
}

std::string shape_string(std::span<const std::size_t> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

LogitTensor logits_from_dense(const DenseTensor& t) {
  t.check();
  if (t.rank() != 3) {
    throw ShapeError("expected a (C,H,W) tensor, got shape " + shape_string(t.shape));
  }
  return LogitTensor(t.shape[0], t.shape[1], t.shape[2], t.values);
}

SoftMaskStack masks_from_dense(const DenseTensor& t) {
  t.check();
  if (t.rank() != 3) {
    throw ShapeError("expected a (C,H,W) mask stack, got shape " + shape_string(t.shape));
  }
  SoftMaskStack m(t.shape[0], t.shape[1], t.shape[2], t.values);
  check_unit_range(m);
  return m;
}

void check_unit_range(const SoftMaskStack& masks) {
  const auto data = masks.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!(data[i] >= 0.0 && data[i] <= 1.0)) {
      throw ValidationError("mask value " + std::to_string(data[i]) + " at index " +
                            std::to_string(i) + " outside [0,1]");
    }
  }
}

}  // namespace bpkd
