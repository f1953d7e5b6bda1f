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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpkd/tensor.hpp"

namespace bpkd {

/// counts[g][p] = pixels with ground truth g predicted p. Predictions equal to
/// the ignore value are tallied separately in ignored_predictions[g]: they are
/// misses for class g and false positives for nobody.
struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<std::uint64_t> counts;               ///< row-major C x C
  std::vector<std::uint64_t> ignored_predictions;  ///< per gt class

  explicit ConfusionMatrix(std::size_t classes = 0)
      : num_classes(classes), counts(classes * classes, 0), ignored_predictions(classes, 0) {}

  std::uint64_t at(std::size_t gt, std::size_t pred) const { return counts[gt * num_classes + pred]; }
  std::uint64_t total() const;
  /// Entrywise sum; both matrices must have the same class count.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricsReport {
  std::vector<std::optional<double>> per_class_iou;  ///< nullopt: class absent everywhere
  std::vector<std::optional<double>> per_class_acc;
  std::optional<double> miou;
  std::optional<double> macc;
  std::uint64_t evaluated_pixels = 0;
  std::optional<std::size_t> band_width;
};

/// Tallies pixels whose gt is not ignored and, when `region` is given, lie in it.
ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& gt, std::size_t num_classes,
                          const BinaryMap* region = nullptr);

/// IoU = TP / (TP + FP + FN), accuracy = TP / (TP + FN); classes with a zero
/// denominator are undefined and left out of the means.
MetricsReport miou(const ConfusionMatrix& cm);

/// Metrics restricted to trimap_region(gt, band_width).
MetricsReport trimap_miou(const LabelMap& pred, const LabelMap& gt, std::size_t num_classes,
                          std::size_t band_width);

nlohmann::json to_json(const MetricsReport& report);

/// "class,iou,acc" CSV, one row per class; undefined values are empty fields.
std::string per_class_csv(const MetricsReport& report);

}  // namespace bpkd
