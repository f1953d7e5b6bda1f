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
#include <optional>
#include <vector>

#include <json.hpp>

#include "bpkd/tensor.hpp"

namespace bpkd {

/// Per-pixel Shannon entropy of the channel softmax, divided by ln C (so in [0,1]).
struct EntropyMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  /// 8-bit certainty image: round(255 * (1 - entropy)).
  std::vector<std::uint8_t> certainty_pixels() const;
  DenseTensor to_dense() const;
};

struct CorrelationReport {
  /// Point-biserial Pearson r between entropy and pixel correctness. Empty when
  /// every band pixel is correct (or every one wrong): the correctness
  /// indicator then has no variance.
  std::optional<double> pearson_r;
  std::vector<double> bin_edges;                    ///< bins + 1 edges over [0,1]
  std::vector<std::optional<double>> bin_accuracy;  ///< nullopt for empty bins
  std::vector<std::uint64_t> bin_counts;
  std::uint64_t n_edge_pixels = 0;
};

/// `features` must be (C,H,W) with C >= 2.
EntropyMap entropy_map(const DenseTensor& features);

/// Relates entropy to prediction correctness inside trimap_region(gt, band_width).
/// Throws DegenerateInputError when the band is empty or the entropy values
/// in it are all equal.
CorrelationReport edge_entropy_accuracy(const EntropyMap& entropy, const LabelMap& pred,
                                        const LabelMap& gt, std::size_t band_width,
                                        std::size_t bins);

nlohmann::json to_json(const CorrelationReport& report);

}  // namespace bpkd
