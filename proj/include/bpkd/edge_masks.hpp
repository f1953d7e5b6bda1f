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

#include "bpkd/tensor.hpp"

namespace bpkd {

inline constexpr std::size_t kDefaultEdgeWidth = 7;
inline constexpr std::size_t kDefaultStride = 8;

/// Edge band geometry. `width` is the side of the square structuring element
/// (odd, >= 3); `stride` is the network output stride; masks come out at
/// (H/stride, W/stride).
struct EdgeConfig {
  std::size_t width = kDefaultEdgeWidth;
  std::size_t stride = kDefaultStride;
  std::size_t num_classes = 0;

  /// Throws ConfigError on an even/short width, zero stride or zero classes.
  void validate() const;
};

/// Throws ConfigError("width must be odd") / (">= 3") for unusable band widths.
void check_band_width(std::size_t width);

/// Square dilation/erosion of side `width`, run as width/2 passes of the 3x3
/// element. Borders replicate, so a full image stays full under erosion.
BinaryMap dilate(const BinaryMap& map, std::size_t width);
BinaryMap erode(const BinaryMap& map, std::size_t width);

/// dilate(B) - erode(B) for the indicator B of `class_id`. Ignore pixels are
/// background in B and are cleared in the result.
BinaryMap class_edge_band(const LabelMap& labels, Label class_id, std::size_t width,
                          std::size_t num_classes);

/// Per-class bands average-pooled over non-overlapping stride x stride cells.
/// Each value is the fraction of band pixels in its cell.
SoftMaskStack build_soft_edge_masks(const LabelMap& labels, const EdgeConfig& cfg);

/// 1 - M elementwise.
SoftMaskStack body_masks(const SoftMaskStack& edge);

/// Union of the bands of every class present in `labels`, with ignore pixels
/// excluded. This is the region Trimap metrics are evaluated on.
BinaryMap trimap_region(const LabelMap& labels, std::size_t width);

/// Per-pixel argmax over classes, ties to the lowest index. The result has the
/// logit resolution, so masks built from it use stride 1.
LabelMap labels_from_logits(const LogitTensor& logits, Label ignore_value = kDefaultIgnoreValue);

}  // namespace bpkd
