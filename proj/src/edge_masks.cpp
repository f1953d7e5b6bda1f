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

#include "bpkd/edge_masks.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <utility>

#include "bpkd/kernels.hpp"
#include "bpkd/parallel.hpp"

namespace bpkd {
namespace {

template <bool Dilate>
BinaryMap morph(const BinaryMap& map, std::size_t width) {
  check_band_width(width);
  const auto& k = kernels::active();
  BinaryMap cur = map;
  BinaryMap next(map.height(), map.width());
  for (std::size_t it = 0; it < width / 2; ++it) {
    if constexpr (Dilate) {
      k.dilate3x3(cur.values().data(), next.values().data(), map.height(), map.width());
    } else {
      k.erode3x3(cur.values().data(), next.values().data(), map.height(), map.width());
    }
    std::swap(cur, next);
  }
  return cur;
}

BinaryMap band_of(const LabelMap& labels, Label class_id, std::size_t width) {
  BinaryMap indicator(labels.height(), labels.width());
  const auto values = labels.values();
  auto out = indicator.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    // ignore pixels are background for every class, including a class whose
    // id happens to equal the ignore value
    out[i] = values[i] == class_id && !labels.ignored(i) ? 1 : 0;
  }
  const BinaryMap grown = morph<true>(indicator, width);
  const BinaryMap shrunk = morph<false>(indicator, width);
  BinaryMap band(labels.height(), labels.width());
  auto b = band.values();
  for (std::size_t i = 0; i < b.size(); ++i) {
    b[i] = labels.ignored(i) ? 0 : static_cast<std::uint8_t>(grown.values()[i] - shrunk.values()[i]);
  }
  return band;
}

}  // namespace

void check_band_width(std::size_t width) {
  if (width % 2 == 0) {
    throw ConfigError("width must be odd (got " + std::to_string(width) + ")");
  }
  if (width < 3) {
    throw ConfigError("width must be >= 3 (got " + std::to_string(width) + ")");
  }
}

void EdgeConfig::validate() const {
  check_band_width(width);
  if (stride == 0) throw ConfigError("stride must be positive");
  if (num_classes == 0) throw ConfigError("num_classes must be positive");
}

BinaryMap dilate(const BinaryMap& map, std::size_t width) { return morph<true>(map, width); }

BinaryMap erode(const BinaryMap& map, std::size_t width) { return morph<false>(map, width); }

BinaryMap class_edge_band(const LabelMap& labels, Label class_id, std::size_t width,
                          std::size_t num_classes) {
  check_band_width(width);
  if (class_id >= num_classes) {
    throw ConfigError("class id " + std::to_string(class_id) + " out of range for " +
                      std::to_string(num_classes) + " classes");
  }
  return band_of(labels, class_id, width);
}

SoftMaskStack build_soft_edge_masks(const LabelMap& labels, const EdgeConfig& cfg) {
  cfg.validate();
  const std::size_t s = cfg.stride;
  if (labels.height() % s != 0 || labels.width() % s != 0) {
    throw ShapeError("label map " + std::to_string(labels.height()) + "x" +
                     std::to_string(labels.width()) + " is not divisible by stride " +
                     std::to_string(s));
  }
  labels.check_classes(cfg.num_classes);

  const std::size_t out_h = labels.height() / s;
  const std::size_t out_w = labels.width() / s;
  const double cell = static_cast<double>(s * s);
  SoftMaskStack masks(cfg.num_classes, out_h, out_w);
  parallel_for(cfg.num_classes, [&](std::size_t c) {
    const BinaryMap band = band_of(labels, static_cast<Label>(c), cfg.width);
    auto plane = masks.plane(c);
    for (std::size_t r = 0; r < out_h; ++r) {
      for (std::size_t q = 0; q < out_w; ++q) {
        std::size_t hits = 0;
        for (std::size_t dr = 0; dr < s; ++dr) {
          for (std::size_t dq = 0; dq < s; ++dq) hits += band(r * s + dr, q * s + dq);
        }
        plane[r * out_w + q] = static_cast<double>(hits) / cell;
      }
    }
  });
  return masks;
}

SoftMaskStack body_masks(const SoftMaskStack& edge) {
  SoftMaskStack body(edge.channels(), edge.height(), edge.width());
  kernels::active().complement(edge.data().data(), body.data().data(), edge.size());
  return body;
}

BinaryMap trimap_region(const LabelMap& labels, std::size_t width) {
  check_band_width(width);
  std::set<Label> present;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels.ignored(i)) present.insert(labels.values()[i]);
  }
  BinaryMap region(labels.height(), labels.width());
  for (Label c : present) {
    const BinaryMap band = band_of(labels, c, width);
    auto out = region.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] |= band.values()[i];
  }
  return region;
}

LabelMap labels_from_logits(const LogitTensor& logits, Label ignore_value) {
  if (logits.channels() == 0) throw ShapeError("logits have no classes");
  if (logits.channels() > ignore_value) {
    throw ConfigError("class count " + std::to_string(logits.channels()) +
                      " collides with ignore value " + std::to_string(ignore_value));
  }
  const std::size_t n = logits.plane_size();
  std::vector<Label> values(n, 0);
  std::vector<double> best(logits.plane(0).begin(), logits.plane(0).end());
  for (std::size_t c = 1; c < logits.channels(); ++c) {
    const auto plane = logits.plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      if (plane[i] > best[i]) {
        best[i] = plane[i];
        values[i] = static_cast<Label>(c);
      }
    }
  }
  return LabelMap(logits.height(), logits.width(), std::move(values), ignore_value);
}

}  // namespace bpkd
