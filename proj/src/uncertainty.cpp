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

#include "bpkd/uncertainty.hpp"

#include <algorithm>
#include <cmath>

#include "bpkd/edge_masks.hpp"
#include "bpkd/kernels.hpp"

namespace bpkd {

std::vector<std::uint8_t> EntropyMap::certainty_pixels() const {
  std::vector<std::uint8_t> px(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double certainty = std::clamp(1.0 - values[i], 0.0, 1.0);
    px[i] = static_cast<std::uint8_t>(std::lround(255.0 * certainty));
  }
  return px;
}

DenseTensor EntropyMap::to_dense() const {
  DenseTensor t;
  t.shape = {height, width};
  t.values = values;
  return t;
}

EntropyMap entropy_map(const DenseTensor& features) {
  features.check();
  if (features.rank() != 3) {
    throw ShapeError("features must be (C,H,W), got shape " + shape_string(features.shape));
  }
  const std::size_t channels = features.shape[0];
  if (channels < 2) throw ShapeError("entropy needs at least 2 channels");
  EntropyMap out;
  out.height = features.shape[1];
  out.width = features.shape[2];
  const std::size_t hw = out.height * out.width;
  out.values.resize(hw);
  std::vector<double> lse(hw);
  const auto& k = kernels::active();
  k.pixel_logsumexp(features.values.data(), channels, hw, hw, lse.data());
  k.pixel_entropy(features.values.data(), lse.data(), channels, hw, hw, out.values.data());
  const double norm = std::log(static_cast<double>(channels));
  // rounding can push a near-uniform pixel a hair outside [0,1]
  for (double& v : out.values) v = std::clamp(v / norm, 0.0, 1.0);
  return out;
}

CorrelationReport edge_entropy_accuracy(const EntropyMap& entropy, const LabelMap& pred,
                                        const LabelMap& gt, std::size_t band_width,
                                        std::size_t bins) {
  if (bins == 0) throw ConfigError("bins must be positive");
  if (pred.height() != gt.height() || pred.width() != gt.width() ||
      entropy.height != gt.height() || entropy.width != gt.width()) {
    throw ShapeError("entropy map, prediction and ground truth must share extents");
  }
  const BinaryMap band = trimap_region(gt, band_width);

  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!band.values()[i] || gt.ignored(i)) continue;
    xs.push_back(entropy.values[i]);
    ys.push_back(pred.values()[i] == gt.values()[i] ? 1.0 : 0.0);
  }
  if (xs.empty()) throw DegenerateInputError("no edge pixels inside the band");

  CorrelationReport r;
  r.n_edge_pixels = xs.size();
  r.bin_edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    r.bin_edges[b] = static_cast<double>(b) / static_cast<double>(bins);
  }
  std::vector<double> correct(bins, 0.0);
  r.bin_counts.assign(bins, 0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto b = std::min(bins - 1, static_cast<std::size_t>(xs[i] * static_cast<double>(bins)));
    ++r.bin_counts[b];
    correct[b] += ys[i];
  }
  r.bin_accuracy.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    if (r.bin_counts[b]) r.bin_accuracy[b] = correct[b] / static_cast<double>(r.bin_counts[b]);
  }

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0) {
    throw DegenerateInputError("entropy is constant over the band; correlation undefined");
  }
  if (syy > 0.0) r.pearson_r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return r;
}

nlohmann::json to_json(const CorrelationReport& report) {
  nlohmann::json j;
  j["pearson_r"] = report.pearson_r ? nlohmann::json(*report.pearson_r) : nlohmann::json(nullptr);
  j["bin_edges"] = report.bin_edges;
  nlohmann::json acc = nlohmann::json::array();
  for (const auto& a : report.bin_accuracy) acc.push_back(a ? nlohmann::json(*a) : nlohmann::json(nullptr));
  j["bin_accuracy"] = acc;
  j["bin_counts"] = report.bin_counts;
  j["n_edge_pixels"] = report.n_edge_pixels;
  return j;
}

}  // namespace bpkd
