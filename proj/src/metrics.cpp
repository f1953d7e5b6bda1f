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

#include "bpkd/metrics.hpp"

#include <cstdio>

#include "bpkd/edge_masks.hpp"

namespace bpkd {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (auto v : counts) n += v;
  for (auto v : ignored_predictions) n += v;
  return n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.num_classes != num_classes) throw ShapeError("confusion matrices differ in class count");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  for (std::size_t i = 0; i < ignored_predictions.size(); ++i) {
    ignored_predictions[i] += other.ignored_predictions[i];
  }
  return *this;
}

ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& gt, std::size_t num_classes,
                          const BinaryMap* region) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw ShapeError("prediction is " + std::to_string(pred.height()) + "x" +
                     std::to_string(pred.width()) + " but ground truth is " +
                     std::to_string(gt.height()) + "x" + std::to_string(gt.width()));
  }
  if (region && (region->height() != gt.height() || region->width() != gt.width())) {
    throw ShapeError("region does not match the label map extents");
  }
  gt.check_classes(num_classes);
  pred.check_classes(num_classes);

  ConfusionMatrix cm(num_classes);
  const auto g = gt.values();
  const auto p = pred.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (gt.ignored(i)) continue;
    if (region && region->values()[i] == 0) continue;
    if (pred.ignored(i)) {
      ++cm.ignored_predictions[g[i]];
    } else {
      ++cm.counts[g[i] * num_classes + p[i]];
    }
  }
  return cm;
}

MetricsReport miou(const ConfusionMatrix& cm) {
  const std::size_t n = cm.num_classes;
  MetricsReport r;
  r.per_class_iou.assign(n, std::nullopt);
  r.per_class_acc.assign(n, std::nullopt);
  r.evaluated_pixels = cm.total();
  double iou_sum = 0.0, acc_sum = 0.0;
  std::size_t iou_n = 0, acc_n = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const std::uint64_t tp = cm.at(c, c);
    std::uint64_t row = cm.ignored_predictions[c], col = 0;
    for (std::size_t k = 0; k < n; ++k) {
      row += cm.at(c, k);
      col += cm.at(k, c);
    }
    const std::uint64_t fn = row - tp;
    const std::uint64_t fp = col - tp;
    if (tp + fp + fn > 0) {
      const double v = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
      r.per_class_iou[c] = v;
      iou_sum += v;
      ++iou_n;
    }
    if (row > 0) {
      const double v = static_cast<double>(tp) / static_cast<double>(row);
      r.per_class_acc[c] = v;
      acc_sum += v;
      ++acc_n;
    }
  }
  if (iou_n) r.miou = iou_sum / static_cast<double>(iou_n);
  if (acc_n) r.macc = acc_sum / static_cast<double>(acc_n);
  return r;
}

MetricsReport trimap_miou(const LabelMap& pred, const LabelMap& gt, std::size_t num_classes,
                          std::size_t band_width) {
  check_band_width(band_width);
  const BinaryMap region = trimap_region(gt, band_width);
  MetricsReport r = miou(confusion(pred, gt, num_classes, &region));
  r.band_width = band_width;
  return r;
}

namespace {

nlohmann::json optional_vector(const std::vector<std::optional<double>>& values) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& v : values) a.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  return a;
}

std::string csv_field(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", *v);
  return buf;
}

}  // namespace

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["per_class_iou"] = optional_vector(report.per_class_iou);
  j["per_class_acc"] = optional_vector(report.per_class_acc);
  j["miou"] = report.miou ? nlohmann::json(*report.miou) : nlohmann::json(nullptr);
  j["macc"] = report.macc ? nlohmann::json(*report.macc) : nlohmann::json(nullptr);
  j["evaluated_pixels"] = report.evaluated_pixels;
  j["band_width"] = report.band_width ? nlohmann::json(*report.band_width) : nlohmann::json(nullptr);
  return j;
}

std::string per_class_csv(const MetricsReport& report) {
  std::string out = "class,iou,acc\n";
  for (std::size_t c = 0; c < report.per_class_iou.size(); ++c) {
    out += std::to_string(c) + "," + csv_field(report.per_class_iou[c]) + "," +
           csv_field(report.per_class_acc[c]) + "\n";
  }
  return out;
}

}  // namespace bpkd
