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

#include "bpkd/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace bpkd {

GradCheckReport compare_gradient(const GradientTensor& analytic, const LogitTensor& teacher,
                                 const LogitTensor& student, const SoftMaskStack& edge,
                                 const LossWeights& weights, double step) {
  if (!analytic.same_shape(student)) throw ShapeError("gradient and student logits differ in shape");
  if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
  GradCheckReport r;
  r.step = step;
  LogitTensor probe = student;
  auto x = probe.data();
  const auto a = analytic.data();
  std::vector<double> numeric(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = bpkd_loss(teacher, probe, edge, weights).total;
    x[i] = saved - step;
    const double down = bpkd_loss(teacher, probe, edge, weights).total;
    x[i] = saved;
    numeric[i] = (up - down) / (2.0 * step);
    r.max_abs_analytic = std::max(r.max_abs_analytic, std::abs(a[i]));
    r.max_abs_numeric = std::max(r.max_abs_numeric, std::abs(numeric[i]));
  }
  const double floor =
      kGradientRelFloor * std::max({1.0, r.max_abs_analytic, r.max_abs_numeric});
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double abs_err = std::abs(a[i] - numeric[i]);
    const double rel_err = abs_err / std::max({std::abs(a[i]), std::abs(numeric[i]), floor});
    r.max_abs_error = std::max(r.max_abs_error, abs_err);
    if (rel_err > r.max_rel_error) {
      r.max_rel_error = rel_err;
      r.worst_index = i;
    }
  }
  r.checked = x.size();
  return r;
}

nlohmann::json to_json(const GradCheckReport& report) {
  nlohmann::json j;
  j["max_abs_error"] = report.max_abs_error;
  j["max_rel_error"] = report.max_rel_error;
  j["worst_index"] = report.worst_index;
  j["checked"] = report.checked;
  j["step"] = report.step;
  j["max_abs_analytic"] = report.max_abs_analytic;
  j["max_abs_numeric"] = report.max_abs_numeric;
  j["tolerance"] = kGradientRelTolerance;
  j["passed"] = report.passed();
  return j;
}

}  // namespace bpkd
