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

#include <json.hpp>

#include "bpkd/losses.hpp"

namespace bpkd {

inline constexpr double kDefaultFiniteDifferenceStep = 1e-5;
inline constexpr double kGradientRelTolerance = 1e-4;
/// Entries smaller than this fraction of the largest gradient magnitude (or of
/// 1.0, whichever is larger) are compared against that floor instead of their
/// own size, where finite-difference rounding noise dominates.
inline constexpr double kGradientRelFloor = 1e-4;

struct GradCheckReport {
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  double step = kDefaultFiniteDifferenceStep;
  double max_abs_analytic = 0.0;
  double max_abs_numeric = 0.0;

  bool passed(double tolerance = kGradientRelTolerance) const { return max_rel_error < tolerance; }
};

/// Compares `analytic` with central differences of bpkd_loss(...).total taken
/// over every student logit. Relative error per entry is
/// |a - n| / max(|a|, |n|, f) with f = kGradientRelFloor * max(1, max|a|, max|n|).
GradCheckReport compare_gradient(const GradientTensor& analytic, const LogitTensor& teacher,
                                 const LogitTensor& student, const SoftMaskStack& edge,
                                 const LossWeights& weights,
                                 double step = kDefaultFiniteDifferenceStep);

nlohmann::json to_json(const GradCheckReport& report);

}  // namespace bpkd
