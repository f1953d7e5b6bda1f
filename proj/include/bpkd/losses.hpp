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
#include <optional>
#include <vector>

#include <json.hpp>

#include "bpkd/edge_masks.hpp"
#include "bpkd/tensor.hpp"

namespace bpkd {

inline constexpr double kDefaultLambdaBody = 20.0;
inline constexpr double kDefaultLambdaEdge = 50.0;
inline constexpr double kDefaultAlpha = 2.0;
inline constexpr double kDefaultTemperature = 1.0;

struct LossWeights {
  double lambda_body = kDefaultLambdaBody;
  double lambda_edge = kDefaultLambdaEdge;
  std::vector<double> alpha;  ///< one entry per class
  double temperature = kDefaultTemperature;

  /// Defaults with alpha broadcast to `num_classes` entries.
  static LossWeights defaults(std::size_t num_classes);

  /// Throws ConfigError unless every weight is finite and non-negative,
  /// temperature is positive and alpha has `num_classes` entries.
  void validate(std::size_t num_classes) const;
};

struct KlTermTag {};
/// Per-class integrand p_c log(p_c / q_c) of the pixel KL, C x H' x W'.
using KlTermMap = Volume<KlTermTag>;

struct Decomposition {
  LogitTensor edge;  ///< z * M
  LogitTensor body;  ///< z * (1 - M)
};

struct EdgeLoss {
  double total = 0.0;
  std::vector<double> per_class;
  std::vector<std::size_t> pixel_counts;  ///< strictly positive mask cells per class
};

struct LossReport {
  double edge_loss = 0.0;
  double body_loss = 0.0;
  double total = 0.0;
  std::vector<double> per_class_edge;
  std::vector<std::size_t> edge_pixel_counts;
  LossWeights weights;
  std::optional<EdgeConfig> geometry;  ///< set by callers that built the masks
};

/// Elementwise z * m.
LogitTensor mask_logits(const LogitTensor& z, const SoftMaskStack& m);

/// Splits z into its edge and body parts; edge + body reconstructs z.
Decomposition decompose(const LogitTensor& z, const SoftMaskStack& edge);

/// Class-axis softmax KL integrand between teacher and student (both already
/// edge-masked). Summing over classes at a pixel gives the pixel KL, which is
/// non-negative; single class terms may be negative.
KlTermMap prm_kl_map(const LogitTensor& teacher_edge, const LogitTensor& student_edge);

/// Edge loss: masks both logit maps with `edge`, then weights each class's
/// KL terms by its soft mask and alpha_c / n_c. Classes with n_c == 0 add 0.
EdgeLoss edge_loss(const LogitTensor& teacher, const LogitTensor& student,
                   const SoftMaskStack& edge, const std::vector<double>& alpha);

/// Body loss: channel-wise (spatial softmax) KL of the body-masked logits at
/// the given temperature, scaled by T^2 / C.
double body_loss(const LogitTensor& teacher, const LogitTensor& student, const SoftMaskStack& edge,
                 double temperature);

/// Whole-view channel-wise distillation: body_loss with nothing masked out.
double cwd_baseline_loss(const LogitTensor& teacher, const LogitTensor& student,
                         double temperature);

/// lambda_body * body + lambda_edge * edge, components reported unweighted.
LossReport bpkd_loss(const LogitTensor& teacher, const LogitTensor& student,
                     const SoftMaskStack& edge, const LossWeights& weights);

/// d(total)/d(student logits). Teacher logits are constants.
GradientTensor bpkd_grad(const LogitTensor& teacher, const LogitTensor& student,
                         const SoftMaskStack& edge, const LossWeights& weights);

nlohmann::json to_json(const LossReport& report);

}  // namespace bpkd
