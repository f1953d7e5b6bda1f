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

#include "bpkd/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bpkd/kernels.hpp"
#include "bpkd/parallel.hpp"

namespace bpkd {
namespace {

constexpr std::size_t kRowsPerBlock = 16;

template <class A, class B>
void require_same_shape(const Volume<A>& a, const Volume<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape (" + std::to_string(a.channels()) + "," +
                     std::to_string(a.height()) + "," + std::to_string(a.width()) + ") vs (" +
                     std::to_string(b.channels()) + "," + std::to_string(b.height()) + "," +
                     std::to_string(b.width()) + ")");
  }
}

void require_class_axis(const LogitTensor& z) {
  if (z.channels() < 2) {
    throw ShapeError("class-axis KL needs at least 2 classes, got " +
                     std::to_string(z.channels()));
  }
}

// Applies fn(offset, count) to fixed row blocks of a plane. Blocks are a pure
// function of the extents, so results never depend on the thread count.
template <class Fn>
void for_row_blocks(std::size_t height, std::size_t width, Fn&& fn) {
  const std::size_t blocks = (height + kRowsPerBlock - 1) / kRowsPerBlock;
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t r0 = b * kRowsPerBlock;
    const std::size_t r1 = std::min(height, r0 + kRowsPerBlock);
    fn(r0 * width, (r1 - r0) * width);
  });
}

struct PixelLse {
  std::vector<double> teacher;
  std::vector<double> student;
};

PixelLse pixel_lse(const LogitTensor& t, const LogitTensor& s) {
  const auto& k = kernels::active();
  const std::size_t hw = t.plane_size();
  PixelLse lse{std::vector<double>(hw), std::vector<double>(hw)};
  for_row_blocks(t.height(), t.width(), [&](std::size_t off, std::size_t n) {
    k.pixel_logsumexp(t.data().data() + off, t.channels(), hw, n, lse.teacher.data() + off);
    k.pixel_logsumexp(s.data().data() + off, s.channels(), hw, n, lse.student.data() + off);
  });
  return lse;
}

std::vector<std::size_t> positive_counts(const SoftMaskStack& m) {
  std::vector<std::size_t> counts(m.channels(), 0);
  for (std::size_t c = 0; c < m.channels(); ++c) {
    for (double v : m.plane(c)) counts[c] += v > 0.0 ? 1 : 0;
  }
  return counts;
}

void check_alpha(const std::vector<double>& alpha, std::size_t num_classes) {
  if (alpha.size() != num_classes) {
    throw ConfigError("alpha has " + std::to_string(alpha.size()) + " entries for " +
                      std::to_string(num_classes) + " classes");
  }
  for (double a : alpha) {
    if (!std::isfinite(a) || a < 0.0) throw ConfigError("alpha entries must be finite and >= 0");
  }
}

void check_temperature(double temperature) {
  if (!std::isfinite(temperature) || temperature <= 0.0) {
    throw ConfigError("temperature must be positive");
  }
}

}  // namespace

LossWeights LossWeights::defaults(std::size_t num_classes) {
  LossWeights w;
  w.alpha.assign(num_classes, kDefaultAlpha);
  return w;
}

void LossWeights::validate(std::size_t num_classes) const {
  if (!std::isfinite(lambda_body) || lambda_body < 0.0) {
    throw ConfigError("lambda_body must be finite and >= 0");
  }
  if (!std::isfinite(lambda_edge) || lambda_edge < 0.0) {
    throw ConfigError("lambda_edge must be finite and >= 0");
  }
  check_temperature(temperature);
  check_alpha(alpha, num_classes);
}

LogitTensor mask_logits(const LogitTensor& z, const SoftMaskStack& m) {
  require_same_shape(z, m, "mask_logits");
  LogitTensor out(z.channels(), z.height(), z.width());
  kernels::active().multiply(z.data().data(), m.data().data(), out.data().data(), z.size());
  return out;
}

Decomposition decompose(const LogitTensor& z, const SoftMaskStack& edge) {
  require_same_shape(z, edge, "decompose");
  return {mask_logits(z, edge), mask_logits(z, body_masks(edge))};
}

KlTermMap prm_kl_map(const LogitTensor& teacher_edge, const LogitTensor& student_edge) {
  require_same_shape(teacher_edge, student_edge, "prm_kl_map");
  require_class_axis(teacher_edge);
  const auto& k = kernels::active();
  const std::size_t hw = teacher_edge.plane_size();
  const PixelLse lse = pixel_lse(teacher_edge, student_edge);
  KlTermMap terms(teacher_edge.channels(), teacher_edge.height(), teacher_edge.width());
  for_row_blocks(teacher_edge.height(), teacher_edge.width(), [&](std::size_t off, std::size_t n) {
    k.pixel_kl_terms(teacher_edge.data().data() + off, student_edge.data().data() + off,
                     lse.teacher.data() + off, lse.student.data() + off, teacher_edge.channels(),
                     hw, n, terms.data().data() + off);
  });
  return terms;
}

EdgeLoss edge_loss(const LogitTensor& teacher, const LogitTensor& student,
                   const SoftMaskStack& edge, const std::vector<double>& alpha) {
  require_same_shape(teacher, student, "edge_loss");
  require_same_shape(teacher, edge, "edge_loss mask");
  check_alpha(alpha, teacher.channels());

  const KlTermMap terms = prm_kl_map(mask_logits(teacher, edge), mask_logits(student, edge));
  const auto& k = kernels::active();
  EdgeLoss out;
  out.pixel_counts = positive_counts(edge);
  out.per_class.assign(teacher.channels(), 0.0);
  for (std::size_t c = 0; c < teacher.channels(); ++c) {
    if (out.pixel_counts[c] == 0) continue;
    const double sum = k.dot(terms.plane(c).data(), edge.plane(c).data(), edge.plane_size());
    out.per_class[c] = alpha[c] / static_cast<double>(out.pixel_counts[c]) * sum;
  }
  for (double v : out.per_class) out.total += v;
  return out;
}

double body_loss(const LogitTensor& teacher, const LogitTensor& student, const SoftMaskStack& edge,
                 double temperature) {
  require_same_shape(teacher, student, "body_loss");
  require_same_shape(teacher, edge, "body_loss mask");
  check_temperature(temperature);
  if (teacher.channels() == 0 || teacher.plane_size() == 0) throw ShapeError("empty logits");

  const SoftMaskStack body = body_masks(edge);
  const LogitTensor t = mask_logits(teacher, body);
  const LogitTensor s = mask_logits(student, body);
  const auto& k = kernels::active();
  const std::size_t hw = t.plane_size();
  std::vector<double> per_class(t.channels());
  parallel_for(t.channels(), [&](std::size_t c) {
    const double* tp = t.plane(c).data();
    const double* sp = s.plane(c).data();
    const double lse_t = k.scaled_logsumexp(tp, hw, temperature);
    const double lse_s = k.scaled_logsumexp(sp, hw, temperature);
    per_class[c] = k.scaled_kl_sum(tp, sp, lse_t, lse_s, temperature, hw);
  });
  double sum = 0.0;
  for (double v : per_class) sum += v;
  return temperature * temperature / static_cast<double>(t.channels()) * sum;
}

double cwd_baseline_loss(const LogitTensor& teacher, const LogitTensor& student,
                         double temperature) {
  const SoftMaskStack none(teacher.channels(), teacher.height(), teacher.width(), 0.0);
  return body_loss(teacher, student, none, temperature);
}

LossReport bpkd_loss(const LogitTensor& teacher, const LogitTensor& student,
                     const SoftMaskStack& edge, const LossWeights& weights) {
  require_same_shape(teacher, student, "bpkd_loss");
  require_same_shape(teacher, edge, "bpkd_loss mask");
  require_class_axis(teacher);
  weights.validate(teacher.channels());

  const EdgeLoss e = edge_loss(teacher, student, edge, weights.alpha);
  LossReport r;
  r.edge_loss = e.total;
  r.body_loss = body_loss(teacher, student, edge, weights.temperature);
  r.total = weights.lambda_body * r.body_loss + weights.lambda_edge * r.edge_loss;
  r.per_class_edge = e.per_class;
  r.edge_pixel_counts = e.pixel_counts;
  r.weights = weights;
  return r;
}

GradientTensor bpkd_grad(const LogitTensor& teacher, const LogitTensor& student,
                         const SoftMaskStack& edge, const LossWeights& weights) {
  require_same_shape(teacher, student, "bpkd_grad");
  require_same_shape(teacher, edge, "bpkd_grad mask");
  require_class_axis(teacher);
  weights.validate(teacher.channels());

  const auto& k = kernels::active();
  const std::size_t channels = teacher.channels();
  const std::size_t hw = teacher.plane_size();

  // edge term: per-pixel weights alpha_c * M_c / n_c on the masked-logit softmaxes
  const LogitTensor te = mask_logits(teacher, edge);
  const LogitTensor se = mask_logits(student, edge);
  const std::vector<std::size_t> counts = positive_counts(edge);
  SoftMaskStack pixel_weights(channels, teacher.height(), teacher.width());
  for (std::size_t c = 0; c < channels; ++c) {
    if (counts[c] == 0) continue;
    const double scale = weights.alpha[c] / static_cast<double>(counts[c]);
    auto w = pixel_weights.plane(c);
    const auto m = edge.plane(c);
    for (std::size_t i = 0; i < hw; ++i) w[i] = scale * m[i];
  }
  const PixelLse lse = pixel_lse(te, se);
  GradientTensor edge_grad(channels, teacher.height(), teacher.width());
  for_row_blocks(teacher.height(), teacher.width(), [&](std::size_t off, std::size_t n) {
    k.pixel_weighted_kl_grad(te.data().data() + off, se.data().data() + off,
                             lse.teacher.data() + off, lse.student.data() + off,
                             pixel_weights.data().data() + off, channels, hw, n,
                             edge_grad.data().data() + off);
  });

  // body term: (T / C) (q - p) per class plane of the body-masked logits
  const SoftMaskStack body = body_masks(edge);
  const LogitTensor tb = mask_logits(teacher, body);
  const LogitTensor sb = mask_logits(student, body);
  const double t = weights.temperature;
  GradientTensor body_grad(channels, teacher.height(), teacher.width());
  parallel_for(channels, [&](std::size_t c) {
    const double* tp = tb.plane(c).data();
    const double* sp = sb.plane(c).data();
    const double lse_t = k.scaled_logsumexp(tp, hw, t);
    const double lse_s = k.scaled_logsumexp(sp, hw, t);
    k.scaled_softmax_diff(tp, sp, lse_t, lse_s, t, t / static_cast<double>(channels), hw,
                          body_grad.plane(c).data());
  });

  // chain through the masks, then apply the lambdas
  k.multiply(edge_grad.data().data(), edge.data().data(), edge_grad.data().data(), edge.size());
  k.multiply(body_grad.data().data(), body.data().data(), body_grad.data().data(), body.size());
  GradientTensor grad(channels, teacher.height(), teacher.width());
  auto g = grad.data();
  const auto ge = edge_grad.data();
  const auto gb = body_grad.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = weights.lambda_edge * ge[i] + weights.lambda_body * gb[i];
  }
  return grad;
}

nlohmann::json to_json(const LossReport& report) {
  nlohmann::json j;
  j["edge_loss"] = report.edge_loss;
  j["body_loss"] = report.body_loss;
  j["total"] = report.total;
  j["per_class_edge"] = report.per_class_edge;
  j["edge_pixel_counts"] = report.edge_pixel_counts;
  nlohmann::json cfg;
  cfg["lambda_body"] = report.weights.lambda_body;
  cfg["lambda_edge"] = report.weights.lambda_edge;
  cfg["alpha"] = report.weights.alpha;
  cfg["temperature"] = report.weights.temperature;
  if (report.geometry) {
    cfg["width"] = report.geometry->width;
    cfg["stride"] = report.geometry->stride;
    cfg["num_classes"] = report.geometry->num_classes;
  }
  j["config"] = cfg;
  return j;
}

}  // namespace bpkd
