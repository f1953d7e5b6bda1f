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

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "bpkd/edge_masks.hpp"
#include "bpkd/gradcheck.hpp"
#include "bpkd/losses.hpp"
#include "oracle.hpp"

using namespace bpkd;

namespace {

LogitTensor pixel(std::vector<double> v) {
  const std::size_t c = v.size();
  return LogitTensor(c, 1, 1, std::move(v));
}

LossWeights weights(double lb, double le, std::vector<double> alpha, double t = 1.0) {
  LossWeights w;
  w.lambda_body = lb;
  w.lambda_edge = le;
  w.alpha = std::move(alpha);
  w.temperature = t;
  return w;
}

struct Instance {
  LogitTensor t, s;
  SoftMaskStack m;
};

Instance random_instance(std::mt19937_64& rng, std::size_t max_c = 6, std::size_t max_hw = 12) {
  const std::size_t c = 2 + rng() % (max_c - 1);
  const std::size_t h = 1 + rng() % max_hw, w = 1 + rng() % max_hw;
  return {oracle::random_logits(rng, c, h, w), oracle::random_logits(rng, c, h, w),
          oracle::random_masks(rng, c, h, w)};
}

}  // namespace

TEST_CASE("mask_logits and decompose") {
  const LogitTensor z(2, 1, 1, std::vector<double>{1.0, -2.0});
  const SoftMaskStack m(2, 1, 1, std::vector<double>{0.5, 1.0});
  const LogitTensor e = mask_logits(z, m);
  CHECK(e.data()[0] == 0.5);
  CHECK(e.data()[1] == -2.0);
  CHECK(mask_logits(z, SoftMaskStack(2, 1, 1, 1.0)) == z);
  for (const auto held = mask_logits(z, SoftMaskStack(2, 1, 1, 0.0)); double v : held.data()) CHECK(v == 0.0);

  const Decomposition none = decompose(z, SoftMaskStack(2, 1, 1, 0.0));
  CHECK(none.body == z);
  const Decomposition all = decompose(z, SoftMaskStack(2, 1, 1, 1.0));
  CHECK(all.edge == z);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Instance in = random_instance(rng);
    const Decomposition d = decompose(in.t, in.m);
    for (std::size_t i = 0; i < in.t.size(); ++i) {
      CHECK(std::abs(in.t.data()[i] - (d.edge.data()[i] + d.body.data()[i])) < 1e-12);
    }
  }
  CHECK_THROWS_AS(decompose(z, SoftMaskStack(2, 1, 2, 0.0)), ShapeError);
}

TEST_CASE("prm KL map: hand example and properties") {
  const KlTermMap k = prm_kl_map(pixel({std::log(3.0), 0.0}), pixel({0.0, 0.0}));
  CHECK(k.data()[0] == doctest::Approx(0.75 * std::log(1.5)).epsilon(1e-14));
  CHECK(k.data()[1] == doctest::Approx(0.25 * std::log(0.5)).epsilon(1e-14));
  CHECK(k.data()[0] == doctest::Approx(0.304099).epsilon(1e-6));
  CHECK(k.data()[1] == doctest::Approx(-0.173287).epsilon(1e-6));
  CHECK(k.data()[0] + k.data()[1] == doctest::Approx(0.130812).epsilon(1e-6));

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const LogitTensor a = oracle::random_logits(rng, 3, 9, 11, 6.0);
    const LogitTensor b = oracle::random_logits(rng, 3, 9, 11, 6.0);
    const KlTermMap terms = prm_kl_map(a, b);
    for (const auto held = prm_kl_map(a, a); double v : held.data()) CHECK(v == 0.0);
    for (std::size_t i = 0; i < a.plane_size(); ++i) {
      std::vector<double> za(3), zb(3);
      double sum = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        za[c] = a.plane(c)[i];
        zb[c] = b.plane(c)[i];
        sum += terms.plane(c)[i];
      }
      CHECK(sum >= -1e-12);
      CHECK(sum == doctest::Approx(oracle::kl(oracle::softmax(za), oracle::softmax(zb))).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(prm_kl_map(pixel({1.0}), pixel({2.0})), ShapeError);
}

TEST_CASE("edge loss") {
  const SoftMaskStack full(2, 1, 1, 1.0);
  const EdgeLoss e = edge_loss(pixel({std::log(3.0), 0.0}), pixel({0.0, 0.0}), full, {1.0, 1.0});
  CHECK(e.total == doctest::Approx(0.130812).epsilon(1e-6));
  CHECK(e.per_class[0] == doctest::Approx(0.304099).epsilon(1e-6));
  CHECK(e.pixel_counts == std::vector<std::size_t>{1, 1});

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Instance in = random_instance(rng);
    std::vector<double> alpha(in.t.channels());
    for (auto& a : alpha) a = static_cast<double>(rng() % 5) * 0.5;
    const EdgeLoss base = edge_loss(in.t, in.s, in.m, alpha);
    CHECK(base.total == doctest::Approx(oracle::edge_loss(in.t, in.s, in.m, alpha)).epsilon(1e-10));
    double sum = 0.0;
    for (double v : base.per_class) sum += v;
    CHECK(sum == base.total);

    std::vector<double> doubled = alpha;
    for (auto& a : doubled) a *= 2.0;
    CHECK(edge_loss(in.t, in.s, in.m, doubled).total == 2.0 * base.total);

    const EdgeLoss same = edge_loss(in.t, in.t, in.m, alpha);
    CHECK(same.total == 0.0);
    CHECK(same.pixel_counts == base.pixel_counts);

    const EdgeLoss zero = edge_loss(in.t, in.s, SoftMaskStack(in.t.channels(), in.t.height(), in.t.width()), alpha);
    CHECK(zero.total == 0.0);
    for (auto n : zero.pixel_counts) CHECK(n == 0);
  }
  CHECK_THROWS_AS(edge_loss(pixel({0, 0}), pixel({0, 0}), full, {1.0, -1.0}), ConfigError);
  CHECK_THROWS_AS(edge_loss(pixel({0, 0}), pixel({0, 0}), full, {1.0}), ConfigError);
}

TEST_CASE("body loss") {
  const LogitTensor t(1, 1, 2, std::vector<double>{0.0, 0.0});
  const LogitTensor s(1, 1, 2, std::vector<double>{std::log(3.0), 0.0});
  const SoftMaskStack none(1, 1, 2, 0.0);
  CHECK(body_loss(t, s, none, 1.0) == doctest::Approx(0.143841).epsilon(1e-6));
  CHECK(body_loss(t, s, none, 1.0) ==
        doctest::Approx(0.5 * std::log(0.5 / 0.75) + 0.5 * std::log(0.5 / 0.25)).epsilon(1e-14));
  // halved logits: q = softmax(ln3/2, 0) = (sqrt3, 1)/(sqrt3 + 1); scaled by 4
  const double q0 = std::sqrt(3.0) / (std::sqrt(3.0) + 1.0);
  const double expected = 4.0 * (0.5 * std::log(0.5 / q0) + 0.5 * std::log(0.5 / (1.0 - q0)));
  CHECK(body_loss(t, s, none, 2.0) == doctest::Approx(expected).epsilon(1e-13));
  CHECK(body_loss(t, s, none, 2.0) == doctest::Approx(oracle::body_loss(t, s, none, 2.0)).epsilon(1e-13));
  CHECK_THROWS_AS(body_loss(t, s, none, 0.0), ConfigError);
  CHECK_THROWS_AS(body_loss(t, s, none, -1.0), ConfigError);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const Instance in = random_instance(rng);
    const double temp = 0.5 + static_cast<double>(rng() % 4);
    CHECK(body_loss(in.t, in.s, in.m, temp) ==
          doctest::Approx(oracle::body_loss(in.t, in.s, in.m, temp)).epsilon(1e-10));
    CHECK(body_loss(in.t, in.t, in.m, temp) == 0.0);
    const SoftMaskStack zero(in.t.channels(), in.t.height(), in.t.width());
    const double a = cwd_baseline_loss(in.t, in.s, temp);
    const double b = body_loss(in.t, in.s, zero, temp);
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
  }
  CHECK(cwd_baseline_loss(t, t, 1.0) == 0.0);
}

TEST_CASE("bpkd loss: composition and oracle agreement") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Instance in = random_instance(rng);
    LossWeights w = LossWeights::defaults(in.t.channels());
    const LossReport r = bpkd_loss(in.t, in.s, in.m, w);
    CHECK(r.total == 20.0 * r.body_loss + 50.0 * r.edge_loss);
    CHECK(std::abs(r.total - oracle::total_loss(in.t, in.s, in.m, 20, 50, w.alpha, 1.0)) < 1e-10);

    w.lambda_body = 0.0;
    const LossReport e = bpkd_loss(in.t, in.s, in.m, w);
    CHECK(e.total == 50.0 * e.edge_loss);

    const LossReport same = bpkd_loss(in.t, in.t, in.m, LossWeights::defaults(in.t.channels()));
    CHECK(same.total == 0.0);
    CHECK(same.edge_loss == 0.0);
    CHECK(same.body_loss == 0.0);
  }
}

TEST_CASE("bpkd loss: masks from labels match the oracle recomputation") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t c = 2 + rng() % 4, stride = 1 + rng() % 3;
    const std::size_t h = 2 + rng() % 8, w = 2 + rng() % 8;
    const LabelMap labels = oracle::random_labels(rng, h * stride, w * stride, c);
    const EdgeConfig cfg{3 + 2 * (rng() % 3), stride, c};
    const LogitTensor t = oracle::random_logits(rng, c, h, w);
    const LogitTensor s = oracle::random_logits(rng, c, h, w);
    const SoftMaskStack fast = build_soft_edge_masks(labels, cfg);
    const SoftMaskStack slow = oracle::soft_masks(labels, c, cfg.width, cfg.stride);
    const LossWeights lw = LossWeights::defaults(c);
    CHECK(std::abs(bpkd_loss(t, s, fast, lw).total -
                   oracle::total_loss(t, s, slow, 20, 50, lw.alpha, 1.0)) < 1e-10);
  }
  // uniform labels: no edge, body loss is the whole-view baseline
  const LabelMap flat(8, 8, 1);
  const LogitTensor t = oracle::random_logits(rng, 3, 4, 4);
  const LogitTensor s = oracle::random_logits(rng, 3, 4, 4);
  const LossReport r = bpkd_loss(t, s, build_soft_edge_masks(flat, EdgeConfig{7, 2, 3}), LossWeights::defaults(3));
  CHECK(r.edge_loss == 0.0);
  CHECK(r.body_loss == cwd_baseline_loss(t, s, 1.0));
}

TEST_CASE("bpkd loss: weight validation") {
  const LogitTensor z = pixel({0.0, 1.0});
  const SoftMaskStack m(2, 1, 1, 0.5);
  CHECK_THROWS_AS(bpkd_loss(z, z, m, weights(-1, 1, {1, 1})), ConfigError);
  CHECK_THROWS_AS(bpkd_loss(z, z, m, weights(1, std::nan(""), {1, 1})), ConfigError);
  CHECK_THROWS_AS(bpkd_loss(z, z, m, weights(1, 1, {1, 1}, 0.0)), ConfigError);
  CHECK_THROWS_AS(bpkd_loss(z, z, m, weights(1, 1, {1, 1, 1})), ConfigError);
  CHECK_THROWS_AS(bpkd_loss(pixel({1.0}), pixel({1.0}), SoftMaskStack(1, 1, 1), weights(1, 1, {1})), ShapeError);
}

TEST_CASE("gradient: hand example") {
  const GradientTensor g = bpkd_grad(pixel({std::log(3.0), 0.0}), pixel({0.0, 0.0}),
                                     SoftMaskStack(2, 1, 1, 1.0), weights(0, 1, {1, 1}));
  CHECK(g.data()[0] == doctest::Approx(-0.25).epsilon(1e-14));
  CHECK(g.data()[1] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("gradient: matches central differences of the oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = random_instance(rng, 6, 8);
    const double temp = trial % 2 ? 2.0 : 1.0;
    const LossWeights w = weights(20, 50, std::vector<double>(in.t.channels(), 2.0), temp);
    const GradientTensor g = bpkd_grad(in.t, in.s, in.m, w);
    const auto num = oracle::numeric_gradient(in.t, in.s, in.m, 20, 50, w.alpha, temp, 1e-5);
    double scale = 1.0;
    for (double v : num) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < num.size(); ++i) {
      CHECK(std::abs(g.data()[i] - num[i]) < 1e-5 * scale);
    }
    CHECK(compare_gradient(g, in.t, in.s, in.m, w).passed());
  }
}

TEST_CASE("gradient: behaviour at teacher == student") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = random_instance(rng);
    const std::size_t c = in.t.channels();
    const LossWeights w = LossWeights::defaults(c);

    // the body part vanishes exactly
    const GradientTensor body = bpkd_grad(in.t, in.t, in.m, weights(20, 0, std::vector<double>(c, 2.0)));
    for (double v : body.data()) CHECK(std::abs(v) < 1e-12);

    // the class-weighted edge part reduces to p_k (sum_c w_c p_c - w_k) M_k, which is not zero
    // unless the weights agree across classes
    const GradientTensor g = bpkd_grad(in.t, in.t, in.m, w);
    std::vector<std::size_t> n(c, 0);
    for (std::size_t k = 0; k < c; ++k) {
      for (double v : in.m.plane(k)) n[k] += v > 0.0;
    }
    for (std::size_t i = 0; i < in.t.plane_size(); ++i) {
      std::vector<double> z(c), wc(c, 0.0);
      for (std::size_t k = 0; k < c; ++k) {
        z[k] = in.t.plane(k)[i] * in.m.plane(k)[i];
        if (n[k]) wc[k] = 2.0 * in.m.plane(k)[i] / static_cast<double>(n[k]);
      }
      const auto p = oracle::softmax(z);
      double mix = 0.0;
      for (std::size_t k = 0; k < c; ++k) mix += wc[k] * p[k];
      for (std::size_t k = 0; k < c; ++k) {
        const double expected = 50.0 * p[k] * (mix - wc[k]) * in.m.plane(k)[i];
        CHECK(g.plane(k)[i] == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
      }
    }
    CHECK(compare_gradient(g, in.t, in.t, in.m, w).passed());

    // no edge anywhere: the full gradient is zero
    const SoftMaskStack none(c, in.t.height(), in.t.width());
    for (const auto held = bpkd_grad(in.t, in.t, none, w); double v : held.data()) CHECK(std::abs(v) < 1e-12);
  }
}

TEST_CASE("gradient check: detects a wrong gradient") {
  std::mt19937_64 rng(9);
  const Instance in = random_instance(rng);
  const LossWeights w = LossWeights::defaults(in.t.channels());
  GradientTensor g = bpkd_grad(in.t, in.s, in.m, w);
  g.data()[0] += 0.01;
  const GradCheckReport r = compare_gradient(g, in.t, in.s, in.m, w);
  CHECK_FALSE(r.passed());
  CHECK(r.worst_index == 0);
}

TEST_CASE("repeated evaluation is bit-identical") {
  std::mt19937_64 rng(10);
  const LogitTensor t = oracle::random_logits(rng, 5, 40, 37);
  const LogitTensor s = oracle::random_logits(rng, 5, 40, 37);
  const SoftMaskStack m = oracle::random_masks(rng, 5, 40, 37);
  const LossWeights w = LossWeights::defaults(5);
  const LossReport a = bpkd_loss(t, s, m, w);
  const LossReport b = bpkd_loss(t, s, m, w);
  CHECK(std::memcmp(&a.total, &b.total, sizeof(double)) == 0);
  CHECK(bpkd_grad(t, s, m, w) == bpkd_grad(t, s, m, w));
}
