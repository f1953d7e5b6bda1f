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

// Reference kernels. These define the semantics the SIMD variants must match.

#include <algorithm>
#include <cmath>

#include "bpkd/kernels.hpp"

namespace bpkd::kernels {
namespace {

template <class Reduce>
void morph3x3(const std::uint8_t* src, std::uint8_t* dst, std::size_t height, std::size_t width,
              Reduce reduce) {
  for (std::size_t r = 0; r < height; ++r) {
    const std::size_t r0 = r == 0 ? 0 : r - 1;
    const std::size_t r1 = std::min(r + 1, height - 1);
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t c0 = c == 0 ? 0 : c - 1;
      const std::size_t c1 = std::min(c + 1, width - 1);
      std::uint8_t v = src[r * width + c];
      for (std::size_t rr = r0; rr <= r1; ++rr) {
        for (std::size_t cc = c0; cc <= c1; ++cc) v = reduce(v, src[rr * width + cc]);
      }
      dst[r * width + c] = v;
    }
  }
}

void dilate3x3(const std::uint8_t* src, std::uint8_t* dst, std::size_t height, std::size_t width) {
  morph3x3(src, dst, height, width, [](std::uint8_t a, std::uint8_t b) { return std::max(a, b); });
}

void erode3x3(const std::uint8_t* src, std::uint8_t* dst, std::size_t height, std::size_t width) {
  morph3x3(src, dst, height, width, [](std::uint8_t a, std::uint8_t b) { return std::min(a, b); });
}

void multiply(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void complement(const double* a, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 - a[i];
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void pixel_logsumexp(const double* planes, std::size_t channels, std::size_t stride,
                     std::size_t n, double* lse) {
  for (std::size_t i = 0; i < n; ++i) {
    double m = planes[i];
    for (std::size_t c = 1; c < channels; ++c) m = std::max(m, planes[c * stride + i]);
    double s = 0.0;
    for (std::size_t c = 0; c < channels; ++c) s += std::exp(planes[c * stride + i] - m);
    lse[i] = m + std::log(s);
  }
}

void pixel_kl_terms(const double* teacher, const double* student, const double* lse_t,
                    const double* lse_s, std::size_t channels, std::size_t stride, std::size_t n,
                    double* terms) {
  for (std::size_t c = 0; c < channels; ++c) {
    const double* t = teacher + c * stride;
    const double* s = student + c * stride;
    double* out = terms + c * stride;
    for (std::size_t i = 0; i < n; ++i) {
      const double log_p = t[i] - lse_t[i];
      const double log_q = s[i] - lse_s[i];
      out[i] = std::exp(log_p) * (log_p - log_q);
    }
  }
}

void pixel_weighted_kl_grad(const double* teacher, const double* student, const double* lse_t,
                            const double* lse_s, const double* weights, std::size_t channels,
                            std::size_t stride, std::size_t n, double* grad) {
  for (std::size_t i = 0; i < n; ++i) {
    double weighted = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      weighted += weights[c * stride + i] * std::exp(teacher[c * stride + i] - lse_t[i]);
    }
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t k = c * stride + i;
      const double p = std::exp(teacher[k] - lse_t[i]);
      const double q = std::exp(student[k] - lse_s[i]);
      grad[k] = q * weighted - weights[k] * p;
    }
  }
}

void pixel_entropy(const double* planes, const double* lse, std::size_t channels,
                   std::size_t stride, std::size_t n, double* entropy) {
  for (std::size_t i = 0; i < n; ++i) {
    double h = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const double neg_log_p = lse[i] - planes[c * stride + i];
      h += std::exp(-neg_log_p) * neg_log_p;
    }
    entropy[i] = h;
  }
}

double scaled_logsumexp(const double* x, std::size_t n, double temperature) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
  m /= temperature;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] / temperature - m);
  return m + std::log(s);
}

double scaled_kl_sum(const double* teacher, const double* student, double lse_t, double lse_s,
                     double temperature, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double log_p = teacher[i] / temperature - lse_t;
    const double log_q = student[i] / temperature - lse_s;
    s += std::exp(log_p) * (log_p - log_q);
  }
  return s;
}

void scaled_softmax_diff(const double* teacher, const double* student, double lse_t, double lse_s,
                         double temperature, double scale, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::exp(teacher[i] / temperature - lse_t);
    const double q = std::exp(student[i] / temperature - lse_s);
    out[i] = scale * (q - p);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      "scalar",         dilate3x3,       erode3x3,
      multiply,         complement,      dot,
      pixel_logsumexp,  pixel_kl_terms,  pixel_weighted_kl_grad,
      pixel_entropy,    scaled_logsumexp, scaled_kl_sum,
      scaled_softmax_diff,
  };
  return table;
}

}  // namespace bpkd::kernels
