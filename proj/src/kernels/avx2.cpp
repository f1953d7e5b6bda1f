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

// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the runtime CPU check in dispatch.cpp. Keep it
// free of inline library templates so no AVX-encoded COMDAT copies leak into
// the rest of the program.

#include <immintrin.h>

#include <cmath>

#include "bpkd/kernels.hpp"

namespace bpkd::kernels {
namespace {

inline __m256d set1(double v) { return _mm256_set1_pd(v); }

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return ((lanes[0] + lanes[1]) + lanes[2]) + lanes[3];
}

inline double hmax(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  double m = lanes[0];
  for (int k = 1; k < 4; ++k) m = lanes[k] > m ? lanes[k] : m;
  return m;
}

// Converts integral doubles in [-2^51, 2^51] to int64 lanes.
inline __m256i to_int64(__m256d integral) {
  const __m256d magic = set1(6755399441055744.0);  // 1.5 * 2^52
  return _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(integral, magic)),
                          _mm256_castpd_si256(magic));
}

inline __m256d to_double(__m256i small) {
  const __m256d magic = set1(6755399441055744.0);
  return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_add_epi64(small, _mm256_castpd_si256(magic))),
                       magic);
}

// 2^k for integral k in [-1022, 1023].
inline __m256d pow2(__m256d k) {
  return _mm256_castsi256_pd(
      _mm256_slli_epi64(_mm256_add_epi64(to_int64(k), _mm256_set1_epi64x(1023)), 52));
}

// exp(x): Cody-Waite reduction to |r| <= ln2/2, degree-13 Taylor polynomial,
// and a two-step 2^n scale so results down into the subnormal range are
// produced without a special path. Arguments above ~709.78 saturate.
inline __m256d exp_pd(__m256d x) {
  x = _mm256_max_pd(_mm256_min_pd(x, set1(709.78)), set1(-745.5));
  const __m256d n =
      _mm256_round_pd(_mm256_mul_pd(x, set1(1.4426950408889634074)),
                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, set1(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(n, set1(1.90821492927058770002e-10), r);

  __m256d p = set1(1.0 / 6227020800.0);                // 1/13!
  p = _mm256_fmadd_pd(p, r, set1(1.0 / 479001600.0));  // 1/12!
  p = _mm256_fmadd_pd(p, r, set1(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, set1(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, set1(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, set1(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, set1(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, set1(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, set1(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, set1(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, set1(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, set1(0.5));
  p = _mm256_fmadd_pd(p, r, set1(1.0));
  p = _mm256_fmadd_pd(p, r, set1(1.0));

  const __m256d n1 = _mm256_floor_pd(_mm256_mul_pd(n, set1(0.5)));
  const __m256d n2 = _mm256_sub_pd(n, n1);
  return _mm256_mul_pd(_mm256_mul_pd(p, pow2(n1)), pow2(n2));
}

// log(x) for positive normal x: x = 2^e * m with m in [sqrt(1/2), sqrt(2)),
// log m = 2 atanh(s), s = (m-1)/(m+1), |s| < 0.1716, series through s^21.
inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  __m256i e = _mm256_sub_epi64(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(1023));
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                      _mm256_set1_epi64x(0x3FF0000000000000LL)));
  const __m256d big = _mm256_cmp_pd(m, set1(1.4142135623730950488), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, set1(0.5)), big);
  e = _mm256_sub_epi64(e, _mm256_castpd_si256(big));  // mask lanes are -1
  const __m256d ed = to_double(e);

  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, set1(1.0)), _mm256_add_pd(m, set1(1.0)));
  const __m256d s2 = _mm256_mul_pd(s, s);
  __m256d q = set1(1.0 / 21.0);
  q = _mm256_fmadd_pd(q, s2, set1(1.0 / 19.0));
  q = _mm256_fmadd_pd(q, s2, set1(1.0 / 17.0));
  q = _mm256_fmadd_pd(q, s2, set1(1.0 / 15.0));
  q = _mm256_fmadd_pd(q, s2, set1(1.0 / 13.0));
  q = _mm256_fmadd_pd(q, s2, set1(1.0 / 11.0));
  q = _mm256_fmadd_pd(q, s2, set1(1.0 / 9.0));
  q = _mm256_fmadd_pd(q, s2, set1(1.0 / 7.0));
  q = _mm256_fmadd_pd(q, s2, set1(1.0 / 5.0));
  q = _mm256_fmadd_pd(q, s2, set1(1.0 / 3.0));
  const __m256d two_s = _mm256_add_pd(s, s);
  const __m256d log_m = _mm256_fmadd_pd(_mm256_mul_pd(two_s, s2), q, two_s);
  return _mm256_fmadd_pd(ed, set1(6.93147180369123816490e-01),
                         _mm256_fmadd_pd(ed, set1(1.90821492927058770002e-10), log_m));
}

inline double max_d(double a, double b) { return b > a ? b : a; }

// --- morphology -------------------------------------------------------------

inline std::uint8_t morph_pixel(const std::uint8_t* src, std::size_t height, std::size_t width,
                                std::size_t r, std::size_t c, bool dilate) {
  const std::size_t r0 = r == 0 ? 0 : r - 1;
  const std::size_t r1 = r + 1 < height ? r + 1 : height - 1;
  const std::size_t c0 = c == 0 ? 0 : c - 1;
  const std::size_t c1 = c + 1 < width ? c + 1 : width - 1;
  std::uint8_t v = src[r * width + c];
  for (std::size_t rr = r0; rr <= r1; ++rr) {
    for (std::size_t cc = c0; cc <= c1; ++cc) {
      const std::uint8_t s = src[rr * width + cc];
      v = dilate ? (s > v ? s : v) : (s < v ? s : v);
    }
  }
  return v;
}

template <bool Dilate>
inline __m256i reduce(__m256i a, __m256i b) {
  if constexpr (Dilate) {
    return _mm256_max_epu8(a, b);
  } else {
    return _mm256_min_epu8(a, b);
  }
}

template <bool Dilate>
void morph3x3(const std::uint8_t* src, std::uint8_t* dst, std::size_t height, std::size_t width) {
  for (std::size_t r = 0; r < height; ++r) {
    const std::uint8_t* rows[3] = {src + (r == 0 ? 0 : r - 1) * width, src + r * width,
                                   src + (r + 1 < height ? r + 1 : height - 1) * width};
    std::uint8_t* out = dst + r * width;
    out[0] = morph_pixel(src, height, width, r, 0, Dilate);
    std::size_t c = 1;
    // interior columns: neighbours c-1 .. c+32 stay in bounds
    for (; c + 33 <= width; c += 32) {
      __m256i acc = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(rows[1] + c));
      for (const std::uint8_t* row : rows) {
        acc = reduce<Dilate>(acc, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(row + c - 1)));
        acc = reduce<Dilate>(acc, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(row + c)));
        acc = reduce<Dilate>(acc, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(row + c + 1)));
      }
      _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + c), acc);
    }
    for (; c < width; ++c) out[c] = morph_pixel(src, height, width, r, c, Dilate);
  }
}

void dilate3x3(const std::uint8_t* src, std::uint8_t* dst, std::size_t height, std::size_t width) {
  morph3x3<true>(src, dst, height, width);
}

void erode3x3(const std::uint8_t* src, std::uint8_t* dst, std::size_t height, std::size_t width) {
  morph3x3<false>(src, dst, height, width);
}

// --- elementwise ------------------------------------------------------------

void multiply(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void complement(const double* a, double* out, std::size_t n) {
  const __m256d one = set1(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_sub_pd(one, _mm256_loadu_pd(a + i)));
  for (; i < n; ++i) out[i] = 1.0 - a[i];
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

// --- class-axis softmax family ------------------------------------------------

void pixel_logsumexp(const double* planes, std::size_t channels, std::size_t stride,
                     std::size_t n, double* lse) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d m = _mm256_loadu_pd(planes + i);
    for (std::size_t c = 1; c < channels; ++c) {
      m = _mm256_max_pd(m, _mm256_loadu_pd(planes + c * stride + i));
    }
    __m256d s = _mm256_setzero_pd();
    for (std::size_t c = 0; c < channels; ++c) {
      s = _mm256_add_pd(s, exp_pd(_mm256_sub_pd(_mm256_loadu_pd(planes + c * stride + i), m)));
    }
    _mm256_storeu_pd(lse + i, _mm256_add_pd(m, log_pd(s)));
  }
  for (; i < n; ++i) {
    double m = planes[i];
    for (std::size_t c = 1; c < channels; ++c) m = max_d(m, planes[c * stride + i]);
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
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      const __m256d log_p = _mm256_sub_pd(_mm256_loadu_pd(t + i), _mm256_loadu_pd(lse_t + i));
      const __m256d log_q = _mm256_sub_pd(_mm256_loadu_pd(s + i), _mm256_loadu_pd(lse_s + i));
      _mm256_storeu_pd(out + i, _mm256_mul_pd(exp_pd(log_p), _mm256_sub_pd(log_p, log_q)));
    }
    for (; i < n; ++i) {
      const double log_p = t[i] - lse_t[i];
      const double log_q = s[i] - lse_s[i];
      out[i] = std::exp(log_p) * (log_p - log_q);
    }
  }
}

void pixel_weighted_kl_grad(const double* teacher, const double* student, const double* lse_t,
                            const double* lse_s, const double* weights, std::size_t channels,
                            std::size_t stride, std::size_t n, double* grad) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d lt = _mm256_loadu_pd(lse_t + i);
    const __m256d ls = _mm256_loadu_pd(lse_s + i);
    __m256d weighted = _mm256_setzero_pd();
    for (std::size_t c = 0; c < channels; ++c) {
      const __m256d p = exp_pd(_mm256_sub_pd(_mm256_loadu_pd(teacher + c * stride + i), lt));
      weighted = _mm256_fmadd_pd(_mm256_loadu_pd(weights + c * stride + i), p, weighted);
    }
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t k = c * stride + i;
      const __m256d p = exp_pd(_mm256_sub_pd(_mm256_loadu_pd(teacher + k), lt));
      const __m256d q = exp_pd(_mm256_sub_pd(_mm256_loadu_pd(student + k), ls));
      _mm256_storeu_pd(grad + k,
                       _mm256_fnmadd_pd(_mm256_loadu_pd(weights + k), p, _mm256_mul_pd(q, weighted)));
    }
  }
  for (; i < n; ++i) {
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
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d l = _mm256_loadu_pd(lse + i);
    __m256d h = _mm256_setzero_pd();
    for (std::size_t c = 0; c < channels; ++c) {
      const __m256d neg_log_p = _mm256_sub_pd(l, _mm256_loadu_pd(planes + c * stride + i));
      h = _mm256_fmadd_pd(exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), neg_log_p)), neg_log_p, h);
    }
    _mm256_storeu_pd(entropy + i, h);
  }
  for (; i < n; ++i) {
    double h = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const double neg_log_p = lse[i] - planes[c * stride + i];
      h += std::exp(-neg_log_p) * neg_log_p;
    }
    entropy[i] = h;
  }
}

// --- spatial (single plane) softmax family -----------------------------------

double scaled_logsumexp(const double* x, std::size_t n, double temperature) {
  std::size_t i = 0;
  double m = x[0];
  if (n >= 4) {
    __m256d mv = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) mv = _mm256_max_pd(mv, _mm256_loadu_pd(x + i));
    m = hmax(mv);
  }
  for (; i < n; ++i) m = max_d(m, x[i]);
  m /= temperature;

  const __m256d tv = set1(temperature);
  const __m256d mv = set1(m);
  __m256d acc = _mm256_setzero_pd();
  i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, exp_pd(_mm256_sub_pd(_mm256_div_pd(_mm256_loadu_pd(x + i), tv), mv)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += std::exp(x[i] / temperature - m);
  return m + std::log(s);
}

double scaled_kl_sum(const double* teacher, const double* student, double lse_t, double lse_s,
                     double temperature, std::size_t n) {
  const __m256d tv = set1(temperature);
  const __m256d lt = set1(lse_t);
  const __m256d ls = set1(lse_s);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d log_p = _mm256_sub_pd(_mm256_div_pd(_mm256_loadu_pd(teacher + i), tv), lt);
    const __m256d log_q = _mm256_sub_pd(_mm256_div_pd(_mm256_loadu_pd(student + i), tv), ls);
    acc = _mm256_fmadd_pd(exp_pd(log_p), _mm256_sub_pd(log_p, log_q), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double log_p = teacher[i] / temperature - lse_t;
    const double log_q = student[i] / temperature - lse_s;
    s += std::exp(log_p) * (log_p - log_q);
  }
  return s;
}

void scaled_softmax_diff(const double* teacher, const double* student, double lse_t, double lse_s,
                         double temperature, double scale, std::size_t n, double* out) {
  const __m256d tv = set1(temperature);
  const __m256d lt = set1(lse_t);
  const __m256d ls = set1(lse_s);
  const __m256d sc = set1(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = exp_pd(_mm256_sub_pd(_mm256_div_pd(_mm256_loadu_pd(teacher + i), tv), lt));
    const __m256d q = exp_pd(_mm256_sub_pd(_mm256_div_pd(_mm256_loadu_pd(student + i), tv), ls));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(sc, _mm256_sub_pd(q, p)));
  }
  for (; i < n; ++i) {
    const double p = std::exp(teacher[i] / temperature - lse_t);
    const double q = std::exp(student[i] / temperature - lse_s);
    out[i] = scale * (q - p);
  }
}

}  // namespace

const KernelTable& avx2_table_impl() {
  static const KernelTable table{
      "avx2",           dilate3x3,        erode3x3,
      multiply,         complement,       dot,
      pixel_logsumexp,  pixel_kl_terms,   pixel_weighted_kl_grad,
      pixel_entropy,    scaled_logsumexp, scaled_kl_sum,
      scaled_softmax_diff,
  };
  return table;
}

}  // namespace bpkd::kernels
