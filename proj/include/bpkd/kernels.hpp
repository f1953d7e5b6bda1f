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
#include <cstdint>
#include <string_view>

namespace bpkd::kernels {

// Inner loops shared by the mask, loss and uncertainty code. Every entry has a
// scalar reference implementation; on x86-64 CPUs with AVX2+FMA an
// intrinsics variant is selected at startup. Morphology and elementwise
// kernels are bit-identical across variants; the softmax family agrees to a
// few ulp.
//
// "Pixel" kernels work across the class axis: `planes` holds `channels` planes
// of `stride` doubles each and the kernel handles pixels [0, n) of every plane
// (callers offset the pointer to process a row block). "Scaled" kernels
// work along one contiguous plane with logits divided by `temperature`.
struct KernelTable {
  std::string_view name;

  /// 3x3 square dilation/erosion of a {0,1} image with clamp-to-edge borders.
  void (*dilate3x3)(const std::uint8_t* src, std::uint8_t* dst, std::size_t height,
                    std::size_t width);
  void (*erode3x3)(const std::uint8_t* src, std::uint8_t* dst, std::size_t height,
                   std::size_t width);

  void (*multiply)(const double* a, const double* b, double* out, std::size_t n);
  /// out = 1 - a
  void (*complement)(const double* a, double* out, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);

  /// lse[i] = log(sum_c exp(planes[c][i]))
  void (*pixel_logsumexp)(const double* planes, std::size_t channels, std::size_t stride,
                          std::size_t n, double* lse);
  /// terms[c][i] = p_c * (log p_c - log q_c), p = softmax(teacher), q = softmax(student)
  void (*pixel_kl_terms)(const double* teacher, const double* student, const double* lse_t,
                         const double* lse_s, std::size_t channels, std::size_t stride,
                         std::size_t n, double* terms);
  /// grad[k][i] = q_k * sum_c w_c p_c - w_k p_k, the derivative of
  /// sum_c w_c p_c (log p_c - log q_c) with respect to the student logit k.
  void (*pixel_weighted_kl_grad)(const double* teacher, const double* student,
                                 const double* lse_t, const double* lse_s, const double* weights,
                                 std::size_t channels, std::size_t stride, std::size_t n,
                                 double* grad);
  /// entropy[i] = -sum_c p_c log p_c
  void (*pixel_entropy)(const double* planes, const double* lse, std::size_t channels,
                        std::size_t stride, std::size_t n, double* entropy);

  /// log(sum_i exp(x_i / temperature))
  double (*scaled_logsumexp)(const double* x, std::size_t n, double temperature);
  /// sum_i p_i (log p_i - log q_i) for the spatial softmaxes of teacher/student
  double (*scaled_kl_sum)(const double* teacher, const double* student, double lse_t,
                          double lse_s, double temperature, std::size_t n);
  /// out_i = scale * (q_i - p_i)
  void (*scaled_softmax_diff)(const double* teacher, const double* student, double lse_t,
                              double lse_s, double temperature, double scale, std::size_t n,
                              double* out);
};

const KernelTable& scalar_table();
/// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_table();

/// Table used by the library. Chosen once: BPKD_SIMD=scalar forces the
/// reference kernels, otherwise the widest supported variant wins.
const KernelTable& active();

}  // namespace bpkd::kernels
