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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "bpkd/tensor.hpp"

namespace bpkd {

/// Tensor container (NumPy .npy v1.0). Reads "<f4"/"<f8" C-order data with
/// 1-4 axes; rejects non-finite values. Always writes "<f8".
DenseTensor load_tensor(const std::filesystem::path& path);
void save_tensor(const DenseTensor& t, const std::filesystem::path& path);

DenseTensor decode_tensor(std::span<const std::uint8_t> bytes);
std::string encode_tensor(const DenseTensor& t);

/// Loads a label image. PNG files must be single channel (gray or palette
/// indices, up to 16 bit); .npy files must hold a 2-D integer array. Values are
/// read verbatim.
LabelMap load_label_map(const std::filesystem::path& path,
                        Label ignore_value = kDefaultIgnoreValue);

/// 8-bit single-channel PNG writer. `pixels` is row-major height*width.
void save_gray_png(std::span<const std::uint8_t> pixels, std::size_t height, std::size_t width,
                   const std::filesystem::path& path);

/// Writes an 8-bit PNG when every value fits, 16-bit otherwise.
void save_label_png(const LabelMap& labels, const std::filesystem::path& path);

/// Writes 0 -> 0 and 1 -> 255.
void save_binary_png(const BinaryMap& map, const std::filesystem::path& path);

std::string encode_gray_png(std::span<const std::uint8_t> pixels, std::size_t height,
                            std::size_t width);
std::string encode_label_png(const LabelMap& labels);
std::string encode_binary_png(const BinaryMap& map);

/// Writes `bytes` to `path`, surfacing failures as IoError with the path.
void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace bpkd
