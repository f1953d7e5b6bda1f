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

// Single-channel PNG reading/writing on top of libpng, and label-map loading.

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <cstring>

#include "bpkd/tensor_io.hpp"
#include "io_detail.hpp"

namespace bpkd {
namespace {

struct PngContext {
  std::span<const std::uint8_t> input;
  std::size_t offset = 0;
  std::string* output = nullptr;
  char message[256] = {0};
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* ctx = static_cast<PngContext*>(png_get_error_ptr(png));
  std::snprintf(ctx->message, sizeof(ctx->message), "%s", msg);
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void read_from_memory(png_structp png, png_bytep dst, png_size_t length) {
  auto* ctx = static_cast<PngContext*>(png_get_io_ptr(png));
  if (ctx->input.size() - ctx->offset < length) {
    png_error(png, "unexpected end of file (truncated PNG)");
  }
  std::memcpy(dst, ctx->input.data() + ctx->offset, length);
  ctx->offset += length;
}

void write_to_memory(png_structp png, png_bytep src, png_size_t length) {
  auto* ctx = static_cast<PngContext*>(png_get_io_ptr(png));
  ctx->output->append(reinterpret_cast<const char*>(src), length);
}

void flush_memory(png_structp) {}

struct DecodedPng {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<std::uint8_t> raw;  // row-major samples, 16-bit big-endian as stored
};

// No objects with destructors live in this frame across the setjmp; the
// decoded samples go into caller-owned storage.
bool decode_png(PngContext* ctx, DecodedPng* out) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, ctx, on_png_error, on_png_warning);
  if (!png) {
    std::snprintf(ctx->message, sizeof(ctx->message), "libpng initialization failed");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    std::snprintf(ctx->message, sizeof(ctx->message), "libpng initialization failed");
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, ctx, read_from_memory);
  png_read_info(png, info);
  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  out->bit_depth = png_get_bit_depth(png, info);
  out->color_type = png_get_color_type(png, info);
  if (out->color_type != PNG_COLOR_TYPE_GRAY && out->color_type != PNG_COLOR_TYPE_PALETTE) {
    std::snprintf(ctx->message, sizeof(ctx->message),
                  "multi-channel image (PNG color type %d); label maps must be single channel",
                  out->color_type);
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  if (out->bit_depth < 8) png_set_packing(png);
  const int passes = png_set_interlace_handling(png);
  png_read_update_info(png, info);
  const png_size_t row_bytes = png_get_rowbytes(png, info);
  out->raw.resize(row_bytes * out->height);
  for (int pass = 0; pass < passes; ++pass) {
    for (std::uint32_t r = 0; r < out->height; ++r) {
      png_read_row(png, out->raw.data() + r * row_bytes, nullptr);
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode_png(PngContext* ctx, const std::uint8_t* samples, std::uint32_t height,
                std::uint32_t width, int bit_depth) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, ctx, on_png_error, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, ctx, write_to_memory, flush_memory);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t row_bytes = std::size_t{width} * (bit_depth / 8);
  for (std::uint32_t r = 0; r < height; ++r) {
    png_write_row(png, samples + r * row_bytes);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

std::string encode_gray(const std::uint8_t* samples, std::size_t height, std::size_t width,
                        int bit_depth) {
  if (height == 0 || width == 0) throw ShapeError("cannot write an empty PNG");
  std::string bytes;
  PngContext ctx;
  ctx.output = &bytes;
  if (!encode_png(&ctx, samples, static_cast<std::uint32_t>(height),
                  static_cast<std::uint32_t>(width), bit_depth)) {
    throw FormatError(std::string("PNG encoding failed: ") + ctx.message);
  }
  return bytes;
}

bool has_png_signature(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

}  // namespace

LabelMap detail::decode_label_png(std::span<const std::uint8_t> bytes, Label ignore_value) {
  PngContext ctx;
  ctx.input = bytes;
  DecodedPng png;
  if (!decode_png(&ctx, &png)) {
    throw FormatError(std::string("PNG decode failed: ") + ctx.message);
  }
  const std::size_t n = std::size_t{png.height} * png.width;
  std::vector<Label> values(n);
  if (png.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = static_cast<Label>((png.raw[2 * i] << 8) | png.raw[2 * i + 1]);
    }
  } else {
    std::copy(png.raw.begin(), png.raw.begin() + static_cast<std::ptrdiff_t>(n), values.begin());
  }
  return LabelMap(png.height, png.width, std::move(values), ignore_value);
}

LabelMap load_label_map(const std::filesystem::path& path, Label ignore_value) {
  const std::string file = read_file(path);
  const std::span bytes(reinterpret_cast<const std::uint8_t*>(file.data()), file.size());
  try {
    if (has_png_signature(bytes)) return detail::decode_label_png(bytes, ignore_value);
    if (bytes.size() >= 6 && bytes[0] == 0x93 && std::memcmp(bytes.data() + 1, "NUMPY", 5) == 0) {
      return detail::decode_label_tensor(bytes, ignore_value);
    }
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  throw FormatError(path.string() + ": neither a PNG image nor a tensor container");
}

std::string encode_gray_png(std::span<const std::uint8_t> pixels, std::size_t height,
                            std::size_t width) {
  if (pixels.size() != height * width) throw ShapeError("pixel buffer does not match extents");
  return encode_gray(pixels.data(), height, width, 8);
}

std::string encode_label_png(const LabelMap& labels) {
  const auto values = labels.values();
  const Label max = *std::max_element(values.begin(), values.end());
  if (max > 0xffff) throw ValidationError("label value exceeds 16 bits; cannot write PNG");
  if (max <= 0xff) {
    std::vector<std::uint8_t> px(values.begin(), values.end());
    return encode_gray(px.data(), labels.height(), labels.width(), 8);
  }
  std::vector<std::uint8_t> px(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    px[2 * i] = static_cast<std::uint8_t>(values[i] >> 8);
    px[2 * i + 1] = static_cast<std::uint8_t>(values[i] & 0xff);
  }
  return encode_gray(px.data(), labels.height(), labels.width(), 16);
}

std::string encode_binary_png(const BinaryMap& map) {
  std::vector<std::uint8_t> px(map.size());
  std::transform(map.values().begin(), map.values().end(), px.begin(),
                 [](std::uint8_t v) { return v ? std::uint8_t{255} : std::uint8_t{0}; });
  return encode_gray(px.data(), map.height(), map.width(), 8);
}

void save_gray_png(std::span<const std::uint8_t> pixels, std::size_t height, std::size_t width,
                   const std::filesystem::path& path) {
  write_file(path, encode_gray_png(pixels, height, width));
}

void save_label_png(const LabelMap& labels, const std::filesystem::path& path) {
  write_file(path, encode_label_png(labels));
}

void save_binary_png(const BinaryMap& map, const std::filesystem::path& path) {
  write_file(path, encode_binary_png(map));
}

}  // namespace bpkd
