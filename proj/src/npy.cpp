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

// .npy v1.0 container reader/writer.

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include "bpkd/tensor_io.hpp"
#include "io_detail.hpp"

namespace bpkd {
namespace {

constexpr std::uint8_t kMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};

struct NpyHeader {
  std::string descr;
  bool fortran_order = false;
  std::vector<std::size_t> shape;
  std::size_t data_offset = 0;
};

// Parser for the Python literal dict in the header, e.g.
// {'descr': '<f8', 'fortran_order': False, 'shape': (2, 3), }
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  NpyHeader parse() {
    NpyHeader h;
    bool seen_descr = false, seen_order = false, seen_shape = false;
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = parse_string();
      expect(':');
      if (key == "descr") {
        h.descr = parse_string();
        seen_descr = true;
      } else if (key == "fortran_order") {
        h.fortran_order = parse_bool();
        seen_order = true;
      } else if (key == "shape") {
        h.shape = parse_shape();
        seen_shape = true;
      } else {
        throw FormatError("tensor header has unknown key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        fail("expected ',' or '}'");
      }
    }
    if (!seen_descr || !seen_order || !seen_shape) {
      throw FormatError("tensor header lacks one of descr/fortran_order/shape");
    }
    return h;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("malformed tensor header at offset " + std::to_string(pos_) + ": " + what);
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string parse_string() {
    skip_ws();
    const char quote = peek();
    if (quote != '\'' && quote != '"') fail("expected a quoted string");
    const auto end = text_.find(quote, pos_ + 1);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string s(text_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return s;
  }
  bool parse_bool() {
    skip_ws();
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }
  std::vector<std::size_t> parse_shape() {
    expect('(');
    std::vector<std::size_t> shape;
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        return shape;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected a dimension");
      std::size_t v = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        v = v * 10 + static_cast<std::size_t>(peek() - '0');
        if (v > (std::size_t{1} << 48)) fail("dimension too large");
        ++pos_;
      }
      shape.push_back(v);
      skip_ws();
      if (peek() == ',') ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

NpyHeader read_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("bad tensor magic (expected \\x93NUMPY)");
  }
  const std::uint8_t major = bytes[6];
  std::size_t header_len = 0;
  std::size_t prefix = 0;
  if (major == 1) {
    header_len = bytes[8] | (std::size_t{bytes[9]} << 8);
    prefix = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) throw FormatError("truncated tensor header");
    header_len = bytes[8] | (std::size_t{bytes[9]} << 8) | (std::size_t{bytes[10]} << 16) |
                 (std::size_t{bytes[11]} << 24);
    prefix = 12;
  } else {
    throw FormatError("unsupported tensor format version " + std::to_string(major));
  }
  if (bytes.size() < prefix + header_len) throw FormatError("truncated tensor header");
  const std::string_view text(reinterpret_cast<const char*>(bytes.data() + prefix), header_len);
  NpyHeader h = HeaderParser(text).parse();
  h.data_offset = prefix + header_len;
  if (h.fortran_order) throw FormatError("fortran_order tensors are not supported");
  return h;
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d != 0 && n > (std::size_t{1} << 48) / d) {
      throw ShapeError("tensor shape " + shape_string(shape) + " is too large");
    }
    n *= d;
  }
  return n;
}

std::uint64_t read_le(const std::uint8_t* p, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < width; ++b) v |= std::uint64_t{p[b]} << (8 * b);
  return v;
}

// Checks the payload size against the declared shape; returns a view of it.
std::span<const std::uint8_t> payload(std::span<const std::uint8_t> bytes, const NpyHeader& h,
                                      std::size_t item_size) {
  const std::size_t n = element_count(h.shape);
  const std::size_t have = bytes.size() - h.data_offset;
  if (have != n * item_size) {
    throw ShapeError("tensor shape " + shape_string(h.shape) + " declares " + std::to_string(n) +
                     " values but the file holds " + std::to_string(have) + " data bytes (" +
                     std::to_string(have / item_size) + " values)");
  }
  return bytes.subspan(h.data_offset);
}

std::string shape_literal(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  return s + ")";
}

}  // namespace

DenseTensor decode_tensor(std::span<const std::uint8_t> bytes) {
  const NpyHeader h = read_header(bytes);
  if (h.shape.empty() || h.shape.size() > 4) {
    throw ShapeError("tensor rank " + std::to_string(h.shape.size()) + " outside 1..4");
  }
  std::size_t item = 0;
  DType dtype{};
  if (h.descr == "<f8") {
    item = 8;
    dtype = DType::kFloat64;
  } else if (h.descr == "<f4") {
    item = 4;
    dtype = DType::kFloat32;
  } else {
    throw FormatError("unsupported tensor dtype '" + h.descr + "' (expected <f4 or <f8)");
  }
  const auto data = payload(bytes, h, item);
  DenseTensor t;
  t.shape = h.shape;
  t.source_dtype = dtype;
  const std::size_t n = element_count(h.shape);
  t.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t raw = read_le(data.data() + i * item, item);
    double v;
    if (item == 8) {
      std::memcpy(&v, &raw, 8);
    } else {
      const auto raw32 = static_cast<std::uint32_t>(raw);
      float f;
      std::memcpy(&f, &raw32, 4);
      v = static_cast<double>(f);
    }
    if (!std::isfinite(v)) {
      throw ValidationError("non-finite value at flat index " + std::to_string(i));
    }
    t.values[i] = v;
  }
  return t;
}

std::string encode_tensor(const DenseTensor& t) {
  t.check();
  std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': " +
                       shape_literal(t.shape) + ", }";
  // magic(6) + version(2) + length(2) + header, padded to 64 with a trailing newline
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header += '\n';
  std::string out;
  out.reserve(10 + header.size() + t.values.size() * 8);
  out.append(reinterpret_cast<const char*>(kMagic), sizeof(kMagic));
  out += '\x01';
  out += '\x00';
  out += static_cast<char>(header.size() & 0xff);
  out += static_cast<char>((header.size() >> 8) & 0xff);
  out += header;
  for (double v : t.values) {
    std::uint64_t raw;
    std::memcpy(&raw, &v, 8);
    for (int b = 0; b < 8; ++b) out += static_cast<char>((raw >> (8 * b)) & 0xff);
  }
  return out;
}

DenseTensor load_tensor(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_tensor(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()),
                                   bytes.size()));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_tensor(const DenseTensor& t, const std::filesystem::path& path) {
  write_file(path, encode_tensor(t));
}

// Integer label arrays stored in the same container.
LabelMap detail::decode_label_tensor(std::span<const std::uint8_t> bytes, Label ignore_value) {
  const NpyHeader h = read_header(bytes);
  if (h.shape.size() != 2) {
    throw FormatError("label tensor must be 2-D, got shape " + shape_string(h.shape));
  }
  if (h.descr.size() < 3 || (h.descr[1] != 'u' && h.descr[1] != 'i')) {
    throw FormatError("label tensor dtype '" + h.descr + "' is not an integer type");
  }
  const bool is_signed = h.descr[1] == 'i';
  const std::string digits = h.descr.substr(2);
  const std::size_t item = digits.size() == 1 && std::isdigit(static_cast<unsigned char>(digits[0]))
                               ? static_cast<std::size_t>(digits[0] - '0')
                               : 0;
  if (item != 1 && item != 2 && item != 4 && item != 8) {
    throw FormatError("label tensor dtype '" + h.descr + "' has unsupported width");
  }
  if (h.descr[0] == '>' && item > 1) {
    throw FormatError("big-endian label tensor '" + h.descr + "' is not supported");
  }
  const auto data = payload(bytes, h, item);
  const std::size_t n = element_count(h.shape);
  std::vector<Label> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t raw = read_le(data.data() + i * item, item);
    if (is_signed && (raw >> (8 * item - 1)) & 1U) {
      throw ValidationError("negative label at flat index " + std::to_string(i));
    }
    if (raw > 0xffffffffULL) {
      throw ValidationError("label at flat index " + std::to_string(i) + " exceeds 32 bits");
    }
    values[i] = static_cast<Label>(raw);
  }
  return LabelMap(h.shape[0], h.shape[1], std::move(values), ignore_value);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace bpkd
