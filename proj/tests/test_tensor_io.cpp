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
#include <limits>
#include <random>

#include "bpkd/report.hpp"
#include "bpkd/tensor_io.hpp"
#include "support.hpp"

using namespace bpkd;
using testing::npy_bytes;
using testing::raw_bytes;
using testing::TempDir;

namespace {

DenseTensor decode(const std::string& bytes) {
  return decode_tensor(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

}  // namespace

TEST_CASE("tensor: identity read of a float64 container") {
  std::vector<double> v(18);
  for (int i = 0; i < 18; ++i) v[i] = i;
  const DenseTensor t = decode(npy_bytes("<f8", "(2, 3, 3)", raw_bytes(v)));
  CHECK(t.shape == std::vector<std::size_t>{2, 3, 3});
  CHECK(t.values == v);
  CHECK(t.source_dtype == DType::kFloat64);
}

TEST_CASE("tensor: float32 input is widened exactly") {
  const std::vector<float> v{0.1f, -2.5f, 3.0f};
  const DenseTensor t = decode(npy_bytes("<f4", "(3,)", raw_bytes(v)));
  CHECK(t.source_dtype == DType::kFloat32);
  for (int i = 0; i < 3; ++i) CHECK(t.values[i] == static_cast<double>(v[i]));
}

TEST_CASE("tensor: malformed containers raise typed errors") {
  const std::vector<double> three{1, 2, 3};
  SUBCASE("NaN") {
    std::vector<double> v{std::numeric_limits<double>::quiet_NaN(), 1.0};
    try {
      decode(npy_bytes("<f8", "(2,)", raw_bytes(v)));
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("non-finite value") != std::string::npos);
    }
  }
  SUBCASE("infinity in float32") {
    std::vector<float> v{1.0f, std::numeric_limits<float>::infinity()};
    CHECK_THROWS_AS(decode(npy_bytes("<f4", "(2,)", raw_bytes(v))), ValidationError);
  }
  SUBCASE("declared size disagrees with payload") {
    CHECK_THROWS_AS(decode(npy_bytes("<f8", "(2, 2)", raw_bytes(three))), ShapeError);
  }
  SUBCASE("fortran order") {
    CHECK_THROWS_AS(decode(npy_bytes("<f8", "(3,)", raw_bytes(three), true)), FormatError);
  }
  SUBCASE("integer dtype") {
    CHECK_THROWS_AS(decode(npy_bytes("<i8", "(3,)", raw_bytes(three))), FormatError);
  }
  SUBCASE("big-endian dtype") {
    CHECK_THROWS_AS(decode(npy_bytes(">f8", "(3,)", raw_bytes(three))), FormatError);
  }
  SUBCASE("bad magic") {
    std::string b = npy_bytes("<f8", "(3,)", raw_bytes(three));
    b[1] = 'X';
    CHECK_THROWS_AS(decode(b), FormatError);
  }
  SUBCASE("rank 5") {
    CHECK_THROWS_AS(decode(npy_bytes("<f8", "(1, 1, 1, 1, 3)", raw_bytes(three))), ShapeError);
  }
  SUBCASE("absurd dimension") {
    CHECK_THROWS_AS(decode(npy_bytes("<f8", "(99999999999999999999, 3)", raw_bytes(three))),
                    FormatError);
  }
  SUBCASE("every truncation of a valid file") {
    const std::string full = npy_bytes("<f8", "(3,)", raw_bytes(three));
    for (std::size_t n = 0; n < full.size(); ++n) {
      CHECK_THROWS_AS(decode(full.substr(0, n)), Error);
    }
  }
}

TEST_CASE("tensor: save/load round trip is bitwise") {
  TempDir dir("tensor");
  SUBCASE("single value") {
    DenseTensor t;
    t.shape = {1};
    t.values = {0.5};
    save_tensor(t, dir / "a.npy");
    CHECK(load_tensor(dir / "a.npy").bitwise_equal(t));
  }
  SUBCASE("random 3x2x2 and awkward values") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int trial = 0; trial < 20; ++trial) {
      DenseTensor t;
      t.shape = {3, 2, 2};
      for (int i = 0; i < 12; ++i) t.values.push_back(u(rng));
      t.values[0] = -0.0;
      t.values[1] = std::numeric_limits<double>::denorm_min();
      t.values[2] = std::numeric_limits<double>::max();
      save_tensor(t, dir / "b.npy");
      const DenseTensor back = load_tensor(dir / "b.npy");
      CHECK(back.bitwise_equal(t));
      CHECK(std::signbit(back.values[0]));
    }
  }
  SUBCASE("header is 64-byte aligned") {
    DenseTensor t;
    t.shape = {2, 3};
    t.values.assign(6, 1.0);
    const std::string bytes = encode_tensor(t);
    const std::size_t header_len = static_cast<unsigned char>(bytes[8]) |
                                   (static_cast<unsigned char>(bytes[9]) << 8);
    CHECK((10 + header_len) % 64 == 0);
    CHECK(bytes.size() == 10 + header_len + 48);
  }
}

TEST_CASE("tensor: I/O failures name the path") {
  DenseTensor t;
  t.shape = {1};
  t.values = {1.0};
  try {
    save_tensor(t, "/nonexistent-dir/sub/x.npy");
    FAIL("expected an error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/nonexistent-dir/sub/x.npy") != std::string::npos);
  }
  CHECK_THROWS_AS(load_tensor("/nonexistent-dir/y.npy"), IoError);
}

TEST_CASE("labels: PNG reads are verbatim") {
  TempDir dir("labels");
  SUBCASE("8-bit zeros") {
    testing::write_png(dir / "z.png", 4, 4, 8, PNG_COLOR_TYPE_GRAY, std::vector<std::uint8_t>(16, 0));
    const LabelMap m = load_label_map(dir / "z.png");
    CHECK(m.height() == 4);
    CHECK(m.width() == 4);
    for (auto v : m.values()) CHECK(v == 0);
  }
  SUBCASE("ignore value position") {
    testing::write_png(dir / "i.png", 2, 2, 8, PNG_COLOR_TYPE_GRAY, {0, 1, 255, 1});
    const LabelMap m = load_label_map(dir / "i.png");
    CHECK(m(0, 0) == 0);
    CHECK(m(0, 1) == 1);
    CHECK(m(1, 0) == 255);
    CHECK(m.ignored(2));
    CHECK_FALSE(m.ignored(1));
  }
  SUBCASE("16-bit values") {
    // big-endian samples 0x0102, 0x0000, 0x00ff, 0x1000
    testing::write_png(dir / "w.png", 2, 2, 16, PNG_COLOR_TYPE_GRAY,
                       {0x01, 0x02, 0x00, 0x00, 0x00, 0xff, 0x10, 0x00});
    const LabelMap m = load_label_map(dir / "w.png");
    CHECK(m.values()[0] == 0x0102);
    CHECK(m.values()[2] == 0xff);
    CHECK(m.values()[3] == 0x1000);
  }
  SUBCASE("palette indices are taken as labels") {
    testing::write_png(dir / "p.png", 1, 3, 8, PNG_COLOR_TYPE_PALETTE, {7, 0, 200});
    const LabelMap m = load_label_map(dir / "p.png");
    CHECK(m.values()[0] == 7);
    CHECK(m.values()[2] == 200);
  }
  SUBCASE("4-bit gray is unpacked") {
    testing::write_png(dir / "n.png", 1, 4, 4, PNG_COLOR_TYPE_GRAY, {0x12, 0x3f});
    const LabelMap m = load_label_map(dir / "n.png");
    CHECK(std::vector<Label>(m.values().begin(), m.values().end()) ==
          std::vector<Label>{1, 2, 3, 15});
  }
  SUBCASE("RGB is rejected") {
    testing::write_png(dir / "rgb.png", 1, 2, 8, PNG_COLOR_TYPE_RGB, {1, 2, 3, 4, 5, 6});
    try {
      load_label_map(dir / "rgb.png");
      FAIL("expected an error");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("multi-channel") != std::string::npos);
    }
  }
  SUBCASE("truncated PNG") {
    testing::write_png(dir / "t.png", 8, 8, 8, PNG_COLOR_TYPE_GRAY, std::vector<std::uint8_t>(64, 3));
    const std::string bytes = read_file(dir / "t.png");
    for (std::size_t n : {std::size_t{4}, std::size_t{20}, bytes.size() / 2, bytes.size() - 13}) {
      write_file(dir / "cut.png", std::string_view(bytes).substr(0, n));
      CHECK_THROWS_AS(load_label_map(dir / "cut.png"), FormatError);
    }
  }
  SUBCASE("label writer round trip, 8 and 16 bit") {
    LabelMap a(3, 5, 0);
    for (std::size_t i = 0; i < a.size(); ++i) a.values()[i] = static_cast<Label>(i * 17 % 256);
    save_label_png(a, dir / "a.png");
    CHECK(load_label_map(dir / "a.png") == a);
    a.values()[4] = 40000;
    save_label_png(a, dir / "b.png");
    CHECK(load_label_map(dir / "b.png") == a);
  }
}

TEST_CASE("labels: integer tensor containers") {
  TempDir dir("labtensor");
  SUBCASE("uint8") {
    write_file(dir / "a.npy", npy_bytes("|u1", "(2, 2)", raw_bytes(std::vector<std::uint8_t>{0, 1, 255, 3})));
    const LabelMap m = load_label_map(dir / "a.npy");
    CHECK(m(1, 0) == 255);
    CHECK(m(1, 1) == 3);
  }
  SUBCASE("int64") {
    write_file(dir / "b.npy", npy_bytes("<i8", "(1, 3)", raw_bytes(std::vector<std::int64_t>{2, 0, 9})));
    CHECK(load_label_map(dir / "b.npy").values()[2] == 9);
  }
  SUBCASE("negative label") {
    write_file(dir / "c.npy", npy_bytes("<i4", "(1, 2)", raw_bytes(std::vector<std::int32_t>{1, -1})));
    CHECK_THROWS_AS(load_label_map(dir / "c.npy"), ValidationError);
  }
  SUBCASE("float tensor is not a label map") {
    write_file(dir / "d.npy", npy_bytes("<f8", "(1, 2)", raw_bytes(std::vector<double>{1, 2})));
    CHECK_THROWS_AS(load_label_map(dir / "d.npy"), FormatError);
  }
  SUBCASE("3-D integer tensor") {
    write_file(dir / "e.npy", npy_bytes("|u1", "(1, 1, 2)", raw_bytes(std::vector<std::uint8_t>{1, 2})));
    CHECK_THROWS_AS(load_label_map(dir / "e.npy"), FormatError);
  }
  SUBCASE("neither format") {
    write_file(dir / "f.txt", "hello");
    CHECK_THROWS_AS(load_label_map(dir / "f.txt"), FormatError);
  }
}

TEST_CASE("report: deterministic sorted output") {
  ReportDocument doc;
  doc.payload["total"] = 0.0;
  const std::string a = serialize_report(doc);
  CHECK(a == serialize_report(doc));
  CHECK(a == "{\n  \"schema_version\": \"bpkd-report/1\",\n  \"total\": 0.0\n}\n");

  ReportDocument nested;
  nested.payload["zeta"] = 1;
  nested.payload["edge"]["per_class"] = {0.1, 0.2};
  const std::string b = serialize_report(nested);
  CHECK(b.find("\"edge\"") < b.find("\"schema_version\""));
  CHECK(b.find("\"schema_version\"") < b.find("\"zeta\""));
  CHECK(b.find("0.10000000000000001") != std::string::npos);
  CHECK(nlohmann::json::parse(b)["edge"]["per_class"][1] == 0.2);
  CHECK(b.find('\r') == std::string::npos);

  TempDir dir("report");
  save_report(nested, dir / "r1.json");
  save_report(nested, dir / "r2.json");
  CHECK(read_file(dir / "r1.json") == read_file(dir / "r2.json"));
}

TEST_CASE("report: rejects what it cannot represent") {
  ReportDocument doc;
  doc.payload["bad"] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(serialize_report(doc), SchemaError);

  ReportDocument nan_in_array;
  nan_in_array.payload["v"] = {1.0, std::nan("")};
  CHECK_THROWS_AS(serialize_report(nan_in_array), SchemaError);

  ReportDocument obj_in_array;
  obj_in_array.payload["v"] = nlohmann::json::array({nlohmann::json::object({{"a", 1}})});
  CHECK_THROWS_AS(serialize_report(obj_in_array), SchemaError);

  ReportDocument reserved;
  reserved.payload["schema_version"] = "x";
  CHECK_THROWS_AS(serialize_report(reserved), SchemaError);

  ReportDocument nulls;
  nulls.payload["miou"] = nullptr;
  CHECK(serialize_report(nulls).find("\"miou\": null") != std::string::npos);
}
