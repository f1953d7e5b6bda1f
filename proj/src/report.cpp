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

#include "bpkd/report.hpp"

#include <cmath>
#include <cstdio>

#include "bpkd/error.hpp"
#include "bpkd/tensor_io.hpp"

namespace bpkd {
namespace {

using nlohmann::json;

void append_string(std::string& out, const std::string& s) {
  // nlohmann's escaping is deterministic; reuse it for a bare string
  out += json(s).dump(-1, ' ', false, json::error_handler_t::strict);
}

void append_float(std::string& out, double v, const std::string& where) {
  if (!std::isfinite(v)) throw SchemaError("non-finite number at " + where);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  std::string s(buf);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  out += s;
}

void write_node(std::string& out, const json& node, int indent, int depth, bool in_array,
                const std::string& where) {
  const auto pad = [&](int d) {
    if (indent >= 0) {
      out += '\n';
      out.append(static_cast<std::size_t>(indent * d), ' ');
    }
  };
  const char* sep = indent >= 0 ? ": " : ":";
  switch (node.type()) {
    case json::value_t::null:
      out += "null";
      return;
    case json::value_t::boolean:
      out += node.get<bool>() ? "true" : "false";
      return;
    case json::value_t::number_integer:
      out += std::to_string(node.get<std::int64_t>());
      return;
    case json::value_t::number_unsigned:
      out += std::to_string(node.get<std::uint64_t>());
      return;
    case json::value_t::number_float:
      append_float(out, node.get<double>(), where);
      return;
    case json::value_t::string:
      append_string(out, node.get<std::string>());
      return;
    case json::value_t::array: {
      if (node.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      std::size_t i = 0;
      for (const auto& item : node) {
        if (item.is_object()) throw SchemaError("object inside array at " + where);
        if (i) out += ',';
        pad(depth + 1);
        write_node(out, item, indent, depth + 1, true, where + "[" + std::to_string(i) + "]");
        ++i;
      }
      pad(depth);
      out += ']';
      return;
    }
    case json::value_t::object: {
      if (in_array) throw SchemaError("object inside array at " + where);
      if (node.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      // json::object_t is a std::map, so iteration is already in sorted key order
      for (const auto& [key, value] : node.items()) {
        if (!first) out += ',';
        first = false;
        pad(depth + 1);
        append_string(out, key);
        out += sep;
        write_node(out, value, indent, depth + 1, false, where + "." + key);
      }
      pad(depth);
      out += '}';
      return;
    }
    default:
      throw SchemaError("non-serializable node at " + where);
  }
}

}  // namespace

std::string serialize_report(const ReportDocument& report) {
  if (!report.payload.is_object()) throw SchemaError("report payload must be an object");
  if (report.payload.contains("schema_version")) {
    throw SchemaError("payload may not define the reserved key schema_version");
  }
  json doc = report.payload;
  doc["schema_version"] = report.schema_version;
  std::string out;
  write_node(out, doc, 2, 0, false, "$");
  out += '\n';
  return out;
}

void save_report(const ReportDocument& report, const std::filesystem::path& path) {
  write_file(path, serialize_report(report));
}

std::string serialize_compact(const nlohmann::json& value) {
  std::string out;
  write_node(out, value, -1, 0, false, "$");
  return out;
}

}  // namespace bpkd
