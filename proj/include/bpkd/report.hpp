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

#include <filesystem>
#include <string>

#include <json.hpp>

namespace bpkd {

inline constexpr const char* kReportSchemaVersion = "bpkd-report/1";

/// JSON report: a payload object plus a schema_version key at the top level.
///
/// Serialization is a pure function of the value: keys are sorted, floats are
/// printed with 17 significant digits, indentation is two spaces and lines
/// end in LF. Payload nodes may be null, booleans, numbers, strings, arrays of
/// those (or of arrays), and nested objects; anything else, and any
/// non-finite number, is a SchemaError.
struct ReportDocument {
  std::string schema_version = kReportSchemaVersion;
  nlohmann::json payload = nlohmann::json::object();
};

std::string serialize_report(const ReportDocument& report);
void save_report(const ReportDocument& report, const std::filesystem::path& path);

/// Single-line form used for standard output.
std::string serialize_compact(const nlohmann::json& value);

}  // namespace bpkd
