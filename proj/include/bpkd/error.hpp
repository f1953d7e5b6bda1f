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

#include <stdexcept>
#include <string>

namespace bpkd {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unsupported file contents (bad magic, wrong dtype, truncated data, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File system failure; the message carries the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Values that violate a type invariant (non-finite, out-of-range label, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Operands whose extents disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration parameter (even width, negative weight, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Report payload that cannot be serialized.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Statistic that is undefined on the given input (empty band, zero variance).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace bpkd
