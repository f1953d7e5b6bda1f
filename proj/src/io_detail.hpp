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
#include <span>

#include "bpkd/tensor.hpp"

namespace bpkd::detail {

LabelMap decode_label_tensor(std::span<const std::uint8_t> bytes, Label ignore_value);
LabelMap decode_label_png(std::span<const std::uint8_t> bytes, Label ignore_value);

}  // namespace bpkd::detail
