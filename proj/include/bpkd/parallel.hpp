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
#include <functional>

namespace bpkd {

/// Worker count: BPKD_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

/// Runs fn(i) for every i in [0, n). Each index must write only its own
/// outputs; callers reduce the per-index results afterwards in index order, so
/// results never depend on the schedule. Rethrows the first exception raised.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace bpkd
