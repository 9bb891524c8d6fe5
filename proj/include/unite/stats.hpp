// Copyright 2026 the unite-desk authors
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

#include <algorithm>
#include <span>
#include <vector>

namespace unite {

// Arithmetic mean that is independent of input order and returns x exactly
// when every input equals x: values are sorted, then averaged as offsets from
// the smallest one.
inline double exact_mean(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double base = sorted.front();
  double offset = 0.0;
  for (double v : sorted) offset += v - base;
  return base + offset / static_cast<double>(sorted.size());
}

}  // namespace unite
