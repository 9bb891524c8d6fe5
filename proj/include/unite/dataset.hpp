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

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unite/text.hpp"

namespace unite::data {

// Segment files are TSV with a header row. Required columns: segment-id,
// source, hypothesis. Optional: direction, domain, system, reference, score.
// Empty reference/score cells mean "absent".
inline constexpr std::string_view kSegmentHeader =
    "segment-id\tdirection\tdomain\tsystem\tsource\thypothesis\treference\tscore";

std::vector<text::SegmentRecord> read_segments(const std::string& path);
std::vector<text::SegmentRecord> read_segments(std::istream& in, std::string_view origin);

void write_segments(std::ostream& out, std::span<const text::SegmentRecord> records);

}  // namespace unite::data
