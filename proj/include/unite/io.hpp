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

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace unite::io {

// Writes to "<path>.tmp" and renames over path, so readers never observe a
// partially written file.
void write_atomic(const std::string& path, const std::function<void(std::ostream&)>& writer);

std::ifstream open_input(const std::string& path);

std::vector<std::string_view> split_tabs(std::string_view line);

// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

// Strict parse of a whole field; nullopt on any trailing garbage or overflow.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

}  // namespace unite::io
