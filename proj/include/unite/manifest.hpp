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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace unite {

inline constexpr const char* kVersion = "0.1.0";

// Record of one CLI invocation, written next to its primary output.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::map<std::string, std::string> config;  // resolved settings, defaults included
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::string started_at;   // UTC, ISO 8601
  std::string finished_at;

  std::string to_json() const;
};

std::string utc_timestamp();

// "<output>.manifest.json"
std::string manifest_path(const std::string& output);

// Stamps finished_at and writes atomically to manifest_path(primary_output).
void write_manifest(RunManifest manifest, const std::string& primary_output);

}  // namespace unite
