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

#include "unite/manifest.hpp"

#include <chrono>
#include <ctime>
#include <ostream>

#include "json.hpp"
#include "unite/io.hpp"

namespace unite {

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "unite.manifest/1";
  j["command"] = command;
  j["argv"] = argv;
  j["config"] = config;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["seed"] = seed;
  j["version"] = version;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  return j.dump(2) + "\n";
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

void write_manifest(RunManifest manifest, const std::string& primary_output) {
  manifest.finished_at = utc_timestamp();
  const std::string text = manifest.to_json();
  io::write_atomic(manifest_path(primary_output), [&](std::ostream& out) { out << text; });
}

}  // namespace unite
