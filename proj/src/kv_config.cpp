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

#include "unite/kv_config.hpp"

#include <fstream>
#include <istream>

#include "unite/error.hpp"
#include "unite/io.hpp"
#include "unite/text.hpp"

namespace unite {

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  auto in = io::open_input(path);
  return parse(in, path);
}

KeyValueConfig KeyValueConfig::parse(std::istream& in, std::string_view origin) {
  KeyValueConfig config;
  config.origin_ = origin;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string trimmed = text::normalize_whitespace(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Parse, at_line(origin, line_no, "expected key = value"));
    std::string key = text::normalize_whitespace(trimmed.substr(0, eq));
    std::string value = text::normalize_whitespace(trimmed.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::Parse, at_line(origin, line_no, "empty key"));
    if (config.values_.contains(key)) throw Error(ErrorKind::Parse, at_line(origin, line_no, "duplicate key " + key));
    config.values_[key] = value;
    config.lines_[key] = line_no;
  }
  return config;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

namespace {

std::string where(const KeyValueConfig& c, const std::string& key) { return c.origin() + ": key " + key; }

}  // namespace

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto raw = get(key);
  if (!raw) return fallback;
  auto v = io::parse_double(*raw);
  if (!v) throw Error(ErrorKind::Parse, where(*this, key) + ": not a number: " + *raw);
  return *v;
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t fallback) const {
  auto raw = get(key);
  if (!raw) return fallback;
  auto v = io::parse_int(*raw);
  if (!v || *v < 0) throw Error(ErrorKind::Parse, where(*this, key) + ": not a non-negative integer: " + *raw);
  return static_cast<std::size_t>(*v);
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  return get_size(key, fallback);
}

void KeyValueConfig::require_all_used() const {
  for (const auto& [key, value] : values_) {
    if (!used_.contains(key)) {
      throw Error(ErrorKind::Parse, at_line(origin_, lines_.contains(key) ? lines_.at(key) : 0, "unknown key " + key));
    }
  }
}

}  // namespace unite
