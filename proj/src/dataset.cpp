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

#include "unite/dataset.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <utility>

#include "unite/error.hpp"
#include "unite/io.hpp"

namespace unite::data {

namespace {

enum Column { kId, kDirection, kDomain, kSystem, kSource, kHypothesis, kReference, kScore, kColumnCount };

constexpr std::array<std::string_view, kColumnCount> kColumnNames{
    "segment-id", "direction", "domain", "system", "source", "hypothesis", "reference", "score"};

}  // namespace

std::vector<text::SegmentRecord> read_segments(const std::string& path) {
  auto in = io::open_input(path);
  return read_segments(in, path);
}

std::vector<text::SegmentRecord> read_segments(std::istream& in, std::string_view origin) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, at_line(origin, 1, "missing header row"));
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::array<std::optional<std::size_t>, kColumnCount> position{};
  const auto header = io::split_tabs(line);
  for (std::size_t i = 0; i < header.size(); ++i) {
    bool known = false;
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      if (header[i] == kColumnNames[c]) {
        if (position[c]) throw Error(ErrorKind::Parse, at_line(origin, 1, "duplicate column " + std::string(header[i])));
        position[c] = i;
        known = true;
      }
    }
    if (!known) throw Error(ErrorKind::Parse, at_line(origin, 1, "unknown column " + std::string(header[i])));
  }
  for (auto required : {kId, kSource, kHypothesis}) {
    if (!position[required]) {
      throw Error(ErrorKind::Parse, at_line(origin, 1, "missing column " + std::string(kColumnNames[required])));
    }
  }

  std::vector<text::SegmentRecord> records;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = io::split_tabs(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::Parse, at_line(origin, line_no,
                                            "expected " + std::to_string(header.size()) + " fields, got " +
                                                std::to_string(fields.size())));
    }
    auto cell = [&](Column c) -> std::string_view { return position[c] ? fields[*position[c]] : std::string_view{}; };

    text::SegmentRecord record;
    record.segment_id = cell(kId);
    record.direction = cell(kDirection);
    record.domain = cell(kDomain);
    record.system = cell(kSystem);
    record.source = cell(kSource);
    record.hypothesis = cell(kHypothesis);
    if (!cell(kReference).empty()) record.reference = std::string(cell(kReference));
    if (!cell(kScore).empty()) {
      auto score = io::parse_double(cell(kScore));
      if (!score) throw Error(ErrorKind::Parse, at_line(origin, line_no, "bad score '" + std::string(cell(kScore)) + "'"));
      record.score = *score;
    }
    if (record.segment_id.empty()) throw Error(ErrorKind::Parse, at_line(origin, line_no, "empty segment-id"));
    try {
      text::validate(record);
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, at_line(origin, line_no, e.what()));
    }
    if (!seen.emplace(record.segment_id, record.system).second) {
      throw Error(ErrorKind::Parse, at_line(origin, line_no,
                                            "duplicate (segment-id, system) " + record.segment_id + "/" + record.system));
    }
    records.push_back(std::move(record));
  }
  return records;
}

void write_segments(std::ostream& out, std::span<const text::SegmentRecord> records) {
  out << kSegmentHeader << '\n';
  for (const auto& r : records) {
    out << r.segment_id << '\t' << r.direction << '\t' << r.domain << '\t' << r.system << '\t' << r.source << '\t'
        << r.hypothesis << '\t' << r.reference.value_or("") << '\t' << (r.score ? io::format_double(*r.score) : "")
        << '\n';
  }
}

}  // namespace unite::data
