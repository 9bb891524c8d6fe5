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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace unite::eval {

// One metric prediction bound to a segment, optionally joined with the human
// judgment of the same segment.
struct ScoreRecord {
  std::string segment_id;
  std::string direction;
  std::string domain;
  std::string system;
  double metric = 0.0;
  std::optional<double> human;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

inline constexpr std::string_view kScoreHeader = "segment-id\tdirection\tdomain\tsystem\tmetric\thuman";

// TSV with the header above; empty human cells mean "no judgment".
// (segment-id, system) must be unique and every metric finite.
std::vector<ScoreRecord> read_scores(const std::string& path);
std::vector<ScoreRecord> read_scores(std::istream& in, std::string_view origin);
void write_scores(std::ostream& out, std::span<const ScoreRecord> records);

struct TauCell {
  std::size_t concordant = 0;
  std::size_t discordant = 0;

  std::size_t pairs() const { return concordant + discordant; }
  // Absent when no pair survived the threshold.
  std::optional<double> tau() const;

  TauCell& operator+=(const TauCell& other) {
    concordant += other.concordant;
    discordant += other.discordant;
    return *this;
  }
  friend bool operator==(const TauCell&, const TauCell&) = default;
};

// Pairs are two systems' outputs for the same segment id whose human scores
// differ by more than threshold. A pair is concordant when the metric orders
// it the same way as the humans; metric ties count as discordant. Records
// without a human score are ignored.
TauCell tau_counts(std::span<const ScoreRecord> records, double threshold);

using GroupKey = std::function<std::string(const ScoreRecord&)>;

std::map<std::string, TauCell> kendall_tau_variant(std::span<const ScoreRecord> records, const GroupKey& key,
                                                   double threshold);

struct Correlation {
  std::optional<double> value;
  std::string diagnostic;  // why the value is absent
};

Correlation pearson(std::span<const double> x, std::span<const double> y);
// Pearson on ranks, ties sharing their average rank.
Correlation spearman(std::span<const double> x, std::span<const double> y);
// Metric against human over the records that have a human score.
Correlation pearson(std::span<const ScoreRecord> records);
Correlation spearman(std::span<const ScoreRecord> records);

std::vector<double> average_ranks(std::span<const double> values);

struct EvalReport {
  double threshold = 0.0;
  std::vector<std::string> domains;
  std::vector<std::string> directions;
  std::map<std::pair<std::string, std::string>, TauCell> cells;  // (domain, direction)
  std::map<std::string, TauCell> direction_totals;               // pooled over domains
  std::map<std::string, TauCell> domain_totals;                  // pooled over directions
  TauCell all;                                                   // pooled over every pair
  std::size_t excluded = 0;
  std::size_t records = 0;
  Correlation pearson;
  Correlation spearman;
};

// Empty domain/direction lists mean "every tag present, sorted". Records whose
// tags are not listed are excluded and counted.
EvalReport build_report(std::span<const ScoreRecord> records, std::vector<std::string> domains,
                        std::vector<std::string> directions, double threshold);

// Aligned table, taus as percentages with one decimal, "-" for absent cells.
std::string format_report(const EvalReport& report);
std::string report_json(const EvalReport& report);

}  // namespace unite::eval
