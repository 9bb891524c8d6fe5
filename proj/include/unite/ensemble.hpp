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

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unite/evaluation.hpp"

namespace unite::ensemble {

// One member's predictions, identified by the checkpoint that produced them.
struct Member {
  std::string id;
  std::vector<eval::ScoreRecord> scores;
};

// Mean of the members' metric scores per (segment-id, system). Metadata and
// human scores come from the first member; output order follows it too.
// Throws Mismatch naming the missing keys when key sets differ.
std::vector<eval::ScoreRecord> average_predictions(std::span<const std::vector<eval::ScoreRecord>> members);

// Which checkpoints to average for each direction.
struct EnsembleSpec {
  std::map<std::string, std::vector<std::string>> directions;
  std::vector<std::string> default_members;

  const std::vector<std::string>& members_for(const std::string& direction) const;
  // Throws when a list is empty or names an id outside available.
  void validate(std::span<const std::string> available) const;

  friend bool operator==(const EnsembleSpec&, const EnsembleSpec&) = default;
};

inline constexpr std::string_view kSpecSchema = "unite.ensemble/1";

std::string spec_json(const EnsembleSpec& spec);
EnsembleSpec parse_spec(std::string_view text, std::string_view origin);
EnsembleSpec load_spec(const std::string& path);

struct CandidateScore {
  std::vector<std::string> members;
  std::map<std::string, eval::TauCell> per_direction;
  eval::TauCell all;
};

struct Selection {
  EnsembleSpec spec;
  std::vector<CandidateScore> candidates;
  std::vector<std::string> warnings;
};

// For every direction picks the candidate subset whose averaged dev
// predictions give the highest tau there. Ties go to the smaller subset, then
// to the lexicographically smaller sorted id list. The default member list is
// chosen the same way on the pooled tau. A direction missing from some
// member's predictions is skipped with a warning.
Selection select_per_direction(std::span<const Member> members,
                               std::span<const std::vector<std::string>> candidates, double threshold);

// Every non-empty subset of ids with at most max_size elements, sorted.
std::vector<std::vector<std::string>> all_subsets(std::vector<std::string> ids, std::size_t max_size);

// Averages, for each record, the members the spec routes its direction to.
// Every member needs the full key set of the first referenced member.
std::vector<eval::ScoreRecord> route_predictions(const EnsembleSpec& spec, std::span<const Member> members);

}  // namespace unite::ensemble
