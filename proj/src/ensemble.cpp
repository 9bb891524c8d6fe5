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

#include "unite/ensemble.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "json.hpp"
#include "unite/error.hpp"
#include "unite/io.hpp"
#include "unite/stats.hpp"

namespace unite::ensemble {

namespace {

using Key = std::pair<std::string, std::string>;  // (segment-id, system)

Key key_of(const eval::ScoreRecord& r) { return {r.segment_id, r.system}; }

std::map<Key, double> index(std::span<const eval::ScoreRecord> scores) {
  std::map<Key, double> out;
  for (const auto& r : scores) {
    if (!out.emplace(key_of(r), r.metric).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate key " + r.segment_id + "/" + r.system);
    }
  }
  return out;
}

std::string list_keys(const std::vector<Key>& keys) {
  constexpr std::size_t kShown = 5;
  std::string out;
  for (std::size_t i = 0; i < keys.size() && i < kShown; ++i) {
    if (i) out += ", ";
    out += keys[i].first + "/" + keys[i].second;
  }
  if (keys.size() > kShown) out += ", ... (" + std::to_string(keys.size()) + " total)";
  return out;
}

void check_same_keys(const std::map<Key, double>& base, const std::map<Key, double>& other,
                     const std::string& other_name) {
  if (base.size() == other.size() &&
      std::equal(base.begin(), base.end(), other.begin(), [](const auto& a, const auto& b) { return a.first == b.first; })) {
    return;
  }
  std::vector<Key> missing, extra;
  for (const auto& [k, v] : base) {
    if (!other.contains(k)) missing.push_back(k);
  }
  for (const auto& [k, v] : other) {
    if (!base.contains(k)) extra.push_back(k);
  }
  std::string msg = other_name + " does not cover the same keys";
  if (!missing.empty()) msg += "; missing " + list_keys(missing);
  if (!extra.empty()) msg += "; unexpected " + list_keys(extra);
  throw Error(ErrorKind::Mismatch, msg);
}

std::vector<std::string> sorted_unique(std::vector<std::string> ids, const std::string& what) {
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw Error(ErrorKind::InvalidArgument, what + " lists a checkpoint twice");
  }
  return ids;
}

// True when candidate a should be preferred over b.
bool better(const std::optional<double>& tau_a, const std::vector<std::string>& a, const std::optional<double>& tau_b,
            const std::vector<std::string>& b) {
  if (tau_a.has_value() != tau_b.has_value()) return tau_a.has_value();
  if (tau_a && *tau_a != *tau_b) return *tau_a > *tau_b;
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

std::vector<eval::ScoreRecord> average_predictions(std::span<const std::vector<eval::ScoreRecord>> members) {
  if (members.empty()) throw Error(ErrorKind::InvalidArgument, "nothing to average");
  std::vector<std::map<Key, double>> indexed;
  indexed.reserve(members.size());
  for (std::size_t m = 0; m < members.size(); ++m) {
    indexed.push_back(index(members[m]));
    if (m > 0) check_same_keys(indexed[0], indexed[m], "member " + std::to_string(m + 1));
  }
  std::vector<eval::ScoreRecord> out = members[0];
  std::vector<double> values(members.size());
  for (auto& r : out) {
    const Key k = key_of(r);
    for (std::size_t m = 0; m < members.size(); ++m) values[m] = indexed[m].at(k);
    r.metric = exact_mean(values);
  }
  return out;
}

const std::vector<std::string>& EnsembleSpec::members_for(const std::string& direction) const {
  auto it = directions.find(direction);
  return it == directions.end() ? default_members : it->second;
}

void EnsembleSpec::validate(std::span<const std::string> available) const {
  const std::set<std::string> known(available.begin(), available.end());
  auto check = [&](const std::vector<std::string>& ids, const std::string& where) {
    if (ids.empty()) throw Error(ErrorKind::InvalidArgument, "empty member list for " + where);
    sorted_unique(ids, where);
    for (const auto& id : ids) {
      if (!known.contains(id)) throw Error(ErrorKind::InvalidArgument, "unknown checkpoint '" + id + "' in " + where);
    }
  };
  check(default_members, "default");
  for (const auto& [direction, ids] : directions) check(ids, "direction " + direction);
}

std::string spec_json(const EnsembleSpec& spec) {
  nlohmann::ordered_json j;
  j["schema"] = kSpecSchema;
  j["default"] = spec.default_members;
  auto dirs = nlohmann::ordered_json::object();
  for (const auto& [direction, ids] : spec.directions) dirs[direction] = ids;
  j["directions"] = dirs;
  return j.dump(2) + "\n";
}

EnsembleSpec parse_spec(std::string_view text, std::string_view origin) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema").get<std::string>() != kSpecSchema) {
      throw Error(ErrorKind::Format, std::string(origin) + ": unsupported schema " + j.at("schema").get<std::string>());
    }
    EnsembleSpec spec;
    spec.default_members = j.at("default").get<std::vector<std::string>>();
    for (const auto& [direction, ids] : j.at("directions").items()) {
      spec.directions[direction] = ids.get<std::vector<std::string>>();
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string(origin) + ": " + e.what());
  }
}

EnsembleSpec load_spec(const std::string& path) {
  auto in = io::open_input(path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_spec(text.str(), path);
}

std::vector<std::vector<std::string>> all_subsets(std::vector<std::string> ids, std::size_t max_size) {
  ids = sorted_unique(std::move(ids), "subset pool");
  if (ids.size() > 20) throw Error(ErrorKind::InvalidArgument, "too many checkpoints to enumerate subsets");
  std::vector<std::vector<std::string>> out;
  for (std::size_t mask = 1; mask < (std::size_t{1} << ids.size()); ++mask) {
    std::vector<std::string> subset;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (mask & (std::size_t{1} << i)) subset.push_back(ids[i]);
    }
    if (subset.size() <= max_size) out.push_back(std::move(subset));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

Selection select_per_direction(std::span<const Member> members,
                               std::span<const std::vector<std::string>> candidates, double threshold) {
  if (members.empty()) throw Error(ErrorKind::InvalidArgument, "no members to select from");
  if (candidates.empty()) throw Error(ErrorKind::InvalidArgument, "no candidate subsets");

  std::map<std::string, const Member*> by_id;
  for (const auto& m : members) {
    if (!by_id.emplace(m.id, &m).second) throw Error(ErrorKind::InvalidArgument, "duplicate member id " + m.id);
  }

  // Directions every member has predictions for.
  std::map<std::string, std::size_t> seen_in;
  for (const auto& m : members) {
    std::set<std::string> dirs;
    for (const auto& r : m.scores) dirs.insert(r.direction);
    for (const auto& d : dirs) ++seen_in[d];
  }
  Selection selection;
  std::set<std::string> shared;
  for (const auto& [direction, count] : seen_in) {
    if (count == members.size()) {
      shared.insert(direction);
    } else {
      selection.warnings.push_back("direction " + direction + " is missing from " +
                                   std::to_string(members.size() - count) + " member(s); excluded");
    }
  }

  std::map<std::string, std::vector<eval::ScoreRecord>> filtered;
  for (const auto& m : members) {
    auto& out = filtered[m.id];
    std::copy_if(m.scores.begin(), m.scores.end(), std::back_inserter(out),
                 [&](const eval::ScoreRecord& r) { return shared.contains(r.direction); });
  }

  for (const auto& candidate : candidates) {
    CandidateScore score;
    score.members = sorted_unique(candidate, "candidate subset");
    if (score.members.empty()) throw Error(ErrorKind::InvalidArgument, "empty candidate subset");
    std::vector<std::vector<eval::ScoreRecord>> sets;
    for (const auto& id : score.members) {
      if (!by_id.contains(id)) throw Error(ErrorKind::InvalidArgument, "candidate names unknown member " + id);
      sets.push_back(filtered.at(id));
    }
    const auto averaged = average_predictions(sets);
    score.per_direction = eval::kendall_tau_variant(
        averaged, [](const eval::ScoreRecord& r) { return r.direction; }, threshold);
    score.all = eval::tau_counts(averaged, threshold);
    selection.candidates.push_back(std::move(score));
  }

  const CandidateScore* best_all = nullptr;
  for (const auto& c : selection.candidates) {
    if (!best_all || better(c.all.tau(), c.members, best_all->all.tau(), best_all->members)) best_all = &c;
  }
  selection.spec.default_members = best_all->members;

  for (const auto& direction : shared) {
    const CandidateScore* best = nullptr;
    std::optional<double> best_tau;
    for (const auto& c : selection.candidates) {
      auto it = c.per_direction.find(direction);
      const std::optional<double> tau = it == c.per_direction.end() ? std::nullopt : it->second.tau();
      if (!best || better(tau, c.members, best_tau, best->members)) {
        best = &c;
        best_tau = tau;
      }
    }
    selection.spec.directions[direction] = best->members;
  }
  return selection;
}

std::vector<eval::ScoreRecord> route_predictions(const EnsembleSpec& spec, std::span<const Member> members) {
  if (members.empty()) throw Error(ErrorKind::InvalidArgument, "no members to route");
  std::vector<std::string> ids;
  std::map<std::string, std::map<Key, double>> indexed;
  for (const auto& m : members) {
    ids.push_back(m.id);
    if (!indexed.emplace(m.id, index(m.scores)).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate member id " + m.id);
    }
  }
  spec.validate(ids);
  const auto& base = indexed.at(members[0].id);
  for (std::size_t m = 1; m < members.size(); ++m) check_same_keys(base, indexed.at(members[m].id), members[m].id);

  std::vector<eval::ScoreRecord> out = members[0].scores;
  std::vector<double> values;
  for (auto& r : out) {
    const Key k = key_of(r);
    values.clear();
    for (const auto& id : spec.members_for(r.direction)) values.push_back(indexed.at(id).at(k));
    r.metric = exact_mean(values);
  }
  return out;
}

}  // namespace unite::ensemble
