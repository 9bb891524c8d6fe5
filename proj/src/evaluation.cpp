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

#include "unite/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "unite/error.hpp"
#include "unite/io.hpp"

namespace unite::eval {

std::vector<ScoreRecord> read_scores(const std::string& path) {
  auto in = io::open_input(path);
  return read_scores(in, path);
}

std::vector<ScoreRecord> read_scores(std::istream& in, std::string_view origin) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, at_line(origin, 1, "missing header row"));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kScoreHeader) throw Error(ErrorKind::Parse, at_line(origin, 1, "unexpected header"));

  std::vector<ScoreRecord> records;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = io::split_tabs(line);
    if (f.size() != 6) throw Error(ErrorKind::Parse, at_line(origin, line_no, "expected 6 fields"));
    ScoreRecord r{std::string(f[0]), std::string(f[1]), std::string(f[2]), std::string(f[3]), 0.0, std::nullopt};
    auto metric = io::parse_double(f[4]);
    if (!metric || !std::isfinite(*metric)) {
      throw Error(ErrorKind::Parse, at_line(origin, line_no, "bad metric score '" + std::string(f[4]) + "'"));
    }
    r.metric = *metric;
    if (!f[5].empty()) {
      auto human = io::parse_double(f[5]);
      if (!human || !std::isfinite(*human)) {
        throw Error(ErrorKind::Parse, at_line(origin, line_no, "bad human score '" + std::string(f[5]) + "'"));
      }
      r.human = *human;
    }
    if (!seen.emplace(r.segment_id, r.system).second) {
      throw Error(ErrorKind::Parse,
                  at_line(origin, line_no, "duplicate (segment-id, system) " + r.segment_id + "/" + r.system));
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_scores(std::ostream& out, std::span<const ScoreRecord> records) {
  out << kScoreHeader << '\n';
  for (const auto& r : records) {
    out << r.segment_id << '\t' << r.direction << '\t' << r.domain << '\t' << r.system << '\t'
        << io::format_double(r.metric) << '\t' << (r.human ? io::format_double(*r.human) : "") << '\n';
  }
}

std::optional<double> TauCell::tau() const {
  if (pairs() == 0) return std::nullopt;
  return (static_cast<double>(concordant) - static_cast<double>(discordant)) / static_cast<double>(pairs());
}

TauCell tau_counts(std::span<const ScoreRecord> records, double threshold) {
  if (!(threshold >= 0.0)) throw Error(ErrorKind::InvalidArgument, "tau threshold must be non-negative");
  // Segment ids are only unique within a direction.
  std::map<std::pair<std::string_view, std::string_view>, std::vector<const ScoreRecord*>> segments;
  for (const auto& r : records) {
    if (r.human) segments[{r.direction, r.segment_id}].push_back(&r);
  }
  TauCell cell;
  for (const auto& [key, group] : segments) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (std::size_t j = i + 1; j < group.size(); ++j) {
        const double human_diff = *group[i]->human - *group[j]->human;
        if (!(std::abs(human_diff) > threshold)) continue;
        const double metric_diff = group[i]->metric - group[j]->metric;
        if ((human_diff > 0 && metric_diff > 0) || (human_diff < 0 && metric_diff < 0)) {
          ++cell.concordant;
        } else {
          ++cell.discordant;
        }
      }
    }
  }
  return cell;
}

std::map<std::string, TauCell> kendall_tau_variant(std::span<const ScoreRecord> records, const GroupKey& key,
                                                   double threshold) {
  std::map<std::string, std::vector<ScoreRecord>> groups;
  for (const auto& r : records) groups[key(r)].push_back(r);
  std::map<std::string, TauCell> out;
  for (const auto& [name, members] : groups) out[name] = tau_counts(members, threshold);
  return out;
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) return {std::nullopt, "length mismatch"};
  if (x.size() < 2) return {std::nullopt, "fewer than 2 scored records"};
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return {std::nullopt, "zero variance"};
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), ""};
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) return {std::nullopt, "length mismatch"};
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

namespace {

std::pair<std::vector<double>, std::vector<double>> scored(std::span<const ScoreRecord> records) {
  std::vector<double> metric, human;
  for (const auto& r : records) {
    if (!r.human) continue;
    metric.push_back(r.metric);
    human.push_back(*r.human);
  }
  return {metric, human};
}

std::string percent(const std::optional<double>& tau) {
  if (!tau) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *tau);
  return buf;
}

nlohmann::ordered_json cell_json(const TauCell& cell) {
  nlohmann::ordered_json j;
  const auto tau = cell.tau();
  j["tau"] = tau ? nlohmann::ordered_json(*tau) : nlohmann::ordered_json(nullptr);
  j["tau_percent"] = tau ? nlohmann::ordered_json(percent(tau)) : nlohmann::ordered_json(nullptr);
  j["concordant"] = cell.concordant;
  j["discordant"] = cell.discordant;
  j["pairs"] = cell.pairs();
  return j;
}

nlohmann::ordered_json correlation_json(const Correlation& c) {
  if (c.value) return *c.value;
  return nullptr;
}

}  // namespace

Correlation pearson(std::span<const ScoreRecord> records) {
  auto [m, h] = scored(records);
  return pearson(m, h);
}

Correlation spearman(std::span<const ScoreRecord> records) {
  auto [m, h] = scored(records);
  return spearman(m, h);
}

EvalReport build_report(std::span<const ScoreRecord> records, std::vector<std::string> domains,
                        std::vector<std::string> directions, double threshold) {
  EvalReport report;
  report.threshold = threshold;
  auto collect = [&](auto field) {
    std::set<std::string> tags;
    for (const auto& r : records) tags.insert(r.*field);
    return std::vector<std::string>(tags.begin(), tags.end());
  };
  if (domains.empty()) domains = collect(&ScoreRecord::domain);
  if (directions.empty()) directions = collect(&ScoreRecord::direction);
  report.domains = domains;
  report.directions = directions;

  const std::set<std::string> domain_set(domains.begin(), domains.end());
  const std::set<std::string> direction_set(directions.begin(), directions.end());
  std::map<std::pair<std::string, std::string>, std::vector<ScoreRecord>> by_cell;
  std::vector<ScoreRecord> kept;
  for (const auto& r : records) {
    if (!domain_set.contains(r.domain) || !direction_set.contains(r.direction)) {
      ++report.excluded;
      continue;
    }
    by_cell[{r.domain, r.direction}].push_back(r);
    kept.push_back(r);
  }
  report.records = kept.size();

  for (const auto& domain : domains) {
    for (const auto& direction : directions) {
      auto it = by_cell.find({domain, direction});
      const TauCell cell = it == by_cell.end() ? TauCell{} : tau_counts(it->second, threshold);
      report.cells[{domain, direction}] = cell;
      report.direction_totals[direction] += cell;
      report.domain_totals[domain] += cell;
      report.all += cell;
    }
  }
  report.pearson = pearson(kept);
  report.spearman = spearman(kept);
  return report;
}

std::string format_report(const EvalReport& report) {
  constexpr int kWidth = 9;
  std::ostringstream out;
  char buf[64];
  auto cell_text = [&](const std::string& s) {
    std::snprintf(buf, sizeof buf, "%*s", kWidth, s.c_str());
    return std::string(buf);
  };
  std::snprintf(buf, sizeof buf, "%.6g", report.threshold);
  out << "Kendall's tau (%), threshold " << buf << ", " << report.records << " records";
  if (report.excluded) out << ", " << report.excluded << " excluded";
  out << "\n";

  std::string domain_row = std::string(8, ' ');
  std::string direction_row = std::string(8, ' ');
  std::string tau_row = "tau     ";
  std::string pair_row = "pairs   ";
  for (const auto& domain : report.domains) {
    std::string label = domain.substr(0, kWidth * report.directions.size());
    domain_row += label + std::string(kWidth * report.directions.size() - label.size(), ' ');
    for (const auto& direction : report.directions) {
      const auto& cell = report.cells.at({domain, direction});
      direction_row += cell_text(direction);
      tau_row += cell_text(percent(cell.tau()));
      pair_row += cell_text(std::to_string(cell.pairs()));
    }
  }
  domain_row += cell_text("All");
  direction_row += std::string(kWidth, ' ');
  tau_row += cell_text(percent(report.all.tau()));
  pair_row += cell_text(std::to_string(report.all.pairs()));
  auto rstrip = [](std::string s) {
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
  };
  out << rstrip(domain_row) << "\n" << rstrip(direction_row) << "\n" << tau_row << "\n" << pair_row << "\n";

  out << "per direction:";
  for (const auto& direction : report.directions) {
    out << " " << direction << "=" << percent(report.direction_totals.at(direction).tau());
  }
  out << "\n";
  auto corr = [](const Correlation& c) {
    if (!c.value) return std::string("- (") + c.diagnostic + ")";
    char b[32];
    std::snprintf(b, sizeof b, "%.4f", *c.value);
    return std::string(b);
  };
  out << "pearson " << corr(report.pearson) << ", spearman " << corr(report.spearman) << "\n";
  return out.str();
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["threshold"] = report.threshold;
  j["records"] = report.records;
  j["excluded"] = report.excluded;
  j["domains"] = report.domains;
  j["directions"] = report.directions;
  auto cells = nlohmann::ordered_json::array();
  for (const auto& domain : report.domains) {
    for (const auto& direction : report.directions) {
      auto c = cell_json(report.cells.at({domain, direction}));
      c["domain"] = domain;
      c["direction"] = direction;
      cells.push_back(c);
    }
  }
  j["cells"] = cells;
  auto per_direction = nlohmann::ordered_json::object();
  for (const auto& direction : report.directions) per_direction[direction] = cell_json(report.direction_totals.at(direction));
  j["directions_pooled"] = per_direction;
  auto per_domain = nlohmann::ordered_json::object();
  for (const auto& domain : report.domains) per_domain[domain] = cell_json(report.domain_totals.at(domain));
  j["domains_pooled"] = per_domain;
  j["all"] = cell_json(report.all);
  j["pearson"] = correlation_json(report.pearson);
  j["spearman"] = correlation_json(report.spearman);
  return j.dump(2) + "\n";
}

}  // namespace unite::eval
