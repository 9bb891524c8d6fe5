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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "learnability.hpp"
#include "smoke.hpp"
#include "unite/ensemble.hpp"
#include "unite/evaluation.hpp"
#include "unite/io.hpp"
#include "unite/synthesis.hpp"
#include "unite/toy_corpus.hpp"

namespace fs = std::filesystem;
using namespace unite;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("%s criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
}

void guarded(int id, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

// ------------------------------------------------------------------ 1

void gradient_correctness() {
  const auto start = clock_type::now();
  constexpr int kInstances = 20;
  double worst = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
  std::mt19937_64 rng(2024);
  for (int i = 0; i < kInstances; ++i) {
    model::EncoderConfig config;  // desk defaults
    config.vocab_size = 40 + rng() % 40;
    config.seed = 1000 + i;
    auto m = model::init_model(config);
    // Move away from the initial point so gains and biases are not special.
    std::normal_distribution<double> jitter(0.0, 0.02);
    m.params.for_each([&](auto, Tensor& t, model::ParamGroup) {
      for (auto& v : t.values) v += jitter(rng);
    });

    const std::size_t batch_size = 1 + rng() % 3;
    std::vector<text::InputSequence> sequences(batch_size);
    std::vector<model::TrainingItem> batch;
    std::normal_distribution<double> target(0.0, 1.0);
    for (auto& seq : sequences) {
      const std::size_t n = 4 + rng() % 16;
      seq.ids.push_back(text::kBos);
      for (std::size_t k = 1; k + 1 < n; ++k) {
        seq.ids.push_back(k == n / 2 ? text::kDel : static_cast<text::TokenId>(4 + rng() % (config.vocab_size - 4)));
      }
      seq.ids.push_back(text::kEos);
    }
    for (auto& seq : sequences) batch.push_back({&seq, target(rng)});

    const auto analytic = model::backward(m, batch);
    const auto result = testing::gradient_check(m, batch, analytic.grads, 6, 77 + i);
    checked += result.checked;
    if (result.max_relative_error > worst) {
      worst = result.max_relative_error;
      worst_tensor = result.worst_tensor;
    }
  }
  const double elapsed = seconds_since(start);
  report(1, "gradient correctness", worst < 1e-4 && elapsed < 120.0,
         std::to_string(kInstances) + " instances, " + std::to_string(checked) +
             " coordinates, max relative error " + sci(worst) + " (" + worst_tensor + "), " +
             num(elapsed, 1) + "s");
}

// ------------------------------------------------------------------ 2

void loss_identity(const testing::LearnabilityResult& run) {
  std::size_t records = 0, violations = 0;
  for (const auto& seed : run.runs) {
    for (const auto& history : seed.histories) {
      for (const auto& s : history.steps) {
        ++records;
        if (s.loss_total != s.loss_ref + s.loss_src + s.loss_srcref) ++violations;
        if (s.batch_sizes[0] != s.batch_sizes[1] || s.batch_sizes[1] != s.batch_sizes[2]) ++violations;
      }
    }
  }
  report(2, "loss identity", records > 0 && violations == 0,
         std::to_string(records) + " history records over " + std::to_string(run.runs.size()) +
             " seeds x 3 stages, " + std::to_string(violations) + " violations");
}

// ------------------------------------------------------------------ 3

eval::TauCell all_pairs_oracle(const std::vector<eval::ScoreRecord>& r, double threshold) {
  eval::TauCell cell;
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = i + 1; j < r.size(); ++j) {
      if (r[i].segment_id != r[j].segment_id || r[i].direction != r[j].direction) continue;
      if (!r[i].human || !r[j].human) continue;
      const double dh = *r[i].human - *r[j].human;
      if (!(std::fabs(dh) > threshold)) continue;
      const double dm = r[i].metric - r[j].metric;
      if ((dh > 0 && dm > 0) || (dh < 0 && dm < 0)) {
        cell.concordant++;
      } else {
        cell.discordant++;
      }
    }
  }
  return cell;
}

void kendall_oracle() {
  std::mt19937_64 rng(31337);
  std::size_t mismatches = 0, perfect_failures = 0, perfect_instances = 0;
  constexpr int kInstances = 1000;
  for (int inst = 0; inst < kInstances; ++inst) {
    const bool perfect = inst % 10 == 0;
    const int segments = 1 + static_cast<int>(rng() % 10);
    std::vector<eval::ScoreRecord> records;
    for (int s = 0; s < segments; ++s) {
      const int systems = 1 + static_cast<int>(rng() % 6);
      for (int k = 0; k < systems; ++k) {
        eval::ScoreRecord r;
        r.segment_id = "seg" + std::to_string(s);
        r.direction = s % 3 == 0 ? "zh-en" : "en-de";
        r.domain = "news";
        r.system = "sys" + std::to_string(k);
        if (perfect) {
          r.human = static_cast<double>(k) + 0.5 * static_cast<double>(rng() % 2);
          r.metric = 3.0 * *r.human - 1.0;
        } else {
          r.metric = static_cast<double>(rng() % 5);
          if (rng() % 5) r.human = static_cast<double>(rng() % 5);
        }
        records.push_back(std::move(r));
      }
    }
    const double threshold = perfect ? 0.0 : static_cast<double>(rng() % 3) * 0.5;
    const auto grouped = eval::tau_counts(records, threshold);
    if (!(grouped == all_pairs_oracle(records, threshold))) ++mismatches;
    if (perfect) {
      ++perfect_instances;
      const auto tau = grouped.tau();
      if (tau && *tau != 1.0) ++perfect_failures;
    }
  }
  report(3, "Kendall oracle equivalence", mismatches == 0 && perfect_failures == 0,
         std::to_string(kInstances) + " instances, " + std::to_string(mismatches) + " mismatches; " +
             std::to_string(perfect_instances) + " perfect-agreement instances, " + std::to_string(perfect_failures) +
             " with tau != 1");
}

// ------------------------------------------------------------------ 4

double bisection_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void rank_normalization() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  std::vector<synth::SyntheticExample> base;
  for (int i = 0; i < 500; ++i) {
    synth::SyntheticExample ex;
    ex.record.segment_id = "s" + std::to_string(i);
    ex.record.direction = i % 3 ? "en-de" : "zh-en";
    ex.record.system = "sys";
    ex.mean_raw_score = normal(rng);
    base.push_back(ex);
  }
  auto normalized = base;
  synth::rank_normalize(normalized);

  const std::vector<std::function<double(double)>> transforms{
      [](double x) { return 2.5 * x + 10.0; }, [](double x) { return std::exp(x); },
      [](double x) { return x * x * x; }, [](double x) { return std::atan(x) - 100.0; }};
  std::size_t differences = 0;
  for (const auto& f : transforms) {
    auto transformed = base;
    for (auto& ex : transformed) ex.mean_raw_score = f(*ex.mean_raw_score);
    synth::rank_normalize(transformed);
    for (std::size_t i = 0; i < base.size(); ++i) {
      if (*transformed[i].final_score != *normalized[i].final_score) ++differences;
    }
  }

  std::vector<synth::SyntheticExample> two(2);
  two[0].record.segment_id = "a";
  two[0].mean_raw_score = 0.3;
  two[1].record.segment_id = "b";
  two[1].mean_raw_score = -2.0;
  synth::rank_normalize(two);
  const double hi = *two[0].final_score, lo = *two[1].final_score;
  const double dev = std::max(std::fabs(hi - bisection_quantile(0.75)), std::fabs(lo - bisection_quantile(0.25)));
  const bool n2_ok = dev < 1e-3 && std::fabs(hi - 0.6745) < 1e-3 && std::fabs(lo + 0.6745) < 1e-3;
  report(4, "rank-normalization invariants", differences == 0 && n2_ok,
         std::to_string(transforms.size()) + " monotone transforms x " + std::to_string(base.size()) +
             " records, " + std::to_string(differences) + " differences; N=2 gives " + num(lo, 6) + ", " +
             num(hi, 6) + " (oracle deviation " + sci(dev) + ")");
}

// ------------------------------------------------------------------ 5

void corruption_ratio() {
  const toy::ToyCorpusConfig corpus;
  const auto pairs = toy::make_parallel(corpus, 500, 5);
  synth::NoiseGenerator generator(0.0, 0.6, 5, synth::reference_word_pool(pairs));
  auto examples = synth::generate_hypotheses(pairs, generator).examples;
  const auto before = examples;
  std::mt19937_64 rng(5);
  synth::downgrade_quality(examples, 0.15, rng);
  std::size_t corrupted = 0, not_shorter = 0, changed_clean = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto old_len = synth::word_count(before[i].record.hypothesis);
    const auto new_len = synth::word_count(examples[i].record.hypothesis);
    if (examples[i].downgraded) {
      ++corrupted;
      if (!(new_len < old_len)) ++not_shorter;
    } else if (examples[i].record.hypothesis != before[i].record.hypothesis) {
      ++changed_clean;
    }
  }
  report(5, "corruption ratio", examples.size() == 1000 && corrupted == 150 && not_shorter == 0 && changed_clean == 0,
         "N=" + std::to_string(examples.size()) + ", corrupted " + std::to_string(corrupted) + ", not shorter " +
             std::to_string(not_shorter) + ", untouched but changed " + std::to_string(changed_clean));
}

// ------------------------------------------------------------------ 6

void learnability(const testing::LearnabilityResult& run) {
  bool pass = run.synthetic_records >= 2000 && run.directions >= 2 && run.seconds < 15 * 60;
  std::string detail = std::to_string(run.directions) + " directions, " + std::to_string(run.synthetic_records) +
                       " synthetic records, " + num(run.seconds, 1) + "s for " + std::to_string(run.seeds.size()) +
                       " seeds;";
  for (const auto& s : run.seeds) {
    pass = pass && s.tau[2] >= 0.5 && s.tau[0] >= 0.3 && s.tau[1] >= 0.3;
    detail += " seed " + std::to_string(s.seed) + " src " + num(s.tau[0], 3) + " ref " + num(s.tau[1], 3) +
              " src+ref " + num(s.tau[2], 3) + ";";
  }
  detail.pop_back();
  report(6, "desk-scale learnability", pass && !run.seeds.empty(), detail);
}

// ------------------------------------------------------------------ 7

void ensembling(const testing::LearnabilityResult& run, const fs::path& dir) {
  // k identical prediction files, through the TSV format.
  const auto& single = run.seeds.front().predictions[2];
  const auto single_path = dir / "single.tsv";
  io::write_atomic(single_path.string(), [&](std::ostream& out) { eval::write_scores(out, single); });
  bool identical = true;
  for (std::size_t k = 2; k <= 5; ++k) {
    std::vector<std::vector<eval::ScoreRecord>> members;
    for (std::size_t i = 0; i < k; ++i) members.push_back(eval::read_scores(single_path.string()));
    const auto averaged = ensemble::average_predictions(members);
    const auto path = dir / ("averaged-" + std::to_string(k) + ".tsv");
    io::write_atomic(path.string(), [&](std::ostream& out) { eval::write_scores(out, averaged); });
    identical = identical && testing::read_file(path) == testing::read_file(single_path);
  }

  std::vector<std::vector<eval::ScoreRecord>> seeds;
  double best_single = -1.0;
  for (const auto& s : run.seeds) {
    seeds.push_back(s.predictions[2]);
    best_single = std::max(best_single, s.tau[2]);
  }
  const double ensemble_tau = testing::overall_tau(ensemble::average_predictions(seeds));
  report(7, "ensembling", identical && seeds.size() == 3 && ensemble_tau >= best_single - 0.05,
         std::string("k=2..5 identical files ") + (identical ? "byte-identical" : "DIFFER") + "; " +
             std::to_string(seeds.size()) + "-seed src+ref tau " + num(ensemble_tau, 3) + " vs best single " +
             num(best_single, 3));
}

// ------------------------------------------------------------------ 8

void determinism(const std::string& cli, const fs::path& dir) {
  const auto a = testing::run_smoke_pipeline(cli, dir / "run-a", 11);
  const auto b = testing::run_smoke_pipeline(cli, dir / "run-b", 11);
  if (!a.ok || !b.ok) {
    report(8, "determinism", false, "smoke pipeline failed at " + (a.ok ? b.failed_step : a.failed_step));
    return;
  }
  std::size_t compared = 0, differing = 0;
  std::string first_difference;
  for (const auto& entry : fs::recursive_directory_iterator(a.dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a.dir);
    const auto name = rel.string();
    // Manifests carry timestamps and logs carry paths.
    if (name.ends_with(".manifest.json") || name.rfind("log.", 0) == 0) continue;
    ++compared;
    if (testing::read_file(entry.path()) != testing::read_file(b.dir / rel)) {
      ++differing;
      if (first_difference.empty()) first_difference = name;
    }
  }
  report(8, "determinism", compared > 0 && differing == 0,
         std::to_string(compared) + " artifacts compared (scores, reports, checkpoints, corpora), " +
             std::to_string(differing) + " differ" + (first_difference.empty() ? "" : " (" + first_difference + ")"));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path to unite binary>\n");
    return 2;
  }
  const std::string cli = argv[1];
  const auto dir = fs::temp_directory_path() / "unite-acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  guarded(1, "gradient correctness", gradient_correctness);

  testing::LearnabilitySettings settings;
  settings.verbose = std::getenv("UNITE_VERBOSE") != nullptr;
  std::optional<testing::LearnabilityResult> run;
  try {
    run = testing::run_learnability(settings);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "learnability run failed: %s\n", e.what());
  }

  if (run) {
    guarded(2, "loss identity", [&] { loss_identity(*run); });
  } else {
    report(2, "loss identity", false, "training run failed");
  }
  guarded(3, "Kendall oracle equivalence", kendall_oracle);
  guarded(4, "rank-normalization invariants", rank_normalization);
  guarded(5, "corruption ratio", corruption_ratio);
  if (run) {
    guarded(6, "desk-scale learnability", [&] { learnability(*run); });
    guarded(7, "ensembling", [&] { ensembling(*run, dir); });
  } else {
    report(6, "desk-scale learnability", false, "training run failed");
    report(7, "ensembling", false, "training run failed");
  }
  guarded(8, "determinism", [&] { determinism(cli, dir); });

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
