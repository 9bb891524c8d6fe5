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

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "unite/error.hpp"
#include "unite/synthesis.hpp"
#include "unite/toy_corpus.hpp"

using namespace unite;
using synth::CorruptionKind;
using synth::SyntheticExample;

namespace {

// Inverts 0.5 * erfc(-x / sqrt(2)) by bisection.
double quantile_by_bisection(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SyntheticExample labeled(std::string direction, std::string id, double raw) {
  SyntheticExample ex;
  ex.record.segment_id = std::move(id);
  ex.record.direction = std::move(direction);
  ex.record.system = "sys";
  ex.record.source = "s";
  ex.record.hypothesis = "h";
  ex.mean_raw_score = raw;
  return ex;
}

std::vector<SyntheticExample> word_examples(std::size_t n, std::mt19937_64& rng) {
  std::vector<SyntheticExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    SyntheticExample ex;
    ex.record.segment_id = "s" + std::to_string(i);
    ex.record.direction = "en-de";
    ex.record.system = "noise";
    ex.record.source = "source";
    const std::size_t words = 2 + rng() % 12;
    for (std::size_t w = 0; w < words; ++w) ex.record.hypothesis += (w ? " w" : "w") + std::to_string(w);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

TEST_CASE("ingest keeps well-formed pairs and counts skipped lines") {
  std::istringstream in("a b\tx y\nno tab here\n\tx\n a  b \t  y \nthree\tfields\there\n\n");
  const auto result = synth::ingest_parallel(in, "p.tsv", "en-de");
  REQUIRE(result.pairs.size() == 2);
  CHECK(result.pairs[0] == synth::ParallelPair{"a b", "x y", "en-de"});
  CHECK(result.pairs[1] == synth::ParallelPair{"a b", "y", "en-de"});
  CHECK(result.warnings == 4);
  CHECK(result.messages[0] == "p.tsv:2: expected source<TAB>reference, skipped");
  CHECK(result.messages[1] == "p.tsv:3: blank source or reference, skipped");
}

TEST_CASE("identity generator copies the reference") {
  synth::IdentityGenerator g;
  const auto h = g.generate({"src", "the ref", "en-de"}, 0);
  CHECK(h.text == "the ref");
  CHECK(h.noise.empty());
}

TEST_CASE("noise generator edits round(strength * words) times and is reproducible per index") {
  const std::vector<std::string> pool{"p1", "p2", "p3"};
  synth::NoiseGenerator fixed(0.5, 0.5, 7, pool);
  const synth::ParallelPair pair{"s", "a b c d e f g h", "en-de"};
  const auto h = fixed.generate(pair, 3);
  CHECK(h.noise.size() == 4);
  CHECK(h.strength == 0.5);
  CHECK(fixed.generate(pair, 3).text == h.text);
  for (const auto& op : h.noise) CHECK(op.kind != CorruptionKind::SpanDrop);
  CHECK(fixed.id() == "noise-0.5");

  synth::NoiseGenerator clean(0.0, 0.0, 7, pool);
  CHECK(clean.generate(pair, 0).text == pair.reference);

  synth::NoiseGenerator ranged(0.1, 0.6, 7, pool);
  CHECK(ranged.id() == "noise-0.1-0.6");
  for (std::size_t i = 0; i < 50; ++i) {
    const auto r = ranged.generate(pair, i);
    CHECK(r.strength >= 0.1);
    CHECK(r.strength <= 0.6);
    CHECK(synth::word_count(r.text) >= 1);
  }
  CHECK_THROWS_AS(synth::NoiseGenerator(0.7, 0.2, 1, pool), Error);
}

TEST_CASE("substitutions never keep the original word") {
  std::mt19937_64 rng(3);
  const std::vector<std::string> pool{"a", "b"};
  for (int trial = 0; trial < 100; ++trial) {
    const auto h = synth::NoiseGenerator::corrupt("a", 1, pool, rng);
    // One word left: either substituted to "b" or the drop was refused.
    CHECK((h.text == "b" || h.text == "a"));
    if (!h.noise.empty()) CHECK(h.text == "b");
  }
}

TEST_CASE("file generator maps line i to pair i and fails past the end") {
  synth::FileGenerator g({"first hyp", "second hyp"});
  CHECK(g.generate({"s", "r", "d"}, 1).text == "second hyp");
  const std::vector<synth::ParallelPair> pairs{{"s1", "r1", "d"}, {"s2", "r2", "d"}, {"s3", "r3", "d"}};
  const auto result = synth::generate_hypotheses(pairs, g);
  CHECK(result.examples.size() == 2);
  CHECK(result.warnings == 1);
  CHECK(result.examples[0].record.segment_id == "d-0");
  CHECK(result.examples[0].record.system == "file");
  CHECK(result.examples[1].record.hypothesis == "second hyp");
}

TEST_CASE("word pool holds the distinct reference words in order") {
  const std::vector<synth::ParallelPair> pairs{{"s", "b a", "d"}, {"s", "c a", "d"}};
  CHECK(synth::reference_word_pool(pairs) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("downgrading corrupts exactly round(ratio * N) examples, each strictly shorter") {
  std::mt19937_64 rng(1);
  for (std::size_t n : {1u, 7u, 100u, 1000u}) {
    auto examples = word_examples(n, rng);
    const auto before = examples;
    std::mt19937_64 pick(n);
    synth::downgrade_quality(examples, 0.15, pick);
    std::size_t corrupted = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& ex = examples[i];
      if (!ex.downgraded) {
        CHECK(ex.record.hypothesis == before[i].record.hypothesis);
        continue;
      }
      ++corrupted;
      REQUIRE(ex.corruptions.size() == 1);
      const auto& op = ex.corruptions[0];
      const auto words = synth::word_count(before[i].record.hypothesis);
      CHECK(synth::word_count(ex.record.hypothesis) == words - op.length);
      CHECK(synth::word_count(ex.record.hypothesis) >= 1);
      if (op.kind == CorruptionKind::SpanDrop) {
        CHECK(op.length >= 2);
        CHECK(op.length <= static_cast<std::size_t>(std::ceil(0.3 * static_cast<double>(words))));
      } else {
        CHECK(op.kind == CorruptionKind::WordDrop);
        CHECK(op.length == 1);
      }
    }
    CHECK(corrupted == static_cast<std::size_t>(std::lround(0.15 * static_cast<double>(n))));
  }
}

TEST_CASE("downgrading uses both corruption kinds and rejects bad ratios") {
  std::mt19937_64 rng(2);
  auto examples = word_examples(400, rng);
  synth::downgrade_quality(examples, 1.0, rng);
  std::map<CorruptionKind, int> kinds;
  for (const auto& ex : examples) kinds[ex.corruptions.at(0).kind]++;
  CHECK(kinds[CorruptionKind::SpanDrop] > 100);
  CHECK(kinds[CorruptionKind::WordDrop] > 100);
  CHECK_THROWS_AS(synth::downgrade_quality(examples, 1.5, rng), Error);
  CHECK_THROWS_AS(synth::downgrade_quality(examples, -0.1, rng), Error);
}

TEST_CASE("downgrading fails when too few hypotheses can be shortened") {
  std::vector<SyntheticExample> examples(10);
  for (auto& ex : examples) ex.record.hypothesis = "single";
  examples[0].record.hypothesis = "two words";
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(synth::downgrade_quality(examples, 0.5, rng), Error);
}

TEST_CASE("pseudo-labels average the checkpoints' src+ref predictions") {
  toy::ToyCorpusConfig corpus;
  corpus.lexicon_size = 6;
  const auto vocab = text::Vocabulary::build(toy::vocabulary_corpus(corpus), 100);
  model::EncoderConfig config;
  config.vocab_size = vocab.size();
  config.d = 8;
  config.n_heads = 2;
  config.n_layers = 1;
  config.ff_dim = 8;
  config.head_dims = {4, 3, 1};
  std::vector<model::EncoderModel> checkpoints;
  for (std::uint64_t s : {1, 2, 3}) {
    config.seed = s;
    checkpoints.push_back(model::init_model(config));
  }
  const auto pairs = toy::make_parallel(corpus, 3, 1);
  synth::IdentityGenerator identity;
  auto examples = synth::generate_hypotheses(pairs, identity).examples;
  synth::pseudo_label(examples, checkpoints, vocab);
  for (const auto& ex : examples) {
    REQUIRE(ex.raw_scores.size() == 3);
    const auto seq = text::build_input_sequence(ex.record, text::InputFormat::SrcRef, vocab, config.max_len);
    double sum = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(ex.raw_scores[c] == model::forward(checkpoints[c], seq));
      sum += ex.raw_scores[c];
    }
    CHECK(*ex.mean_raw_score == doctest::Approx(sum / 3).epsilon(1e-14));
  }

  // One checkpoint copied three times labels exactly like the single checkpoint.
  auto single = examples;
  auto triple = examples;
  std::vector<model::EncoderModel> one{checkpoints[0]};
  std::vector<model::EncoderModel> same{checkpoints[0], checkpoints[0], checkpoints[0]};
  synth::pseudo_label(single, one, vocab);
  synth::pseudo_label(triple, same, vocab);
  for (std::size_t i = 0; i < single.size(); ++i) CHECK(*single[i].mean_raw_score == *triple[i].mean_raw_score);

  CHECK_THROWS_AS(synth::pseudo_label(examples, {}, vocab), Error);
}

TEST_CASE("normal quantile agrees with an erfc bisection") {
  for (double p : {1e-6, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.999}) {
    CHECK(synth::normal_quantile(p) == doctest::Approx(quantile_by_bisection(p)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(synth::normal_quantile(0.0), Error);
  CHECK_THROWS_AS(synth::normal_quantile(1.0), Error);
}

TEST_CASE("rank normalization of one and two examples") {
  std::vector<SyntheticExample> one{labeled("d", "a", 42.0)};
  synth::rank_normalize(one);
  CHECK(*one[0].final_score == 0.0);

  std::vector<SyntheticExample> two{labeled("d", "a", 5.0), labeled("d", "b", -1.0)};
  synth::rank_normalize(two);
  CHECK(std::fabs(*two[0].final_score - quantile_by_bisection(0.75)) < 1e-9);
  CHECK(std::fabs(*two[1].final_score - quantile_by_bisection(0.25)) < 1e-9);
  CHECK(*two[0].final_score == doctest::Approx(0.6745).epsilon(1e-3));
}

TEST_CASE("rank normalization works per direction and ignores monotone transforms") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  std::vector<SyntheticExample> examples;
  for (int i = 0; i < 60; ++i) {
    examples.push_back(labeled(i % 3 ? "en-de" : "zh-en", "s" + std::to_string(i), normal(rng)));
  }
  auto transformed = examples;
  for (auto& ex : transformed) ex.mean_raw_score = std::exp(3.0 * *ex.mean_raw_score) - 7.0;
  synth::rank_normalize(examples);
  synth::rank_normalize(transformed);
  for (std::size_t i = 0; i < examples.size(); ++i) CHECK(*examples[i].final_score == *transformed[i].final_score);

  // Each direction gets its own symmetric set of quantiles.
  std::map<std::string, double> sums;
  for (const auto& ex : examples) sums[ex.record.direction] += *ex.final_score;
  CHECK(std::fabs(sums["en-de"]) < 1e-9);
  CHECK(std::fabs(sums["zh-en"]) < 1e-9);

  std::vector<SyntheticExample> unlabeled{labeled("d", "a", 1.0)};
  unlabeled[0].mean_raw_score.reset();
  CHECK_THROWS_AS(synth::rank_normalize(unlabeled), Error);
}

TEST_CASE("rank ties break on segment id") {
  std::vector<SyntheticExample> examples{labeled("d", "b", 1.0), labeled("d", "a", 1.0)};
  synth::rank_normalize(examples);
  CHECK(*examples[1].final_score < *examples[0].final_score);
}

TEST_CASE("synthetic corpora round-trip through JSON lines") {
  std::mt19937_64 rng(4);
  const std::vector<synth::ParallelPair> pairs{{"s one", "a b c d", "en-de"}, {"s two", "e f g", "zh-en"}};
  synth::NoiseGenerator g(0.2, 0.5, 3, synth::reference_word_pool(pairs));
  auto examples = synth::generate_hypotheses(pairs, g).examples;
  synth::downgrade_quality(examples, 0.5, rng);
  examples[0].raw_scores = {0.1, 0.30000000000000004};
  examples[0].mean_raw_score = 0.2;
  examples[0].final_score = -0.6744897501960817;
  std::stringstream buf;
  synth::write_corpus(buf, examples);
  CHECK(synth::read_corpus(buf, "mem") == examples);

  std::istringstream bad("{\"schema\":\"other/1\"}\n");
  CHECK_THROWS_WITH_AS(synth::read_corpus(bad, "c.jsonl"), doctest::Contains("c.jsonl:1:"), Error);
  std::istringstream garbage("{not json\n");
  CHECK_THROWS_AS(synth::read_corpus(garbage, "c.jsonl"), Error);
}

TEST_CASE("training records need a final score") {
  std::vector<SyntheticExample> examples{labeled("d", "a", 1.0)};
  examples[0].record.reference = "r";
  CHECK_THROWS_AS(synth::to_training_records(examples), Error);
  synth::rank_normalize(examples);
  const auto records = synth::to_training_records(examples);
  CHECK(records[0].score == examples[0].final_score);
}
