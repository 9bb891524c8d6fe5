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
#include <cstring>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "unite/error.hpp"
#include "unite/toy_corpus.hpp"
#include "unite/trainer.hpp"

using namespace unite;
using model::EncoderConfig;
using model::Parameters;
using model::TrainingItem;
using train::Stage;
using train::TrainConfig;

namespace {

struct Fixture {
  toy::ToyCorpusConfig corpus;
  text::Vocabulary vocab;
  std::vector<text::SegmentRecord> records;
  EncoderConfig config;

  explicit Fixture(std::size_t pairs = 12) : vocab(text::Vocabulary::build(toy::vocabulary_corpus(corpus), 500)) {
    corpus.lexicon_size = 12;
    vocab = text::Vocabulary::build(toy::vocabulary_corpus(corpus), 500);
    const auto parallel = toy::make_parallel(corpus, pairs, 3);
    toy::ScoredSetOptions options;
    options.random_strengths = true;
    records = toy::make_scored_segments(corpus, parallel, options, 4);
    config.vocab_size = vocab.size();
    config.d = 8;
    config.n_layers = 1;
    config.n_heads = 2;
    config.ff_dim = 12;
    config.max_len = 32;
    config.head_dims = {6, 4, 1};
  }

  TrainConfig train_config(std::size_t batch = 4, std::size_t epochs = 2) const {
    auto c = TrainConfig::desk(Stage::DAFinetune);
    c.batch_size = batch;
    c.epochs = epochs;
    c.seed = 9;
    return c;
  }
};

std::vector<double> flat(const Parameters& p) {
  std::vector<double> out;
  p.for_each([&](auto, const Tensor& t, model::ParamGroup) { out.insert(out.end(), t.values.begin(), t.values.end()); });
  return out;
}

bool bit_identical(const Parameters& a, const Parameters& b) {
  const auto fa = flat(a), fb = flat(b);
  return fa.size() == fb.size() && std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(double)) == 0;
}

double mean_squared_error(const model::EncoderModel& m, const std::vector<TrainingItem>& batch) {
  double sum = 0.0;
  for (const auto& item : batch) {
    const double diff = model::forward(m, *item.sequence) - *item.target;
    sum += diff * diff;
  }
  return sum / static_cast<double>(batch.size());
}

struct Batches {
  std::array<std::vector<text::InputSequence>, 3> sequences;
  std::array<std::vector<TrainingItem>, 3> items;
};

Batches make_batches(const Fixture& f, std::size_t per_format) {
  Batches b;
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < per_format; ++i) {
      const auto& r = f.records[k * per_format + i];
      b.sequences[k].push_back(text::build_input_sequence(r, text::kAllFormats[k], f.vocab, f.config.max_len));
    }
    for (std::size_t i = 0; i < per_format; ++i) {
      b.items[k].push_back({&b.sequences[k][i], f.records[k * per_format + i].score});
    }
  }
  return b;
}

}  // namespace

TEST_CASE("three-way split keeps every record once and balances part sizes") {
  Fixture f;
  for (std::size_t n : {3, 4, 5, 31, 60}) {
    std::span<const text::SegmentRecord> subset(f.records.data(), n);
    const auto parts = train::split_three_ways(subset, 17);
    std::multiset<std::pair<std::string, std::string>> seen;
    std::size_t smallest = n, largest = 0;
    for (const auto& part : parts) {
      smallest = std::min(smallest, part.size());
      largest = std::max(largest, part.size());
      for (const auto& r : part) seen.insert({r.segment_id, r.system});
    }
    CHECK(largest - smallest <= 1);
    CHECK(seen.size() == n);
    CHECK(std::set(seen.begin(), seen.end()).size() == n);
  }
  CHECK(train::split_three_ways(f.records, 1) == train::split_three_ways(f.records, 1));
  CHECK_FALSE(train::split_three_ways(f.records, 1) == train::split_three_ways(f.records, 2));
  std::span<const text::SegmentRecord> two(f.records.data(), 2);
  CHECK_THROWS_AS(train::split_three_ways(two, 1), Error);
}

TEST_CASE("balanced batcher yields equal batches and no repeats within an epoch") {
  train::BalancedBatcher batcher({10, 11, 9}, 4);
  CHECK(batcher.steps_per_epoch() == 2);
  std::mt19937_64 rng(1);
  for (int epoch = 0; epoch < 3; ++epoch) {
    batcher.start_epoch(rng);
    std::array<std::set<std::size_t>, 3> used;
    std::size_t steps = 0;
    while (auto step = batcher.next()) {
      ++steps;
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(step->indices[k].size() == 4);
        for (auto i : step->indices[k]) {
          CHECK(i < std::array<std::size_t, 3>{10, 11, 9}[k]);
          CHECK(used[k].insert(i).second);
        }
      }
    }
    CHECK(steps == 2);
  }
  CHECK_THROWS_AS(train::BalancedBatcher({3, 3, 3}, 0), Error);
}

TEST_CASE("the joint loss is the sum of the three format losses") {
  train::LossTriple loss{0.1, 0.2, 0.4};
  CHECK(loss.total() == (0.2 + 0.1) + 0.4);
}

TEST_CASE("joint_step reports each format's mean squared error") {
  Fixture f;
  auto m = model::init_model(f.config);
  const auto b = make_batches(f, 4);
  const auto before = m;
  train::Optimizer opt(f.config, {});
  const auto loss = train::joint_step(m, opt, b.items, f.train_config());
  CHECK(loss.src == doctest::Approx(mean_squared_error(before, b.items[0])).epsilon(1e-12));
  CHECK(loss.ref == doctest::Approx(mean_squared_error(before, b.items[1])).epsilon(1e-12));
  CHECK(loss.srcref == doctest::Approx(mean_squared_error(before, b.items[2])).epsilon(1e-12));
}

TEST_CASE("three identical batches give three times the single loss") {
  Fixture f;
  auto m = model::init_model(f.config);
  const auto b = make_batches(f, 4);
  const std::array<std::vector<TrainingItem>, 3> same{b.items[2], b.items[2], b.items[2]};
  const double single = mean_squared_error(m, b.items[2]);
  train::Optimizer opt(f.config, {});
  CHECK(train::joint_step(m, opt, same, f.train_config()).total() == doctest::Approx(3 * single).epsilon(1e-12));
}

TEST_CASE("the joint gradient is the sum of the per-format gradients") {
  Fixture f;
  const auto m = model::init_model(f.config);
  const auto b = make_batches(f, 3);
  auto joint = Parameters::zeros(f.config);
  for (const auto& items : b.items) model::accumulate_backward(m, items, joint);
  std::vector<double> summed(flat(joint).size(), 0.0);
  for (const auto& items : b.items) {
    const auto g = flat(model::backward(m, items).grads);
    for (std::size_t i = 0; i < g.size(); ++i) summed[i] += g[i];
  }
  const auto j = flat(joint);
  for (std::size_t i = 0; i < j.size(); ++i) CHECK(j[i] == doctest::Approx(summed[i]).epsilon(1e-12));
}

TEST_CASE("zero learning rates leave parameters bit-identical") {
  Fixture f;
  auto m = model::init_model(f.config);
  const auto start = m;
  auto config = f.train_config();
  config.lr_encoder = 0.0;
  config.lr_head = 0.0;
  const auto result = train::train_stage(m, f.records, config, f.vocab);
  CHECK(result.history.steps.size() > 0);
  CHECK(bit_identical(result.model.params, start.params));
}

TEST_CASE("frozen encoder only moves the head") {
  Fixture f;
  const auto start = model::init_model(f.config);
  auto config = f.train_config();
  config.lr_encoder = 0.0;
  const auto result = train::train_stage(start, f.records, config, f.vocab);
  result.model.params.for_each([&](const std::string& name, const Tensor& t, model::ParamGroup g) {
    const Tensor* original = nullptr;
    start.params.for_each([&](const std::string& n, const Tensor& u, model::ParamGroup) {
      if (n == name) original = &u;
    });
    REQUIRE(original != nullptr);
    if (g == model::ParamGroup::Encoder) CHECK(t == *original);
  });
  CHECK_FALSE(result.model.params.head.w1 == start.params.head.w1);
}

TEST_CASE("the first Adam step moves each coordinate by about the learning rate") {
  Fixture f;
  auto m = model::init_model(f.config);
  const auto start = m;
  const auto b = make_batches(f, 4);
  auto grads = Parameters::zeros(f.config);
  for (const auto& items : b.items) model::accumulate_backward(m, items, grads);

  auto config = f.train_config();
  config.lr_encoder = 1e-3;
  config.lr_head = 2e-3;
  train::Optimizer opt(f.config, config.optimizer);
  train::joint_step(m, opt, b.items, config);
  // m_hat = g and v_hat = g^2 after one step, so the update is lr * g / (|g| + eps).
  const double g = grads.head.b3.values[0];
  CHECK(m.params.head.b3.values[0] ==
        doctest::Approx(start.params.head.b3.values[0] - 2e-3 * g / (std::fabs(g) + 1e-8)).epsilon(1e-12));
  const double ge = grads.final_norm_bias.values[0];
  CHECK(m.params.final_norm_bias.values[0] ==
        doctest::Approx(start.params.final_norm_bias.values[0] - 1e-3 * ge / (std::fabs(ge) + 1e-8)).epsilon(1e-12));
}

TEST_CASE("non-finite losses stop training with a numeric error") {
  Fixture f;
  auto m = model::init_model(f.config);
  auto b = make_batches(f, 2);
  b.items[1][0].target = std::nan("");
  train::Optimizer opt(f.config, {});
  CHECK_THROWS_WITH_AS(train::joint_step(m, opt, b.items, f.train_config()),
                       doctest::Contains("non-finite loss"), Error);
}

TEST_CASE("train_stage is deterministic and its history satisfies the loss identity") {
  Fixture f;
  const auto start = model::init_model(f.config);
  const auto config = f.train_config(4, 3);
  const auto a = train::train_stage(start, f.records, config, f.vocab);
  const auto b = train::train_stage(start, f.records, config, f.vocab);
  CHECK(bit_identical(a.model.params, b.model.params));
  REQUIRE(a.history.steps.size() == b.history.steps.size());
  // 120 records, 40 per format, 10 steps per epoch.
  CHECK(a.history.steps.size() == 30);
  for (const auto& s : a.history.steps) {
    CHECK(s.loss_total == s.loss_ref + s.loss_src + s.loss_srcref);
    CHECK(s.batch_sizes == std::array<std::size_t, 3>{4, 4, 4});
  }
  auto other = config;
  other.seed = 10;
  CHECK_FALSE(bit_identical(train::train_stage(start, f.records, other, f.vocab).model.params, a.model.params));
}

TEST_CASE("train_stage rejects unusable inputs") {
  Fixture f;
  const auto start = model::init_model(f.config);
  auto unscored = f.records;
  unscored[3].score.reset();
  CHECK_THROWS_AS(train::train_stage(start, unscored, f.train_config(), f.vocab), Error);
  CHECK_THROWS_AS(train::train_stage(start, {}, f.train_config(), f.vocab), Error);
  std::span<const text::SegmentRecord> few(f.records.data(), 6);
  CHECK_THROWS_WITH_AS(train::train_stage(start, few, f.train_config(4), f.vocab), doctest::Contains("too small"),
                       Error);
  auto no_reference = f.records;
  for (auto& r : no_reference) r.reference.reset();
  CHECK_THROWS_WITH_AS(train::train_stage(start, no_reference, f.train_config(), f.vocab),
                       doctest::Contains("requires a reference"), Error);
}

TEST_CASE("history lines round-trip") {
  train::TrainHistory h;
  h.stage = Stage::MQMFinetune;
  h.steps.push_back({0, 0, 0.1, 0.2, 0.30000000000000004, 0.6000000000000001, {4, 4, 4}});
  h.steps.push_back({1, 0, 1e-300, 2.5, 3.25, 5.75, {2, 2, 2}});
  std::stringstream buf;
  train::write_history(buf, h);
  CHECK(buf.str().find("\"stage\":\"mqm\"") != std::string::npos);
  const auto back = train::read_history(buf, "mem");
  REQUIRE(back.size() == 2);
  CHECK(back[0].loss_total == h.steps[0].loss_total);
  CHECK(back[1].loss_ref == 1e-300);
  CHECK(back[1].batch_sizes == h.steps[1].batch_sizes);
  std::istringstream bad("{\"stage\":\"da\"}\n");
  CHECK_THROWS_WITH_AS(train::read_history(bad, "h.jsonl"), doctest::Contains("h.jsonl:1:"), Error);
}

TEST_CASE("config keys override defaults and unknown keys are rejected") {
  std::istringstream in("lr_encoder = 0.01\nepochs = 7\nmodel.d = 16\n# comment\n");
  auto kv = KeyValueConfig::parse(in, "cfg");
  const auto tc = TrainConfig::from_keys(kv, "", TrainConfig::desk(Stage::SyntheticPretrain));
  CHECK(tc.lr_encoder == 0.01);
  CHECK(tc.epochs == 7);
  CHECK(tc.lr_head == TrainConfig::desk(Stage::SyntheticPretrain).lr_head);
  const auto ec = train::encoder_config_from_keys(kv, "model.", EncoderConfig{});
  CHECK(ec.d == 16);
  CHECK_NOTHROW(kv.require_all_used());

  std::istringstream typo("lr_encodr = 0.01\n");
  auto kv2 = KeyValueConfig::parse(typo, "cfg");
  TrainConfig::from_keys(kv2, "", TrainConfig{});
  CHECK_THROWS_WITH_AS(kv2.require_all_used(), doctest::Contains("lr_encodr"), Error);

  std::istringstream bad("epochs = 0\n");
  auto kv3 = KeyValueConfig::parse(bad, "cfg");
  CHECK_THROWS_AS(TrainConfig::from_keys(kv3, "", TrainConfig{}), Error);
}

TEST_CASE("full-scale settings follow the large-model recipe") {
  const auto pre = TrainConfig::full_scale(Stage::SyntheticPretrain);
  CHECK(pre.batch_size == 1024);
  CHECK(pre.lr_encoder == 1e-4);
  CHECK(pre.lr_head == 3e-4);
  const auto ft = TrainConfig::full_scale(Stage::MQMFinetune);
  CHECK(ft.batch_size == 32);
  CHECK(ft.lr_encoder == 5e-6);
  CHECK(ft.lr_head == 1.5e-5);
  CHECK(model::kFullScaleHeadDims == std::array<std::size_t, 3>{3072, 1024, 1});
}

TEST_CASE("pipeline trains every stage for every seed") {
  Fixture f;
  train::PipelineConfig config;
  config.model = f.config;
  config.pretrain = f.train_config(4, 1);
  config.da = f.train_config(4, 1);
  config.mqm = f.train_config(4, 1);
  config.n_seeds = 3;
  config.base_seed = 5;
  std::vector<std::pair<std::size_t, Stage>> seen;
  const auto runs = train::run_pipeline({f.records, f.records, f.records}, config, f.vocab,
                                        [&](std::size_t i, Stage s, const train::StageResult&) { seen.push_back({i, s}); });
  REQUIRE(runs.size() == 3);
  std::size_t checkpoints = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    CHECK(runs[i].seed == 5 + i);
    CHECK(runs[i].stages == std::vector<Stage>(train::kAllStages.begin(), train::kAllStages.end()));
    checkpoints += runs[i].checkpoints.size();
    CHECK(runs[i].histories.size() == 3);
  }
  CHECK(checkpoints == 9);
  CHECK(seen.size() == 9);
  CHECK_FALSE(bit_identical(runs[0].final_model().params, runs[1].final_model().params));

  // Same seed, same result.
  config.n_seeds = 1;
  const auto again = train::run_pipeline({f.records, f.records, f.records}, config, f.vocab);
  CHECK(bit_identical(again[0].final_model().params, runs[0].final_model().params));
}

TEST_CASE("pipeline skips stages without data") {
  Fixture f;
  train::PipelineConfig config;
  config.model = f.config;
  config.pretrain = f.train_config(4, 1);
  config.da = f.train_config(4, 1);
  config.n_seeds = 2;
  const auto runs = train::run_pipeline({f.records, f.records, {}}, config, f.vocab);
  for (const auto& run : runs) {
    CHECK(run.stages == std::vector<Stage>{Stage::SyntheticPretrain, Stage::DAFinetune});
    CHECK(run.checkpoints.size() == 2);
  }
  CHECK_THROWS_AS(train::run_pipeline({}, config, f.vocab), Error);
  config.n_seeds = 0;
  CHECK_THROWS_AS(train::run_pipeline({f.records, {}, {}}, config, f.vocab), Error);
}
