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

#include "unite/trainer.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "unite/error.hpp"
#include "unite/random.hpp"

namespace unite::train {

using model::EncoderModel;
using model::Parameters;
using model::ParamGroup;
using text::SegmentRecord;

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::SyntheticPretrain:
      return "pretrain";
    case Stage::DAFinetune:
      return "da";
    case Stage::MQMFinetune:
      return "mqm";
  }
  return "unknown";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (auto stage : kAllStages) {
    if (stage_name(stage) == name) return stage;
  }
  return std::nullopt;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, "invalid train config: " + msg); };
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(lr_encoder >= 0.0) || !(lr_head >= 0.0) || !std::isfinite(lr_encoder) || !std::isfinite(lr_head)) {
    fail("learning rates must be finite and non-negative");
  }
  if (epochs == 0) fail("epochs must be positive");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0)) fail("beta1 must be in [0, 1)");
  if (!(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) fail("beta2 must be in [0, 1)");
  if (!(optimizer.epsilon > 0.0)) fail("epsilon must be positive");
}

TrainConfig TrainConfig::desk(Stage stage) {
  TrainConfig c;
  c.stage = stage;
  c.batch_size = 16;
  switch (stage) {
    case Stage::SyntheticPretrain:
      c.lr_encoder = 1e-3;
      c.lr_head = 3e-3;
      c.epochs = 4;
      break;
    case Stage::DAFinetune:
      c.lr_encoder = 5e-4;
      c.lr_head = 1.5e-3;
      c.epochs = 3;
      break;
    case Stage::MQMFinetune:
      c.lr_encoder = 5e-4;
      c.lr_head = 1.5e-3;
      c.epochs = 3;
      break;
  }
  return c;
}

TrainConfig TrainConfig::full_scale(Stage stage) {
  TrainConfig c;
  c.stage = stage;
  if (stage == Stage::SyntheticPretrain) {
    c.batch_size = 1024;
    c.lr_encoder = 1.0e-4;
    c.lr_head = 3.0e-4;
  } else {
    c.batch_size = 32;
    c.lr_encoder = 5.0e-6;
    c.lr_head = 1.5e-5;
  }
  return c;
}

TrainConfig TrainConfig::from_keys(const KeyValueConfig& kv, const std::string& prefix, TrainConfig base) {
  base.batch_size = kv.get_size(prefix + "batch_size", base.batch_size);
  base.lr_encoder = kv.get_double(prefix + "lr_encoder", base.lr_encoder);
  base.lr_head = kv.get_double(prefix + "lr_head", base.lr_head);
  base.epochs = kv.get_size(prefix + "epochs", base.epochs);
  base.optimizer.beta1 = kv.get_double(prefix + "beta1", base.optimizer.beta1);
  base.optimizer.beta2 = kv.get_double(prefix + "beta2", base.optimizer.beta2);
  base.optimizer.epsilon = kv.get_double(prefix + "epsilon", base.optimizer.epsilon);
  base.validate();
  return base;
}

model::EncoderConfig encoder_config_from_keys(const KeyValueConfig& kv, const std::string& prefix,
                                              model::EncoderConfig base) {
  base.d = kv.get_size(prefix + "d", base.d);
  base.n_layers = kv.get_size(prefix + "layers", base.n_layers);
  base.n_heads = kv.get_size(prefix + "heads", base.n_heads);
  base.ff_dim = kv.get_size(prefix + "ff_dim", base.ff_dim);
  base.max_len = kv.get_size(prefix + "max_len", base.max_len);
  base.head_dims[0] = kv.get_size(prefix + "head1", base.head_dims[0]);
  base.head_dims[1] = kv.get_size(prefix + "head2", base.head_dims[1]);
  return base;
}

void write_history(std::ostream& out, const TrainHistory& history) {
  for (const auto& s : history.steps) {
    nlohmann::ordered_json j;
    j["stage"] = stage_name(history.stage);
    j["step"] = s.step;
    j["epoch"] = s.epoch;
    j["loss_ref"] = s.loss_ref;
    j["loss_src"] = s.loss_src;
    j["loss_srcref"] = s.loss_srcref;
    j["loss_total"] = s.loss_total;
    j["batch_sizes"] = s.batch_sizes;
    out << j.dump() << '\n';
  }
}

std::vector<StepRecord> read_history(std::istream& in, std::string_view origin) {
  std::vector<StepRecord> steps;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      StepRecord s;
      s.step = j.at("step").get<std::size_t>();
      s.epoch = j.at("epoch").get<std::size_t>();
      s.loss_ref = j.at("loss_ref").get<double>();
      s.loss_src = j.at("loss_src").get<double>();
      s.loss_srcref = j.at("loss_srcref").get<double>();
      s.loss_total = j.at("loss_total").get<double>();
      s.batch_sizes = j.at("batch_sizes").get<std::array<std::size_t, 3>>();
      steps.push_back(s);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, at_line(origin, line_no, e.what()));
    }
  }
  return steps;
}

std::array<std::vector<SegmentRecord>, 3> split_three_ways(std::span<const SegmentRecord> dataset,
                                                           std::uint64_t seed) {
  if (dataset.size() < 3) {
    throw Error(ErrorKind::InvalidArgument,
                "need at least 3 records to split across formats, got " + std::to_string(dataset.size()));
  }
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  shuffle(std::span<std::size_t>(order), rng);

  std::array<std::vector<SegmentRecord>, 3> parts;
  for (std::size_t k = 0; k < order.size(); ++k) parts[k % 3].push_back(dataset[order[k]]);
  return parts;
}

BalancedBatcher::BalancedBatcher(std::array<std::size_t, 3> part_sizes, std::size_t batch_size)
    : batch_size_(batch_size) {
  if (batch_size == 0) throw Error(ErrorKind::InvalidArgument, "batch size must be positive");
  std::size_t smallest = part_sizes[0];
  for (std::size_t k = 0; k < 3; ++k) {
    order_[k].resize(part_sizes[k]);
    for (std::size_t i = 0; i < part_sizes[k]; ++i) order_[k][i] = i;
    smallest = std::min(smallest, part_sizes[k]);
  }
  steps_per_epoch_ = smallest / batch_size;
}

void BalancedBatcher::start_epoch(std::mt19937_64& rng) {
  for (auto& order : order_) {
    std::sort(order.begin(), order.end());
    shuffle(std::span<std::size_t>(order), rng);
  }
  cursor_ = 0;
}

std::optional<BalancedStep> BalancedBatcher::next() {
  if (cursor_ >= steps_per_epoch_) return std::nullopt;
  BalancedStep step;
  const std::size_t begin = cursor_ * batch_size_;
  for (std::size_t k = 0; k < 3; ++k) {
    step.indices[k].assign(order_[k].begin() + static_cast<std::ptrdiff_t>(begin),
                           order_[k].begin() + static_cast<std::ptrdiff_t>(begin + batch_size_));
  }
  ++cursor_;
  return step;
}

Optimizer::Optimizer(const model::EncoderConfig& config, OptimizerConfig settings)
    : settings_(settings), first_moment_(Parameters::zeros(config)), second_moment_(Parameters::zeros(config)) {}

void Optimizer::apply(Parameters& params, const model::Gradients& grads, double lr_encoder, double lr_head) {
  ++steps_;
  const double b1 = settings_.beta1;
  const double b2 = settings_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));

  std::vector<Tensor*> p_list, m_list, v_list;
  std::vector<const Tensor*> g_list;
  std::vector<ParamGroup> groups;
  params.for_each([&](auto, Tensor& t, ParamGroup g) {
    p_list.push_back(&t);
    groups.push_back(g);
  });
  grads.for_each([&](auto, const Tensor& t, ParamGroup) { g_list.push_back(&t); });
  first_moment_.for_each([&](auto, Tensor& t, ParamGroup) { m_list.push_back(&t); });
  second_moment_.for_each([&](auto, Tensor& t, ParamGroup) { v_list.push_back(&t); });
  if (g_list.size() != p_list.size()) throw Error(ErrorKind::Mismatch, "gradient layout does not match parameters");

  for (std::size_t k = 0; k < p_list.size(); ++k) {
    if (!p_list[k]->same_shape(*g_list[k])) throw Error(ErrorKind::Mismatch, "gradient shape mismatch");
    const double lr = groups[k] == ParamGroup::Head ? lr_head : lr_encoder;
    auto& p = p_list[k]->values;
    const auto& g = g_list[k]->values;
    auto& m = m_list[k]->values;
    auto& v = v_list[k]->values;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + settings_.epsilon);
    }
  }
}

LossTriple joint_step(EncoderModel& model, Optimizer& optimizer,
                      const std::array<std::vector<model::TrainingItem>, 3>& batches, const TrainConfig& config) {
  auto grads = Parameters::zeros(model.config);
  LossTriple loss;
  loss.src = model::accumulate_backward(model, batches[0], grads);
  loss.ref = model::accumulate_backward(model, batches[1], grads);
  loss.srcref = model::accumulate_backward(model, batches[2], grads);
  if (!std::isfinite(loss.total())) {
    throw Error(ErrorKind::Numeric, "non-finite loss (src=" + std::to_string(loss.src) + " ref=" +
                                        std::to_string(loss.ref) + " src+ref=" + std::to_string(loss.srcref) +
                                        ") at optimizer step " + std::to_string(optimizer.step_count() + 1));
  }
  optimizer.apply(model.params, grads, config.lr_encoder, config.lr_head);
  if (!model::all_finite(model.params)) {
    throw Error(ErrorKind::Numeric,
                "non-finite parameter after optimizer step " + std::to_string(optimizer.step_count()));
  }
  return loss;
}

StageResult train_stage(EncoderModel model, std::span<const SegmentRecord> dataset, const TrainConfig& config,
                        const text::Vocabulary& vocab, const StepObserver& observer) {
  config.validate();
  if (dataset.empty()) {
    throw Error(ErrorKind::InvalidArgument, "empty dataset for stage " + std::string(stage_name(config.stage)));
  }
  if (vocab.size() != model.config.vocab_size) {
    throw Error(ErrorKind::Mismatch, "vocabulary size " + std::to_string(vocab.size()) + " does not match model " +
                                         std::to_string(model.config.vocab_size));
  }
  for (const auto& r : dataset) {
    if (!r.score) throw Error(ErrorKind::InvalidArgument, "segment " + r.segment_id + " has no gold score");
  }

  const auto parts = split_three_ways(dataset, config.seed);
  std::array<std::vector<text::InputSequence>, 3> sequences;
  for (std::size_t k = 0; k < 3; ++k) {
    for (const auto& r : parts[k]) {
      sequences[k].push_back(text::build_input_sequence(r, text::kAllFormats[k], vocab, model.config.max_len));
    }
  }

  BalancedBatcher batcher({parts[0].size(), parts[1].size(), parts[2].size()}, config.batch_size);
  if (batcher.steps_per_epoch() == 0) {
    throw Error(ErrorKind::InvalidArgument, "dataset of " + std::to_string(dataset.size()) +
                                                " records is too small for batch size " +
                                                std::to_string(config.batch_size) + " per format");
  }

  StageResult result{std::move(model), {}};
  result.history.stage = config.stage;
  Optimizer optimizer(result.model.config, config.optimizer);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    batcher.start_epoch(rng);
    while (auto batch = batcher.next()) {
      std::array<std::vector<model::TrainingItem>, 3> items;
      for (std::size_t k = 0; k < 3; ++k) {
        for (auto idx : batch->indices[k]) items[k].push_back({&sequences[k][idx], parts[k][idx].score});
      }
      const auto loss = joint_step(result.model, optimizer, items, config);
      StepRecord record;
      record.step = step++;
      record.epoch = epoch;
      record.loss_src = loss.src;
      record.loss_ref = loss.ref;
      record.loss_srcref = loss.srcref;
      record.loss_total = loss.total();
      record.batch_sizes = {items[0].size(), items[1].size(), items[2].size()};
      result.history.steps.push_back(record);
      if (observer) observer(record);
    }
  }
  return result;
}

std::vector<SeedRun> run_pipeline(const PipelineData& data, const PipelineConfig& config,
                                  const text::Vocabulary& vocab, const StageObserver& observer) {
  if (config.n_seeds == 0) throw Error(ErrorKind::InvalidArgument, "pipeline needs at least one seed");
  const std::array<std::pair<std::span<const SegmentRecord>, const TrainConfig*>, 3> stages{
      {{data.synthetic, &config.pretrain}, {data.da, &config.da}, {data.mqm, &config.mqm}}};
  bool any = false;
  for (const auto& [set, cfg] : stages) any = any || !set.empty();
  if (!any) throw Error(ErrorKind::InvalidArgument, "pipeline has no training data for any stage");

  std::vector<SeedRun> runs;
  for (std::size_t i = 0; i < config.n_seeds; ++i) {
    SeedRun run;
    run.seed = config.base_seed + i;
    auto encoder = config.model;
    encoder.vocab_size = vocab.size();
    encoder.seed = run.seed;
    auto current = model::init_model(encoder);
    for (std::size_t s = 0; s < stages.size(); ++s) {
      const auto& [set, cfg] = stages[s];
      if (set.empty()) continue;
      TrainConfig stage_config = *cfg;
      stage_config.stage = kAllStages[s];
      stage_config.seed = run.seed * 3 + s;
      auto result = train_stage(current, set, stage_config, vocab);
      if (observer) observer(i, kAllStages[s], result);
      current = result.model;
      run.stages.push_back(kAllStages[s]);
      run.checkpoints.push_back(std::move(result.model));
      run.histories.push_back(std::move(result.history));
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace unite::train
