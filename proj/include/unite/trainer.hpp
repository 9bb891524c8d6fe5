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

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unite/encoder.hpp"
#include "unite/kv_config.hpp"
#include "unite/text.hpp"

namespace unite::train {

enum class Stage { SyntheticPretrain, DAFinetune, MQMFinetune };

inline constexpr std::array<Stage, 3> kAllStages{Stage::SyntheticPretrain, Stage::DAFinetune, Stage::MQMFinetune};

// "pretrain", "da", "mqm"
std::string_view stage_name(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  // Per format: every step draws this many records for each of the three formats.
  std::size_t batch_size = 16;
  double lr_encoder = 1e-3;
  double lr_head = 3e-3;
  std::size_t epochs = 4;
  std::uint64_t seed = 1;
  Stage stage = Stage::SyntheticPretrain;
  OptimizerConfig optimizer;

  void validate() const;

  // Small-corpus settings used by the CLI and the tests.
  static TrainConfig desk(Stage stage);
  // Large-model settings (XLM-R backbone): 1024 / 32 records per format and
  // 1e-4 : 3e-4 pre-training, 5e-6 : 1.5e-5 fine-tuning learning rates.
  static TrainConfig full_scale(Stage stage);

  // Reads batch_size, lr_encoder, lr_head, epochs, beta1, beta2, epsilon
  // under the given key prefix, falling back to base.
  static TrainConfig from_keys(const KeyValueConfig& kv, const std::string& prefix, TrainConfig base);
};

model::EncoderConfig encoder_config_from_keys(const KeyValueConfig& kv, const std::string& prefix,
                                              model::EncoderConfig base);

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss_ref = 0.0;
  double loss_src = 0.0;
  double loss_srcref = 0.0;
  double loss_total = 0.0;
  std::array<std::size_t, 3> batch_sizes{};  // Src, Ref, SrcRef
};

struct TrainHistory {
  Stage stage = Stage::SyntheticPretrain;
  std::vector<StepRecord> steps;
  std::string checkpoint_path;
};

// One JSON object per line.
void write_history(std::ostream& out, const TrainHistory& history);
std::vector<StepRecord> read_history(std::istream& in, std::string_view origin);

// Shuffles with the seed and deals records round-robin into parts for Src,
// Ref and SrcRef (in that order); part sizes differ by at most one.
std::array<std::vector<text::SegmentRecord>, 3> split_three_ways(std::span<const text::SegmentRecord> dataset,
                                                                  std::uint64_t seed);

struct BalancedStep {
  std::array<std::vector<std::size_t>, 3> indices;  // into each part
};

// Draws equal-sized batches for the three formats. Each epoch reshuffles every
// part; the epoch ends when any part has fewer than batch_size records left,
// and the leftovers are skipped for that epoch.
class BalancedBatcher {
 public:
  BalancedBatcher(std::array<std::size_t, 3> part_sizes, std::size_t batch_size);

  void start_epoch(std::mt19937_64& rng);
  std::optional<BalancedStep> next();
  std::size_t steps_per_epoch() const { return steps_per_epoch_; }

 private:
  std::array<std::vector<std::size_t>, 3> order_;
  std::size_t batch_size_;
  std::size_t steps_per_epoch_;
  std::size_t cursor_ = 0;
};

// Adam with separate learning rates for the encoder and the head.
class Optimizer {
 public:
  Optimizer(const model::EncoderConfig& config, OptimizerConfig settings);

  void apply(model::Parameters& params, const model::Gradients& grads, double lr_encoder, double lr_head);
  std::size_t step_count() const { return steps_; }

 private:
  OptimizerConfig settings_;
  model::Parameters first_moment_;
  model::Parameters second_moment_;
  std::size_t steps_ = 0;
};

struct LossTriple {
  double src = 0.0;
  double ref = 0.0;
  double srcref = 0.0;

  // L_Ref + L_Src + L_SrcRef, summed in that order.
  double total() const { return ref + src + srcref; }
};

// Batches indexed Src, Ref, SrcRef. Sums the three mean-squared-error losses,
// takes one optimizer step on the summed gradient, and throws Error(Numeric)
// if the loss or any updated parameter is not finite.
LossTriple joint_step(model::EncoderModel& model, Optimizer& optimizer,
                      const std::array<std::vector<model::TrainingItem>, 3>& batches, const TrainConfig& config);

struct StageResult {
  model::EncoderModel model;
  TrainHistory history;
};

using StepObserver = std::function<void(const StepRecord&)>;

// Every record needs a gold score and, since any record may land in a
// reference-using part, a reference.
StageResult train_stage(model::EncoderModel model, std::span<const text::SegmentRecord> dataset,
                        const TrainConfig& config, const text::Vocabulary& vocab, const StepObserver& observer = {});

struct PipelineConfig {
  model::EncoderConfig model;
  TrainConfig pretrain = TrainConfig::desk(Stage::SyntheticPretrain);
  TrainConfig da = TrainConfig::desk(Stage::DAFinetune);
  TrainConfig mqm = TrainConfig::desk(Stage::MQMFinetune);
  std::size_t n_seeds = 3;
  std::uint64_t base_seed = 1;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<Stage> stages;
  std::vector<model::EncoderModel> checkpoints;  // one per stage, in order
  std::vector<TrainHistory> histories;

  const model::EncoderModel& final_model() const { return checkpoints.back(); }
};

struct PipelineData {
  std::span<const text::SegmentRecord> synthetic;
  std::span<const text::SegmentRecord> da;
  std::span<const text::SegmentRecord> mqm;
};

using StageObserver = std::function<void(std::size_t seed_index, Stage stage, const StageResult&)>;

// For each seed: synthetic pre-training, DA fine-tuning, MQM fine-tuning, each
// stage starting from the previous stage's parameters. Empty datasets skip
// their stage. Seed i uses base_seed + i for initialization and batching.
std::vector<SeedRun> run_pipeline(const PipelineData& data, const PipelineConfig& config,
                                  const text::Vocabulary& vocab, const StageObserver& observer = {});

}  // namespace unite::train
