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

// Command-line entry point: one binary, one subcommand per pipeline step.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "unite/dataset.hpp"
#include "unite/encoder.hpp"
#include "unite/ensemble.hpp"
#include "unite/error.hpp"
#include "unite/evaluation.hpp"
#include "unite/io.hpp"
#include "unite/kv_config.hpp"
#include "unite/manifest.hpp"
#include "unite/scoring.hpp"
#include "unite/synthesis.hpp"
#include "unite/toy_corpus.hpp"
#include "unite/trainer.hpp"

namespace fs = std::filesystem;
using namespace unite;

namespace {

constexpr std::uint64_t kDefaultSeed = 1;

void log(const std::string& line) { std::cerr << line << '\n'; }

std::string fmt(double v) { return io::format_double(v); }

// "id=path", or a bare path whose file stem becomes the id.
std::pair<std::string, std::string> named_path(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) return {fs::path(arg).stem().string(), arg};
  if (eq == 0 || eq + 1 == arg.size()) throw Error(ErrorKind::InvalidArgument, "expected id=path, got '" + arg + "'");
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

void require_distinct(const std::string& input, const std::string& output) {
  std::error_code ec;
  if (fs::exists(output) && fs::equivalent(input, output, ec)) {
    throw Error(ErrorKind::InvalidArgument, "output " + output + " would overwrite input " + input);
  }
}

// Synthetic corpora (.jsonl) contribute their labeled examples; anything else
// is read as a segments TSV.
std::vector<text::SegmentRecord> load_training_records(const std::string& path) {
  if (fs::path(path).extension() == ".jsonl") {
    const auto corpus = synth::load_corpus(path);
    return synth::to_training_records(corpus);
  }
  return data::read_segments(path);
}

void save_scores(const std::string& path, const std::vector<eval::ScoreRecord>& scores) {
  io::write_atomic(path, [&](std::ostream& out) { eval::write_scores(out, scores); });
}

struct Invocation {
  RunManifest manifest;

  Invocation(std::string command, int argc, char** argv) {
    manifest.command = std::move(command);
    manifest.argv.assign(argv, argv + argc);
    manifest.started_at = utc_timestamp();
  }
};

// ---------------------------------------------------------------- vocab

struct VocabArgs {
  std::vector<std::string> corpus;
  std::string out;
  std::size_t max_size = 32000;
};

void run_vocab(const VocabArgs& a, Invocation& inv) {
  std::vector<std::string> lines;
  for (const auto& path : a.corpus) {
    auto in = io::open_input(path);
    for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
    inv.manifest.inputs.push_back(path);
  }
  const auto vocab = text::Vocabulary::build(lines, a.max_size);
  vocab.save(a.out);
  log("vocabulary: " + std::to_string(vocab.size()) + " entries");
  inv.manifest.config["max_size"] = std::to_string(a.max_size);
  inv.manifest.outputs.push_back(a.out);
  write_manifest(inv.manifest, a.out);
}

// ---------------------------------------------------------------- toy

struct ToyArgs {
  std::string out_dir;
  std::size_t parallel_pairs = 1000;
  std::size_t scored_pairs = 150;
  std::size_t test_pairs = 100;
  double da_noise = 0.3;
  std::uint64_t seed = kDefaultSeed;
};

void run_toy(const ToyArgs& a, Invocation& inv) {
  fs::create_directories(a.out_dir);
  const toy::ToyCorpusConfig config;
  const fs::path dir(a.out_dir);

  const auto parallel = toy::make_parallel(config, a.parallel_pairs, a.seed);
  for (const auto& direction : config.directions) {
    const auto path = (dir / ("parallel." + direction + ".tsv")).string();
    io::write_atomic(path, [&](std::ostream& out) {
      for (const auto& p : parallel) {
        if (p.direction == direction) out << p.source << '\t' << p.reference << '\n';
      }
    });
    inv.manifest.outputs.push_back(path);
  }

  auto scored = [&](const std::string& name, std::size_t pairs, std::uint64_t stream,
                    const toy::ScoredSetOptions& options) {
    const auto source_pairs = toy::make_parallel(config, pairs, a.seed * 1000 + stream);
    const auto records = toy::make_scored_segments(config, source_pairs, options, a.seed * 1000 + stream);
    const auto path = (dir / name).string();
    io::write_atomic(path, [&](std::ostream& out) { data::write_segments(out, records); });
    inv.manifest.outputs.push_back(path);
  };
  toy::ScoredSetOptions da;
  da.random_strengths = true;
  da.rater_noise = a.da_noise;
  da.domain = "da";
  da.id_prefix = "da-";
  scored("da.tsv", a.scored_pairs, 1, da);
  toy::ScoredSetOptions mqm;
  mqm.random_strengths = true;
  mqm.domain = "mqm";
  mqm.id_prefix = "mqm-";
  scored("mqm.tsv", a.scored_pairs, 2, mqm);
  toy::ScoredSetOptions test;
  test.domain = "toy";
  test.id_prefix = "test-";
  scored("test.tsv", a.test_pairs, 3, test);
  toy::ScoredSetOptions dev = test;
  dev.id_prefix = "dev-";
  scored("dev.tsv", a.test_pairs, 4, dev);

  const auto words_path = (dir / "words.txt").string();
  const auto words = toy::vocabulary_corpus(config);
  io::write_atomic(words_path, [&](std::ostream& out) {
    for (const auto& line : words) out << line << '\n';
  });
  inv.manifest.outputs.push_back(words_path);

  inv.manifest.seed = a.seed;
  inv.manifest.config["parallel_pairs"] = std::to_string(a.parallel_pairs);
  inv.manifest.config["scored_pairs"] = std::to_string(a.scored_pairs);
  inv.manifest.config["test_pairs"] = std::to_string(a.test_pairs);
  inv.manifest.config["da_noise"] = fmt(a.da_noise);
  write_manifest(inv.manifest, (dir / "toy").string());
  log("toy corpus written to " + a.out_dir);
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::vector<std::string> parallel;  // direction=path
  std::string generator = "noise";
  std::string hypotheses;
  double min_strength = 0.0;
  double max_strength = 0.6;
  double ratio = 0.15;
  std::string domain = "synthetic";
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

void run_synth(const SynthArgs& a, Invocation& inv) {
  std::vector<synth::ParallelPair> pairs;
  for (const auto& arg : a.parallel) {
    const auto [direction, path] = named_path(arg);
    require_distinct(path, a.out);
    auto ingested = synth::ingest_parallel(path, direction);
    for (const auto& m : ingested.messages) log("warning: " + m);
    pairs.insert(pairs.end(), ingested.pairs.begin(), ingested.pairs.end());
    inv.manifest.inputs.push_back(path);
  }
  if (pairs.empty()) throw Error(ErrorKind::InvalidArgument, "no usable parallel pairs");

  std::unique_ptr<synth::HypothesisGenerator> generator;
  if (a.generator == "noise") {
    generator = std::make_unique<synth::NoiseGenerator>(a.min_strength, a.max_strength, a.seed,
                                                        synth::reference_word_pool(pairs));
  } else if (a.generator == "identity") {
    generator = std::make_unique<synth::IdentityGenerator>();
  } else if (a.generator == "file") {
    if (a.hypotheses.empty()) throw Error(ErrorKind::InvalidArgument, "--generator file needs --hypotheses");
    generator = std::make_unique<synth::FileGenerator>(synth::FileGenerator::load(a.hypotheses));
    inv.manifest.inputs.push_back(a.hypotheses);
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown generator '" + a.generator + "'");
  }

  auto generated = synth::generate_hypotheses(pairs, *generator, a.domain);
  for (const auto& m : generated.messages) log("warning: " + m);
  std::mt19937_64 rng(a.seed);
  synth::downgrade_quality(generated.examples, a.ratio, rng);
  io::write_atomic(a.out, [&](std::ostream& out) { synth::write_corpus(out, generated.examples); });
  log("synthetic corpus: " + std::to_string(generated.examples.size()) + " examples, " +
      std::to_string(generated.warnings) + " skipped");

  inv.manifest.seed = a.seed;
  inv.manifest.config["generator"] = a.generator;
  inv.manifest.config["min_strength"] = fmt(a.min_strength);
  inv.manifest.config["max_strength"] = fmt(a.max_strength);
  inv.manifest.config["ratio"] = fmt(a.ratio);
  inv.manifest.config["domain"] = a.domain;
  inv.manifest.outputs.push_back(a.out);
  write_manifest(inv.manifest, a.out);
}

// ---------------------------------------------------------------- label

struct LabelArgs {
  std::string corpus;
  std::vector<std::string> checkpoints;
  std::string vocab;
  std::string out;
};

void run_label(const LabelArgs& a, Invocation& inv) {
  require_distinct(a.corpus, a.out);
  auto examples = synth::load_corpus(a.corpus);
  const auto vocab = text::Vocabulary::load(a.vocab);
  std::vector<model::EncoderModel> checkpoints;
  for (const auto& path : a.checkpoints) {
    checkpoints.push_back(model::load_checkpoint(path));
    if (checkpoints.back().config.vocab_size != vocab.size()) {
      throw Error(ErrorKind::Mismatch, path + ": checkpoint vocabulary size differs from " + a.vocab);
    }
    inv.manifest.inputs.push_back(path);
  }
  synth::pseudo_label(examples, checkpoints, vocab);
  synth::rank_normalize(examples);
  io::write_atomic(a.out, [&](std::ostream& out) { synth::write_corpus(out, examples); });
  log("labeled " + std::to_string(examples.size()) + " examples with " + std::to_string(checkpoints.size()) +
      " checkpoint(s)");

  inv.manifest.inputs.push_back(a.corpus);
  inv.manifest.inputs.push_back(a.vocab);
  inv.manifest.outputs.push_back(a.out);
  write_manifest(inv.manifest, a.out);
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string stage = "pretrain";
  std::string data;
  std::string init;
  std::string config;
  std::string vocab;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

std::string history_path(const std::string& checkpoint) { return checkpoint + ".history.jsonl"; }

void run_train(const TrainArgs& a, Invocation& inv) {
  const auto stage = train::parse_stage(a.stage);
  if (!stage) throw Error(ErrorKind::InvalidArgument, "unknown stage '" + a.stage + "'");
  const auto vocab = text::Vocabulary::load(a.vocab);
  const auto records = load_training_records(a.data);

  KeyValueConfig kv;
  if (!a.config.empty()) {
    kv = KeyValueConfig::load(a.config);
    inv.manifest.inputs.push_back(a.config);
  }
  auto config = train::TrainConfig::from_keys(kv, "", train::TrainConfig::desk(*stage));
  config.stage = *stage;
  config.seed = a.seed;

  model::EncoderModel start;
  if (!a.init.empty()) {
    require_distinct(a.init, a.out);
    start = model::load_checkpoint(a.init);
    inv.manifest.inputs.push_back(a.init);
    if (start.config.vocab_size != vocab.size()) {
      throw Error(ErrorKind::Mismatch, a.init + ": checkpoint vocabulary size differs from " + a.vocab);
    }
  } else {
    model::EncoderConfig encoder;
    encoder = train::encoder_config_from_keys(kv, "model.", encoder);
    encoder.vocab_size = vocab.size();
    encoder.seed = a.seed;
    start = model::init_model(encoder);
  }
  kv.require_all_used();

  auto result = train::train_stage(std::move(start), records, config, vocab, [](const train::StepRecord& s) {
    if (s.step % 50 == 0) log("step " + std::to_string(s.step) + " loss " + fmt(s.loss_total));
  });
  model::save_checkpoint(result.model, a.out);
  io::write_atomic(history_path(a.out), [&](std::ostream& out) { train::write_history(out, result.history); });
  if (!result.history.steps.empty()) {
    log("trained " + std::to_string(result.history.steps.size()) + " steps, final loss " +
        fmt(result.history.steps.back().loss_total));
  }

  inv.manifest.seed = a.seed;
  inv.manifest.config["stage"] = std::string(train::stage_name(config.stage));
  inv.manifest.config["batch_size"] = std::to_string(config.batch_size);
  inv.manifest.config["lr_encoder"] = fmt(config.lr_encoder);
  inv.manifest.config["lr_head"] = fmt(config.lr_head);
  inv.manifest.config["epochs"] = std::to_string(config.epochs);
  inv.manifest.inputs.push_back(a.data);
  inv.manifest.inputs.push_back(a.vocab);
  inv.manifest.outputs = {a.out, history_path(a.out)};
  write_manifest(inv.manifest, a.out);
}

// ---------------------------------------------------------------- pipeline

struct PipelineArgs {
  std::string config;
  std::string out_dir;
  std::uint64_t seed = kDefaultSeed;
};

void run_pipeline(const PipelineArgs& a, Invocation& inv) {
  auto kv = KeyValueConfig::load(a.config);
  const fs::path base = fs::path(a.config).parent_path();
  auto resolve = [&](const std::string& key, bool required) -> std::string {
    const auto value = kv.get_string(key, "");
    if (value.empty()) {
      if (required) throw Error(ErrorKind::InvalidArgument, a.config + ": missing key " + key);
      return "";
    }
    const fs::path p(value);
    return (p.is_absolute() ? p : base / p).string();
  };
  const auto vocab_path = resolve("vocab", true);
  const auto synthetic_path = resolve("synthetic", false);
  const auto da_path = resolve("da", false);
  const auto mqm_path = resolve("mqm", false);

  train::PipelineConfig config;
  config.model = train::encoder_config_from_keys(kv, "model.", config.model);
  config.pretrain = train::TrainConfig::from_keys(kv, "pretrain.", config.pretrain);
  config.da = train::TrainConfig::from_keys(kv, "da.", config.da);
  config.mqm = train::TrainConfig::from_keys(kv, "mqm.", config.mqm);
  config.n_seeds = kv.get_size("seeds", config.n_seeds);
  config.base_seed = a.seed;
  kv.require_all_used();

  const auto vocab = text::Vocabulary::load(vocab_path);
  std::vector<text::SegmentRecord> synthetic, da, mqm;
  if (!synthetic_path.empty()) synthetic = load_training_records(synthetic_path);
  if (!da_path.empty()) da = load_training_records(da_path);
  if (!mqm_path.empty()) mqm = load_training_records(mqm_path);
  inv.manifest.inputs = {a.config, vocab_path};
  for (const auto& p : {synthetic_path, da_path, mqm_path}) {
    if (!p.empty()) inv.manifest.inputs.push_back(p);
  }

  fs::create_directories(a.out_dir);
  const fs::path out(a.out_dir);
  const auto started = std::chrono::steady_clock::now();
  const auto runs = train::run_pipeline(
      {synthetic, da, mqm}, config, vocab, [&](std::size_t i, train::Stage stage, const train::StageResult& r) {
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1fs", seconds);
        log("seed " + std::to_string(config.base_seed + i) + " " + std::string(train::stage_name(stage)) + ": " +
            std::to_string(r.history.steps.size()) + " steps, final loss " +
            (r.history.steps.empty() ? std::string("-") : fmt(r.history.steps.back().loss_total)) + " (" + buf + ")");
      });

  for (const auto& run : runs) {
    const auto dir = out / ("seed-" + std::to_string(run.seed));
    fs::create_directories(dir);
    for (std::size_t s = 0; s < run.stages.size(); ++s) {
      const auto ckpt = (dir / (std::string(train::stage_name(run.stages[s])) + ".ckpt")).string();
      model::save_checkpoint(run.checkpoints[s], ckpt);
      io::write_atomic(history_path(ckpt), [&](std::ostream& o) { train::write_history(o, run.histories[s]); });
      inv.manifest.outputs.push_back(ckpt);
      inv.manifest.outputs.push_back(history_path(ckpt));
    }
    const auto final_path = (dir / "final.ckpt").string();
    model::save_checkpoint(run.final_model(), final_path);
    inv.manifest.outputs.push_back(final_path);
  }

  inv.manifest.seed = a.seed;
  for (const auto& [key, value] : kv.values()) inv.manifest.config[key] = value;
  inv.manifest.config["seeds"] = std::to_string(config.n_seeds);
  write_manifest(inv.manifest, (out / "pipeline").string());
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string checkpoint;
  std::string vocab;
  std::string segments;
  std::string format = "src+ref";
  std::string out;
};

void run_predict(const PredictArgs& a, Invocation& inv) {
  const auto format = text::parse_format(a.format);
  if (!format) throw Error(ErrorKind::InvalidArgument, "unknown format '" + a.format + "' (src, ref, src+ref)");
  require_distinct(a.segments, a.out);
  const auto model = model::load_checkpoint(a.checkpoint);
  const auto vocab = text::Vocabulary::load(a.vocab);
  const auto records = data::read_segments(a.segments);
  const auto scores = score_segments(model, vocab, records, *format);
  save_scores(a.out, scores);
  log("scored " + std::to_string(scores.size()) + " segments as " + a.format);

  inv.manifest.config["format"] = a.format;
  inv.manifest.inputs = {a.checkpoint, a.vocab, a.segments};
  inv.manifest.outputs.push_back(a.out);
  write_manifest(inv.manifest, a.out);
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string scores;
  double threshold = 0.0;
  std::vector<std::string> domains;
  std::vector<std::string> directions;
  std::string out;
  std::string json;
};

void run_evaluate(const EvaluateArgs& a, Invocation& inv) {
  require_distinct(a.scores, a.out);
  const auto records = eval::read_scores(a.scores);
  const auto report = eval::build_report(records, a.domains, a.directions, a.threshold);
  const auto text = eval::format_report(report);
  io::write_atomic(a.out, [&](std::ostream& out) { out << text; });
  inv.manifest.outputs.push_back(a.out);
  if (!a.json.empty()) {
    const auto json = eval::report_json(report);
    io::write_atomic(a.json, [&](std::ostream& out) { out << json; });
    inv.manifest.outputs.push_back(a.json);
  }
  std::cout << text;

  inv.manifest.config["threshold"] = fmt(a.threshold);
  inv.manifest.inputs.push_back(a.scores);
  write_manifest(inv.manifest, a.out);
}

// ---------------------------------------------------------------- ensemble

std::vector<ensemble::Member> load_members(const std::vector<std::string>& args, Invocation& inv) {
  std::vector<ensemble::Member> members;
  for (const auto& arg : args) {
    auto [id, path] = named_path(arg);
    members.push_back({id, eval::read_scores(path)});
    inv.manifest.inputs.push_back(path);
    inv.manifest.config["member." + id] = path;
  }
  return members;
}

struct EnsembleArgs {
  std::vector<std::string> scores;
  std::string spec;
  std::string out;
};

void run_ensemble(const EnsembleArgs& a, Invocation& inv) {
  for (const auto& s : a.scores) require_distinct(named_path(s).second, a.out);
  const auto members = load_members(a.scores, inv);
  std::vector<eval::ScoreRecord> averaged;
  if (a.spec.empty()) {
    std::vector<std::vector<eval::ScoreRecord>> sets;
    for (const auto& m : members) sets.push_back(m.scores);
    averaged = ensemble::average_predictions(sets);
  } else {
    averaged = ensemble::route_predictions(ensemble::load_spec(a.spec), members);
    inv.manifest.inputs.push_back(a.spec);
  }
  save_scores(a.out, averaged);
  log("averaged " + std::to_string(members.size()) + " member(s) over " + std::to_string(averaged.size()) +
      " records");
  inv.manifest.outputs.push_back(a.out);
  write_manifest(inv.manifest, a.out);
}

struct SelectArgs {
  std::vector<std::string> dev;
  std::size_t max_subset = 6;
  double threshold = 0.0;
  std::string out;
};

void run_select(const SelectArgs& a, Invocation& inv) {
  const auto members = load_members(a.dev, inv);
  std::vector<std::string> ids;
  for (const auto& m : members) ids.push_back(m.id);
  const auto candidates = ensemble::all_subsets(ids, a.max_subset);
  const auto selection = ensemble::select_per_direction(members, candidates, a.threshold);
  for (const auto& w : selection.warnings) log("warning: " + w);
  const auto json = ensemble::spec_json(selection.spec);
  io::write_atomic(a.out, [&](std::ostream& out) { out << json; });
  std::cout << json;

  inv.manifest.config["max_subset"] = std::to_string(a.max_subset);
  inv.manifest.config["threshold"] = fmt(a.threshold);
  inv.manifest.outputs.push_back(a.out);
  write_manifest(inv.manifest, a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unite: unified translation evaluation (source-only, reference-only, source+reference)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  VocabArgs vocab;
  auto* vocab_cmd = app.add_subcommand("vocab", "Build a vocabulary from plain-text corpora");
  vocab_cmd->add_option("--corpus", vocab.corpus, "Text files, one sentence per line")->required()->check(CLI::ExistingFile);
  vocab_cmd->add_option("--max-size", vocab.max_size, "Vocabulary size including reserved tokens")->capture_default_str();
  vocab_cmd->add_option("--out", vocab.out, "Vocabulary file")->required();

  ToyArgs toy;
  auto* toy_cmd = app.add_subcommand("toy", "Write a toy corpus with known hypothesis quality");
  toy_cmd->add_option("--out-dir", toy.out_dir, "Output directory")->required();
  toy_cmd->add_option("--parallel-pairs", toy.parallel_pairs, "Parallel pairs per direction")->capture_default_str();
  toy_cmd->add_option("--scored-pairs", toy.scored_pairs, "Source pairs per direction in da.tsv and mqm.tsv")
      ->capture_default_str();
  toy_cmd->add_option("--test-pairs", toy.test_pairs, "Source pairs per direction in dev.tsv and test.tsv")
      ->capture_default_str();
  toy_cmd->add_option("--da-noise", toy.da_noise, "Rater noise in da.tsv")->capture_default_str();
  toy_cmd->add_option("--seed", toy.seed, "Random seed")->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate and downgrade synthetic hypotheses");
  synth_cmd->add_option("--parallel", synth.parallel, "direction=path of a source<TAB>reference file")->required();
  synth_cmd->add_option("--generator", synth.generator, "noise, identity or file")->capture_default_str();
  synth_cmd->add_option("--hypotheses", synth.hypotheses, "Hypothesis lines for --generator file");
  synth_cmd->add_option("--min-strength", synth.min_strength, "Lowest noise strength")->capture_default_str();
  synth_cmd->add_option("--max-strength", synth.max_strength, "Highest noise strength")->capture_default_str();
  synth_cmd->add_option("--ratio", synth.ratio, "Fraction of examples to downgrade")->capture_default_str();
  synth_cmd->add_option("--domain", synth.domain, "Domain tag")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Synthetic corpus (JSONL)")->required();

  LabelArgs label;
  auto* label_cmd = app.add_subcommand("label", "Pseudo-label a synthetic corpus and rank-normalize the scores");
  label_cmd->add_option("--corpus", label.corpus, "Synthetic corpus (JSONL)")->required()->check(CLI::ExistingFile);
  label_cmd->add_option("--checkpoint", label.checkpoints, "Labeling checkpoints")->required();
  label_cmd->add_option("--vocab", label.vocab, "Vocabulary file")->required();
  label_cmd->add_option("--out", label.out, "Labeled corpus (JSONL)")->required();

  TrainArgs trainer;
  auto* train_cmd = app.add_subcommand("train", "Run one training stage");
  train_cmd->add_option("--stage", trainer.stage, "pretrain, da or mqm")->capture_default_str();
  train_cmd->add_option("--data", trainer.data, "Segments TSV or labeled synthetic corpus (JSONL)")->required();
  train_cmd->add_option("--init", trainer.init, "Checkpoint to continue from");
  train_cmd->add_option("--config", trainer.config, "key = value training config");
  train_cmd->add_option("--vocab", trainer.vocab, "Vocabulary file")->required();
  train_cmd->add_option("--seed", trainer.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--out", trainer.out, "Output checkpoint")->required();

  PipelineArgs pipeline;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "Pre-train, then fine-tune on DA and MQM, for several seeds");
  pipeline_cmd->add_option("--config", pipeline.config, "Pipeline config bundle")->required()->check(CLI::ExistingFile);
  pipeline_cmd->add_option("--out-dir", pipeline.out_dir, "Output directory")->required();
  pipeline_cmd->add_option("--seed", pipeline.seed, "First seed; seed i is seed + i")->capture_default_str();

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Score segments with a checkpoint");
  predict_cmd->add_option("--checkpoint", predict.checkpoint, "Model checkpoint")->required();
  predict_cmd->add_option("--vocab", predict.vocab, "Vocabulary file")->required();
  predict_cmd->add_option("--segments", predict.segments, "Segments TSV")->required();
  predict_cmd->add_option("--format", predict.format, "src, ref or src+ref")->capture_default_str();
  predict_cmd->add_option("--out", predict.out, "Scores TSV")->required();

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Segment-level Kendall's tau report");
  evaluate_cmd->add_option("--scores", evaluate.scores, "Scores TSV with human judgments")->required();
  evaluate_cmd->add_option("--threshold", evaluate.threshold, "Minimum human score gap for a pair")->capture_default_str();
  evaluate_cmd->add_option("--domain", evaluate.domains, "Domains to report (default: all present)");
  evaluate_cmd->add_option("--direction", evaluate.directions, "Directions to report (default: all present)");
  evaluate_cmd->add_option("--out", evaluate.out, "Text report")->required();
  evaluate_cmd->add_option("--json", evaluate.json, "Also write the report as JSON");

  EnsembleArgs ens;
  auto* ensemble_cmd = app.add_subcommand("ensemble", "Average score files, optionally routed per direction");
  ensemble_cmd->add_option("--scores", ens.scores, "id=path of a scores TSV")->required();
  ensemble_cmd->add_option("--spec", ens.spec, "Ensemble spec (JSON) from 'select'");
  ensemble_cmd->add_option("--out", ens.out, "Averaged scores TSV")->required();

  SelectArgs select;
  auto* select_cmd = app.add_subcommand("select", "Choose per-direction ensembles on dev predictions");
  select_cmd->add_option("--dev", select.dev, "id=path of a dev scores TSV")->required();
  select_cmd->add_option("--max-subset", select.max_subset, "Largest subset to try")->capture_default_str();
  select_cmd->add_option("--threshold", select.threshold, "Tau threshold")->capture_default_str();
  select_cmd->add_option("--out", select.out, "Ensemble spec (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    for (auto* sub : app.get_subcommands()) {
      Invocation inv(sub->get_name(), argc, argv);
      const auto& name = sub->get_name();
      if (name == "vocab") run_vocab(vocab, inv);
      else if (name == "toy") run_toy(toy, inv);
      else if (name == "synth") run_synth(synth, inv);
      else if (name == "label") run_label(label, inv);
      else if (name == "train") run_train(trainer, inv);
      else if (name == "pipeline") run_pipeline(pipeline, inv);
      else if (name == "predict") run_predict(predict, inv);
      else if (name == "evaluate") run_evaluate(evaluate, inv);
      else if (name == "ensemble") run_ensemble(ens, inv);
      else if (name == "select") run_select(select, inv);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << error_kind_name(e.kind()) << ": " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: io: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
