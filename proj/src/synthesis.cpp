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

#include "unite/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include <boost/math/distributions/normal.hpp>

#include "json.hpp"
#include "unite/error.hpp"
#include "unite/io.hpp"
#include "unite/random.hpp"
#include "unite/stats.hpp"

namespace unite::synth {

namespace {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string normalized = text::normalize_whitespace(text);
  std::size_t start = 0;
  while (start < normalized.size()) {
    auto space = normalized.find(' ', start);
    if (space == std::string::npos) space = normalized.size();
    words.push_back(normalized.substr(start, space - start));
    start = space + 1;
  }
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

// splitmix64 finalizer; decorrelates per-item RNG streams.
std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::optional<CorruptionKind> parse_corruption(std::string_view name) {
  for (auto k : {CorruptionKind::WordDrop, CorruptionKind::SpanDrop, CorruptionKind::Substitute}) {
    if (corruption_name(k) == name) return k;
  }
  return std::nullopt;
}

nlohmann::ordered_json ops_to_json(std::span<const CorruptionOp> ops) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& op : ops) {
    arr.push_back({{"kind", corruption_name(op.kind)}, {"position", op.position}, {"length", op.length}});
  }
  return arr;
}

std::vector<CorruptionOp> ops_from_json(const nlohmann::json& arr) {
  std::vector<CorruptionOp> ops;
  for (const auto& j : arr) {
    auto kind = parse_corruption(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorKind::Parse, "unknown corruption kind " + j.at("kind").get<std::string>());
    ops.push_back({*kind, j.at("position").get<std::size_t>(), j.at("length").get<std::size_t>()});
  }
  return ops;
}

}  // namespace

std::size_t word_count(std::string_view text) { return split_words(text).size(); }

std::string_view corruption_name(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::WordDrop:
      return "word-drop";
    case CorruptionKind::SpanDrop:
      return "span-drop";
    case CorruptionKind::Substitute:
      return "substitute";
  }
  return "unknown";
}

IngestResult ingest_parallel(const std::string& path, std::string_view direction) {
  auto in = io::open_input(path);
  return ingest_parallel(in, path, direction);
}

IngestResult ingest_parallel(std::istream& in, std::string_view origin, std::string_view direction) {
  IngestResult result;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = io::split_tabs(line);
    std::string problem;
    if (fields.size() != 2) {
      problem = "expected source<TAB>reference";
    } else if (text::normalize_whitespace(fields[0]).empty() || text::normalize_whitespace(fields[1]).empty()) {
      problem = "blank source or reference";
    }
    if (!problem.empty()) {
      ++result.warnings;
      result.messages.push_back(at_line(origin, line_no, problem + ", skipped"));
      continue;
    }
    result.pairs.push_back({text::normalize_whitespace(fields[0]), text::normalize_whitespace(fields[1]),
                            std::string(direction)});
  }
  return result;
}

Hypothesis IdentityGenerator::generate(const ParallelPair& pair, std::size_t) { return {pair.reference, {}, 0.0}; }

NoiseGenerator::NoiseGenerator(double min_strength, double max_strength, std::uint64_t seed,
                               std::vector<std::string> word_pool)
    : min_strength_(min_strength), max_strength_(max_strength), seed_(seed), pool_(std::move(word_pool)) {
  if (!(min_strength >= 0.0 && max_strength <= 1.0 && min_strength <= max_strength)) {
    throw Error(ErrorKind::InvalidArgument, "noise strengths must satisfy 0 <= min <= max <= 1");
  }
}

std::string NoiseGenerator::id() const {
  if (min_strength_ == max_strength_) return "noise-" + io::format_double(min_strength_);
  return "noise-" + io::format_double(min_strength_) + "-" + io::format_double(max_strength_);
}

Hypothesis NoiseGenerator::corrupt(std::string_view text, std::size_t edits, std::span<const std::string> pool,
                                   std::mt19937_64& rng) {
  auto words = split_words(text);
  Hypothesis h;
  for (std::size_t e = 0; e < edits; ++e) {
    const bool substitute = uniform01(rng) < 0.5;
    const std::size_t position = uniform_index(rng, words.size());
    if (substitute && !pool.empty()) {
      // Draw from the pool minus the current word.
      const auto current = std::find(pool.begin(), pool.end(), words[position]);
      const std::size_t choices = pool.size() - (current != pool.end() ? 1 : 0);
      if (choices > 0) {
        std::size_t pick = uniform_index(rng, choices);
        if (current != pool.end() && pick >= static_cast<std::size_t>(current - pool.begin())) ++pick;
        words[position] = pool[pick];
        h.noise.push_back({CorruptionKind::Substitute, position, 1});
        continue;
      }
    }
    if (words.size() > 1) {
      words.erase(words.begin() + static_cast<std::ptrdiff_t>(position));
      h.noise.push_back({CorruptionKind::WordDrop, position, 1});
    }
  }
  h.text = join_words(words);
  return h;
}

Hypothesis NoiseGenerator::generate(const ParallelPair& pair, std::size_t index) {
  std::mt19937_64 rng(mix(seed_, index));
  const double strength =
      min_strength_ == max_strength_ ? min_strength_ : min_strength_ + (max_strength_ - min_strength_) * uniform01(rng);
  const auto words = word_count(pair.reference);
  const auto edits = static_cast<std::size_t>(std::lround(strength * static_cast<double>(words)));
  auto h = corrupt(pair.reference, edits, pool_, rng);
  h.strength = strength;
  if (edits == 0) h.text = pair.reference;
  return h;
}

FileGenerator::FileGenerator(std::vector<std::string> lines, std::string name)
    : lines_(std::move(lines)), name_(std::move(name)) {}

FileGenerator FileGenerator::load(const std::string& path) {
  auto in = io::open_input(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return FileGenerator(std::move(lines), "file");
}

Hypothesis FileGenerator::generate(const ParallelPair&, std::size_t index) {
  if (index >= lines_.size()) {
    throw Error(ErrorKind::InvalidArgument, "no hypothesis line " + std::to_string(index + 1) + " in " + name_);
  }
  const auto text = text::normalize_whitespace(lines_[index]);
  if (text.empty()) throw Error(ErrorKind::InvalidArgument, "blank hypothesis line " + std::to_string(index + 1));
  return {text, {}, 0.0};
}

std::vector<std::string> reference_word_pool(std::span<const ParallelPair> pairs) {
  std::set<std::string> words;
  for (const auto& p : pairs) {
    for (auto& w : split_words(p.reference)) words.insert(std::move(w));
  }
  return {words.begin(), words.end()};
}

GenerationResult generate_hypotheses(std::span<const ParallelPair> pairs, HypothesisGenerator& generator,
                                     std::string_view domain) {
  GenerationResult result;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    Hypothesis h;
    try {
      h = generator.generate(pair, i);
    } catch (const std::exception& e) {
      ++result.warnings;
      result.messages.push_back("pair " + std::to_string(i + 1) + ": " + e.what() + ", skipped");
      continue;
    }
    SyntheticExample ex;
    ex.record.segment_id = pair.direction + "-" + std::to_string(i);
    ex.record.direction = pair.direction;
    ex.record.domain = domain;
    ex.record.system = generator.id();
    ex.record.source = pair.source;
    ex.record.reference = pair.reference;
    ex.record.hypothesis = std::move(h.text);
    ex.generator = generator.id();
    ex.noise_strength = h.strength;
    ex.noise = std::move(h.noise);
    result.examples.push_back(std::move(ex));
  }
  return result;
}

void downgrade_quality(std::vector<SyntheticExample>& examples, double ratio, std::mt19937_64& rng) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "downgrade ratio must be in [0, 1], got " + std::to_string(ratio));
  }
  const auto target = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(examples.size())));
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(std::span<std::size_t>(order), rng);

  std::size_t done = 0;
  for (std::size_t idx : order) {
    if (done == target) break;
    auto& ex = examples[idx];
    auto words = split_words(ex.record.hypothesis);
    if (words.size() < 2) continue;

    const std::size_t n = words.size();
    const auto span_cap = std::min(static_cast<std::size_t>(std::ceil(0.3 * static_cast<double>(n))), n - 1);
    const bool want_span = uniform01(rng) < 0.5;
    CorruptionOp op;
    if (want_span && span_cap >= 2) {
      op.kind = CorruptionKind::SpanDrop;
      op.length = 2 + uniform_index(rng, span_cap - 1);
    } else {
      op.kind = CorruptionKind::WordDrop;
      op.length = 1;
    }
    op.position = uniform_index(rng, n - op.length + 1);
    words.erase(words.begin() + static_cast<std::ptrdiff_t>(op.position),
                words.begin() + static_cast<std::ptrdiff_t>(op.position + op.length));
    ex.record.hypothesis = join_words(words);
    ex.downgraded = true;
    ex.corruptions.push_back(op);
    ++done;
  }
  if (done < target) {
    throw Error(ErrorKind::InvalidArgument, "only " + std::to_string(done) + " of " + std::to_string(target) +
                                                " requested examples have a hypothesis of two or more words");
  }
}

void pseudo_label(std::vector<SyntheticExample>& examples, std::span<const model::EncoderModel> checkpoints,
                  const text::Vocabulary& vocab) {
  if (checkpoints.empty()) throw Error(ErrorKind::InvalidArgument, "pseudo-labeling needs at least one checkpoint");
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    if (checkpoints[c].config.vocab_size != vocab.size()) {
      throw Error(ErrorKind::Mismatch, "checkpoint " + std::to_string(c) + " expects vocabulary size " +
                                           std::to_string(checkpoints[c].config.vocab_size) + ", got " +
                                           std::to_string(vocab.size()));
    }
  }
  for (auto& ex : examples) {
    ex.raw_scores.clear();
    for (const auto& checkpoint : checkpoints) {
      const auto seq =
          text::build_input_sequence(ex.record, text::InputFormat::SrcRef, vocab, checkpoint.config.max_len);
      ex.raw_scores.push_back(model::forward(checkpoint, seq));
    }
    ex.mean_raw_score = exact_mean(ex.raw_scores);
    ex.final_score.reset();
  }
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidArgument, "quantile probability must be in (0, 1)");
  static const boost::math::normal_distribution<double> standard(0.0, 1.0);
  return boost::math::quantile(standard, p);
}

void rank_normalize(std::vector<SyntheticExample>& examples) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!examples[i].mean_raw_score) {
      throw Error(ErrorKind::InvalidArgument,
                  "example " + examples[i].record.segment_id + " has no pseudo-label to rank");
    }
    groups[examples[i].record.direction].push_back(i);
  }
  for (auto& [direction, members] : groups) {
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      const auto& ea = examples[a];
      const auto& eb = examples[b];
      if (*ea.mean_raw_score != *eb.mean_raw_score) return *ea.mean_raw_score < *eb.mean_raw_score;
      if (ea.record.segment_id != eb.record.segment_id) return ea.record.segment_id < eb.record.segment_id;
      return ea.record.system < eb.record.system;
    });
    const auto n = static_cast<double>(members.size());
    for (std::size_t r = 0; r < members.size(); ++r) {
      examples[members[r]].final_score = normal_quantile((static_cast<double>(r + 1) - 0.5) / n);
    }
  }
}

void write_corpus(std::ostream& out, std::span<const SyntheticExample> examples) {
  for (const auto& ex : examples) {
    const auto& r = ex.record;
    nlohmann::ordered_json j;
    j["schema"] = kCorpusSchema;
    j["segment_id"] = r.segment_id;
    j["direction"] = r.direction;
    j["domain"] = r.domain;
    j["system"] = r.system;
    j["source"] = r.source;
    j["hypothesis"] = r.hypothesis;
    j["reference"] = r.reference ? nlohmann::ordered_json(*r.reference) : nlohmann::ordered_json(nullptr);
    j["generator"] = ex.generator;
    j["noise_strength"] = ex.noise_strength;
    j["noise"] = ops_to_json(ex.noise);
    j["downgraded"] = ex.downgraded;
    j["corruptions"] = ops_to_json(ex.corruptions);
    j["raw_scores"] = ex.raw_scores;
    j["mean_raw_score"] = ex.mean_raw_score ? nlohmann::ordered_json(*ex.mean_raw_score) : nullptr;
    j["final_score"] = ex.final_score ? nlohmann::ordered_json(*ex.final_score) : nullptr;
    out << j.dump() << '\n';
  }
}

std::vector<SyntheticExample> read_corpus(std::istream& in, std::string_view origin) {
  std::vector<SyntheticExample> examples;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.at("schema").get<std::string>() != kCorpusSchema) {
        throw Error(ErrorKind::Format, "unsupported schema " + j.at("schema").get<std::string>());
      }
      SyntheticExample ex;
      auto& r = ex.record;
      r.segment_id = j.at("segment_id").get<std::string>();
      r.direction = j.at("direction").get<std::string>();
      r.domain = j.at("domain").get<std::string>();
      r.system = j.at("system").get<std::string>();
      r.source = j.at("source").get<std::string>();
      r.hypothesis = j.at("hypothesis").get<std::string>();
      if (!j.at("reference").is_null()) r.reference = j.at("reference").get<std::string>();
      ex.generator = j.at("generator").get<std::string>();
      ex.noise_strength = j.at("noise_strength").get<double>();
      ex.noise = ops_from_json(j.at("noise"));
      ex.downgraded = j.at("downgraded").get<bool>();
      ex.corruptions = ops_from_json(j.at("corruptions"));
      if (ex.downgraded && ex.corruptions.empty()) throw Error(ErrorKind::Format, "downgraded without corruption ops");
      ex.raw_scores = j.at("raw_scores").get<std::vector<double>>();
      if (!j.at("mean_raw_score").is_null()) ex.mean_raw_score = j.at("mean_raw_score").get<double>();
      if (!j.at("final_score").is_null()) ex.final_score = j.at("final_score").get<double>();
      text::validate(r);
      examples.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, at_line(origin, line_no, e.what()));
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, at_line(origin, line_no, e.what()));
    }
  }
  return examples;
}

std::vector<SyntheticExample> load_corpus(const std::string& path) {
  auto in = io::open_input(path);
  return read_corpus(in, path);
}

std::vector<text::SegmentRecord> to_training_records(std::span<const SyntheticExample> examples) {
  std::vector<text::SegmentRecord> records;
  records.reserve(examples.size());
  for (const auto& ex : examples) {
    if (!ex.final_score) {
      throw Error(ErrorKind::InvalidArgument, "synthetic example " + ex.record.segment_id + " has no final score");
    }
    auto r = ex.record;
    r.score = ex.final_score;
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace unite::synth
