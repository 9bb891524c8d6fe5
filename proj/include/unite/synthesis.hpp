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

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unite/encoder.hpp"
#include "unite/text.hpp"

namespace unite::synth {

struct ParallelPair {
  std::string source;
  std::string reference;
  std::string direction;

  friend bool operator==(const ParallelPair&, const ParallelPair&) = default;
};

struct IngestResult {
  std::vector<ParallelPair> pairs;
  std::size_t warnings = 0;
  std::vector<std::string> messages;
};

// Reads "source<TAB>reference" lines. Lines without exactly one tab or with a
// blank side are skipped and counted as warnings.
IngestResult ingest_parallel(const std::string& path, std::string_view direction);
IngestResult ingest_parallel(std::istream& in, std::string_view origin, std::string_view direction);

enum class CorruptionKind { WordDrop, SpanDrop, Substitute };

std::string_view corruption_name(CorruptionKind kind);

// Word positions refer to the hypothesis as it was when the op was applied.
struct CorruptionOp {
  CorruptionKind kind = CorruptionKind::WordDrop;
  std::size_t position = 0;
  std::size_t length = 1;

  friend bool operator==(const CorruptionOp&, const CorruptionOp&) = default;
};

struct SyntheticExample {
  text::SegmentRecord record;
  std::string generator;
  double noise_strength = 0.0;
  std::vector<CorruptionOp> noise;  // edits made by the hypothesis generator
  bool downgraded = false;
  std::vector<CorruptionOp> corruptions;  // edits made by downgrade_quality
  std::vector<double> raw_scores;         // one per labeling checkpoint
  std::optional<double> mean_raw_score;
  std::optional<double> final_score;  // set by rank_normalize

  friend bool operator==(const SyntheticExample&, const SyntheticExample&) = default;
};

struct Hypothesis {
  std::string text;
  std::vector<CorruptionOp> noise;
  double strength = 0.0;
};

// Stand-in for a translation engine. generate() throws on failure; the caller
// skips that pair.
class HypothesisGenerator {
 public:
  virtual ~HypothesisGenerator() = default;
  virtual std::string id() const = 0;
  virtual Hypothesis generate(const ParallelPair& pair, std::size_t index) = 0;
};

class IdentityGenerator final : public HypothesisGenerator {
 public:
  std::string id() const override { return "identity"; }
  Hypothesis generate(const ParallelPair& pair, std::size_t index) override;
};

// Copies the reference and applies round(strength * words) edits, each either
// a word drop or a substitution from the word pool (50/50). The strength is
// drawn per pair from [min_strength, max_strength]. At least one word always
// survives. Pair i uses an RNG stream derived from (seed, i) only.
class NoiseGenerator final : public HypothesisGenerator {
 public:
  NoiseGenerator(double min_strength, double max_strength, std::uint64_t seed, std::vector<std::string> word_pool);

  std::string id() const override;
  Hypothesis generate(const ParallelPair& pair, std::size_t index) override;

  // Applies exactly the given number of edits to text.
  static Hypothesis corrupt(std::string_view text, std::size_t edits, std::span<const std::string> pool,
                            std::mt19937_64& rng);

 private:
  double min_strength_;
  double max_strength_;
  std::uint64_t seed_;
  std::vector<std::string> pool_;
};

// Hypothesis i is line i of an external file.
class FileGenerator final : public HypothesisGenerator {
 public:
  explicit FileGenerator(std::vector<std::string> lines, std::string name = "file");
  static FileGenerator load(const std::string& path);

  std::string id() const override { return name_; }
  Hypothesis generate(const ParallelPair& pair, std::size_t index) override;

 private:
  std::vector<std::string> lines_;
  std::string name_;
};

// Unique words across all references, sorted.
std::vector<std::string> reference_word_pool(std::span<const ParallelPair> pairs);

struct GenerationResult {
  std::vector<SyntheticExample> examples;
  std::size_t warnings = 0;
  std::vector<std::string> messages;
};

// Segment ids are "<direction>-<index>", the system tag is the generator id.
GenerationResult generate_hypotheses(std::span<const ParallelPair> pairs, HypothesisGenerator& generator,
                                     std::string_view domain = "synthetic");

// Corrupts exactly round(ratio * N) examples chosen without replacement;
// one-word hypotheses are never chosen. Each corruption is a single word drop
// or (50/50) a contiguous span drop of 2..ceil(0.3 * words) words, never
// removing the whole hypothesis; spans fall back to a word drop when no legal
// span length exists.
void downgrade_quality(std::vector<SyntheticExample>& examples, double ratio, std::mt19937_64& rng);

// Scores every example with every checkpoint in the SrcRef format and stores
// the per-checkpoint predictions and their mean.
void pseudo_label(std::vector<SyntheticExample>& examples, std::span<const model::EncoderModel> checkpoints,
                  const text::Vocabulary& vocab);

// Within each direction, ranks examples by mean raw score (ties by segment id,
// then system) and sets final = Phi^-1((rank - 0.5) / N).
void rank_normalize(std::vector<SyntheticExample>& examples);

// Standard normal quantile function.
double normal_quantile(double p);

inline constexpr std::string_view kCorpusSchema = "unite.synthetic/1";

void write_corpus(std::ostream& out, std::span<const SyntheticExample> examples);
std::vector<SyntheticExample> read_corpus(std::istream& in, std::string_view origin);
std::vector<SyntheticExample> load_corpus(const std::string& path);

// Records with score = final_score. Throws if an example is unlabeled.
std::vector<text::SegmentRecord> to_training_records(std::span<const SyntheticExample> examples);

std::size_t word_count(std::string_view text);

}  // namespace unite::synth
