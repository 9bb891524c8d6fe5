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
#include <span>
#include <string>
#include <vector>

#include "unite/synthesis.hpp"
#include "unite/text.hpp"

namespace unite::toy {

// A toy "translation" task with a known answer: every direction has a source
// and a target lexicon in one-to-one correspondence, and the reference is the
// word-by-word image of the source. Hypothesis quality is controlled by the
// noise strength applied to the reference.
struct ToyCorpusConfig {
  std::vector<std::string> directions{"aa-xx", "bb-yy"};
  std::size_t lexicon_size = 40;
  std::size_t min_words = 5;
  std::size_t max_words = 10;
};

// Source words of direction "aa-xx" look like "aa7", target words like "xx7".
std::string source_word(const std::string& direction, std::size_t index);
std::string target_word(const std::string& direction, std::size_t index);
std::vector<std::string> target_lexicon(const ToyCorpusConfig& config, const std::string& direction);

// pairs_per_direction sentence pairs for each direction, directions interleaved.
std::vector<synth::ParallelPair> make_parallel(const ToyCorpusConfig& config, std::size_t pairs_per_direction,
                                               std::uint64_t seed);

// Ground-truth quality as a function of noise strength.
inline double true_quality(double strength) { return 1.0 - strength; }

// Quality mapped to roughly zero mean and unit spread for strengths in [0, 0.6].
inline double standardized_quality(double strength) { return (true_quality(strength) - 0.7) / 0.175; }

struct ScoredSetOptions {
  std::vector<double> system_strengths{0.0, 0.15, 0.3, 0.45, 0.6};
  // When true every system of a segment draws its strength uniformly from
  // [0, max(system_strengths)] instead of using the fixed ladder.
  bool random_strengths = false;
  // Standard deviation of Gaussian rater noise added to the gold score.
  double rater_noise = 0.0;
  std::string domain = "toy";
  std::string id_prefix = "";
};

// One record per (pair, system). Segment ids are shared across the systems
// of a pair; the gold score is standardized_quality(strength) plus rater noise.
std::vector<text::SegmentRecord> make_scored_segments(const ToyCorpusConfig& config,
                                                      std::span<const synth::ParallelPair> pairs,
                                                      const ScoredSetOptions& options, std::uint64_t seed);

// All words that can appear in toy text, one sentence per direction side.
std::vector<std::string> vocabulary_corpus(const ToyCorpusConfig& config);

}  // namespace unite::toy
