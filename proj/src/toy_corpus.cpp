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

#include "unite/toy_corpus.hpp"

#include <random>

#include "unite/error.hpp"
#include "unite/random.hpp"

namespace unite::toy {

namespace {

std::pair<std::string, std::string> languages(const std::string& direction) {
  const auto dash = direction.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == direction.size()) {
    throw Error(ErrorKind::InvalidArgument, "direction must look like src-tgt: " + direction);
  }
  return {direction.substr(0, dash), direction.substr(dash + 1)};
}

// Each direction permutes its lexicon differently, so the source->target
// mapping is not the identity on word indices.
std::vector<std::size_t> lexicon_map(const ToyCorpusConfig& config, const std::string& direction) {
  std::vector<std::size_t> map(config.lexicon_size);
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = i;
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : direction) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  std::mt19937_64 rng(h);
  shuffle(std::span<std::size_t>(map), rng);
  return map;
}

}  // namespace

std::string source_word(const std::string& direction, std::size_t index) {
  return languages(direction).first + std::to_string(index);
}

std::string target_word(const std::string& direction, std::size_t index) {
  return languages(direction).second + std::to_string(index);
}

std::vector<std::string> target_lexicon(const ToyCorpusConfig& config, const std::string& direction) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < config.lexicon_size; ++i) words.push_back(target_word(direction, i));
  return words;
}

std::vector<synth::ParallelPair> make_parallel(const ToyCorpusConfig& config, std::size_t pairs_per_direction,
                                               std::uint64_t seed) {
  if (config.directions.empty() || config.lexicon_size == 0 || config.min_words == 0 ||
      config.min_words > config.max_words) {
    throw Error(ErrorKind::InvalidArgument, "invalid toy corpus configuration");
  }
  std::vector<std::vector<std::size_t>> maps;
  for (const auto& d : config.directions) maps.push_back(lexicon_map(config, d));

  std::mt19937_64 rng(seed);
  std::vector<synth::ParallelPair> pairs;
  for (std::size_t i = 0; i < pairs_per_direction; ++i) {
    for (std::size_t d = 0; d < config.directions.size(); ++d) {
      const auto& direction = config.directions[d];
      const std::size_t n = config.min_words + uniform_index(rng, config.max_words - config.min_words + 1);
      synth::ParallelPair pair;
      pair.direction = direction;
      for (std::size_t w = 0; w < n; ++w) {
        const std::size_t word = uniform_index(rng, config.lexicon_size);
        if (w) {
          pair.source += ' ';
          pair.reference += ' ';
        }
        pair.source += source_word(direction, word);
        pair.reference += target_word(direction, maps[d][word]);
      }
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

std::vector<text::SegmentRecord> make_scored_segments(const ToyCorpusConfig& config,
                                                      std::span<const synth::ParallelPair> pairs,
                                                      const ScoredSetOptions& options, std::uint64_t seed) {
  if (options.system_strengths.empty()) throw Error(ErrorKind::InvalidArgument, "no system strengths");
  double max_strength = 0.0;
  for (double s : options.system_strengths) max_strength = std::max(max_strength, s);

  std::mt19937_64 rng(seed);
  std::vector<text::SegmentRecord> records;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    const auto pool = target_lexicon(config, pair.direction);
    for (std::size_t k = 0; k < options.system_strengths.size(); ++k) {
      const double strength =
          options.random_strengths ? max_strength * uniform01(rng) : options.system_strengths[k];
      const auto words = synth::word_count(pair.reference);
      const auto edits = static_cast<std::size_t>(std::lround(strength * static_cast<double>(words)));
      auto hyp = synth::NoiseGenerator::corrupt(pair.reference, edits, pool, rng);

      text::SegmentRecord r;
      r.segment_id = options.id_prefix + pair.direction + "-" + std::to_string(i);
      r.direction = pair.direction;
      r.domain = options.domain;
      r.system = "sys" + std::to_string(k);
      r.source = pair.source;
      r.hypothesis = hyp.text;
      r.reference = pair.reference;
      double gold = standardized_quality(strength);
      if (options.rater_noise > 0.0) gold += options.rater_noise * standard_normal(rng);
      r.score = gold;
      records.push_back(std::move(r));
    }
  }
  return records;
}

std::vector<std::string> vocabulary_corpus(const ToyCorpusConfig& config) {
  std::vector<std::string> lines;
  for (const auto& direction : config.directions) {
    std::string src, tgt;
    for (std::size_t i = 0; i < config.lexicon_size; ++i) {
      src += (i ? " " : "") + source_word(direction, i);
      tgt += (i ? " " : "") + target_word(direction, i);
    }
    lines.push_back(std::move(src));
    lines.push_back(std::move(tgt));
  }
  return lines;
}

}  // namespace unite::toy
