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

#include "unite/scoring.hpp"

#include "unite/error.hpp"

namespace unite {

std::vector<eval::ScoreRecord> score_segments(const model::EncoderModel& model, const text::Vocabulary& vocab,
                                              std::span<const text::SegmentRecord> records,
                                              text::InputFormat format) {
  if (vocab.size() != model.config.vocab_size) {
    throw Error(ErrorKind::Mismatch, "vocabulary has " + std::to_string(vocab.size()) + " entries, model expects " +
                                         std::to_string(model.config.vocab_size));
  }
  std::vector<eval::ScoreRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto seq = text::build_input_sequence(r, format, vocab, model.config.max_len);
    out.push_back({r.segment_id, r.direction, r.domain, r.system, model::forward(model, seq), r.score});
  }
  return out;
}

}  // namespace unite
