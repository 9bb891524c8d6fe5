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

#include <span>
#include <vector>

#include "unite/encoder.hpp"
#include "unite/evaluation.hpp"
#include "unite/text.hpp"

namespace unite {

// Predicts every record in the given format. The gold score, if any, becomes
// the human column. Throws Mismatch when the vocabulary does not fit the model.
std::vector<eval::ScoreRecord> score_segments(const model::EncoderModel& model, const text::Vocabulary& vocab,
                                              std::span<const text::SegmentRecord> records,
                                              text::InputFormat format);

}  // namespace unite
