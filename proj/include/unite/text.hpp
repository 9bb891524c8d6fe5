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
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace unite::text {

using TokenId = std::int32_t;

inline constexpr TokenId kBos = 0;
inline constexpr TokenId kDel = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr std::size_t kReservedCount = 4;
inline constexpr std::array<std::string_view, kReservedCount> kReservedTokens{"<s>", "<del>", "</s>", "<unk>"};

// Lowercases ASCII letters and splits on whitespace; every ASCII punctuation
// character becomes a token of its own. Bytes >= 0x80 are word characters.
std::vector<std::string> split_tokens(std::string_view text);

// Collapses whitespace runs to single spaces and trims both ends.
std::string normalize_whitespace(std::string_view text);

// Immutable token <-> id table. Ids 0..3 are the reserved tokens.
class Vocabulary {
 public:
  // Keeps the max_size - 4 most frequent tokens; equal counts keep first-seen order.
  static Vocabulary build(std::span<const std::string> lines, std::size_t max_size);
  static Vocabulary build(std::istream& corpus, std::size_t max_size);

  // One token per line, line number = id.
  static Vocabulary load(const std::string& path);
  static Vocabulary read(std::istream& in, std::string_view origin = "<stream>");
  void save(const std::string& path) const;
  void write(std::ostream& out) const;

  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::span<const std::string> tokens() const { return tokens_; }

 private:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab);
std::string detokenize(std::span<const TokenId> ids, const Vocabulary& vocab);

enum class InputFormat { Src, Ref, SrcRef };

inline constexpr std::array<InputFormat, 3> kAllFormats{InputFormat::Src, InputFormat::Ref, InputFormat::SrcRef};

std::string_view format_name(InputFormat format);
// Accepts "src", "ref", "src+ref".
std::optional<InputFormat> parse_format(std::string_view name);
bool needs_reference(InputFormat format);

// One evaluation unit: a hypothesis with its source, optional reference and
// optional gold score.
struct SegmentRecord {
  std::string segment_id;
  std::string direction;
  std::string domain;
  std::string system;
  std::string source;
  std::string hypothesis;
  std::optional<std::string> reference;
  std::optional<double> score;

  friend bool operator==(const SegmentRecord&, const SegmentRecord&) = default;
};

// Throws Error(InvalidArgument) when hypothesis/source are blank or the score is not finite.
void validate(const SegmentRecord& record);

struct InputSequence {
  InputFormat format = InputFormat::Src;
  std::vector<TokenId> ids;
  std::size_t hypothesis_length = 0;
  std::size_t source_length = 0;     // 0 for Ref
  std::size_t reference_length = 0;  // 0 for Src
  bool truncated = false;

  static std::size_t special_count(InputFormat format) { return format == InputFormat::SrcRef ? 4 : 3; }
};

// [BOS] h [DEL] s [EOS], [BOS] h [DEL] r [EOS] or [BOS] h [DEL] s [DEL] r [EOS].
// Over-long inputs lose tokens from segment tails, always from the currently
// longest segment; on equal lengths the reference goes first and the
// hypothesis last. Every segment keeps at least one token.
InputSequence build_input_sequence(const SegmentRecord& record, InputFormat format, const Vocabulary& vocab,
                                   std::size_t max_len);

// Splits ids between BOS and EOS on DEL. Throws on malformed framing.
std::vector<std::vector<TokenId>> split_segments(std::span<const TokenId> ids);

}  // namespace unite::text
