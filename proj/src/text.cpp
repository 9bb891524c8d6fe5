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

#include "unite/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "unite/error.hpp"

namespace unite::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_punct(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u) != 0;
}

}  // namespace

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      auto u = static_cast<unsigned char>(c);
      current.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
    }
  }
  flush();
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  ids_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = ids_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) throw Error(ErrorKind::Format, "duplicate vocabulary token '" + tokens_[i] + "'");
  }
}

Vocabulary Vocabulary::build(std::span<const std::string> lines, std::size_t max_size) {
  if (max_size < kReservedCount + 1) {
    throw Error(ErrorKind::InvalidArgument, "vocabulary max size must be at least 5, got " + std::to_string(max_size));
  }
  struct Entry {
    std::size_t count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> counts;
  std::vector<std::string> order;
  for (const auto& line : lines) {
    for (auto& token : split_tokens(line)) {
      auto [it, inserted] = counts.try_emplace(token, Entry{0, order.size()});
      if (inserted) order.push_back(token);
      ++it->second.count;
    }
  }
  if (order.empty()) throw Error(ErrorKind::InvalidArgument, "cannot build a vocabulary from an empty corpus");

  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) { return counts[a].count > counts[b].count; });
  const std::size_t keep = std::min(order.size(), max_size - kReservedCount);

  std::vector<std::string> tokens(kReservedTokens.begin(), kReservedTokens.end());
  tokens.insert(tokens.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::build(std::istream& corpus, std::size_t max_size) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(corpus, line);) lines.push_back(std::move(line));
  return build(lines, max_size);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open vocabulary file " + path);
  return read(in, path);
}

Vocabulary Vocabulary::read(std::istream& in, std::string_view origin) {
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(std::move(line));
  }
  if (tokens.size() < kReservedCount + 1) {
    throw Error(ErrorKind::Format, std::string(origin) + ": vocabulary has fewer than 5 entries");
  }
  for (std::size_t i = 0; i < kReservedCount; ++i) {
    if (tokens[i] != kReservedTokens[i]) {
      throw Error(ErrorKind::Format, at_line(origin, i + 1, "expected reserved token " + std::string(kReservedTokens[i])));
    }
  }
  for (std::size_t i = kReservedCount; i < tokens.size(); ++i) {
    if (tokens[i].empty() || split_tokens(tokens[i]) != std::vector<std::string>{tokens[i]}) {
      throw Error(ErrorKind::Format, at_line(origin, i + 1, "not a valid token"));
    }
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::write(std::ostream& out) const {
  for (const auto& token : tokens_) out << token << '\n';
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write vocabulary file " + path);
  write(out);
  if (!out) throw Error(ErrorKind::Io, "failed writing vocabulary file " + path);
}

bool Vocabulary::contains(std::string_view token) const { return ids_.contains(std::string(token)); }

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error(ErrorKind::InvalidArgument, "token id out of range: " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const auto& token : split_tokens(text)) ids.push_back(vocab.id(token));
  return ids;
}

std::string detokenize(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += vocab.token(ids[i]);
  }
  return out;
}

std::string_view format_name(InputFormat format) {
  switch (format) {
    case InputFormat::Src:
      return "src";
    case InputFormat::Ref:
      return "ref";
    case InputFormat::SrcRef:
      return "src+ref";
  }
  return "unknown";
}

std::optional<InputFormat> parse_format(std::string_view name) {
  for (auto format : kAllFormats) {
    if (format_name(format) == name) return format;
  }
  return std::nullopt;
}

bool needs_reference(InputFormat format) { return format != InputFormat::Src; }

void validate(const SegmentRecord& record) {
  if (normalize_whitespace(record.hypothesis).empty()) {
    throw Error(ErrorKind::InvalidArgument, "segment " + record.segment_id + ": empty hypothesis");
  }
  if (normalize_whitespace(record.source).empty()) {
    throw Error(ErrorKind::InvalidArgument, "segment " + record.segment_id + ": empty source");
  }
  if (record.score && !std::isfinite(*record.score)) {
    throw Error(ErrorKind::InvalidArgument, "segment " + record.segment_id + ": non-finite gold score");
  }
}

InputSequence build_input_sequence(const SegmentRecord& record, InputFormat format, const Vocabulary& vocab,
                                   std::size_t max_len) {
  validate(record);
  const bool with_reference = needs_reference(format);
  if (with_reference && (!record.reference || normalize_whitespace(*record.reference).empty())) {
    throw Error(ErrorKind::InvalidArgument, "segment " + record.segment_id + ": format " +
                                                std::string(format_name(format)) + " requires a reference");
  }

  // Segments in layout order; the hypothesis is always first.
  std::vector<std::vector<TokenId>> segments;
  segments.push_back(tokenize(record.hypothesis, vocab));
  if (format != InputFormat::Ref) segments.push_back(tokenize(record.source, vocab));
  if (with_reference) segments.push_back(tokenize(*record.reference, vocab));

  const std::size_t specials = InputSequence::special_count(format);
  if (max_len < specials + segments.size()) {
    throw Error(ErrorKind::InvalidArgument, "max length " + std::to_string(max_len) + " cannot hold format " +
                                                std::string(format_name(format)));
  }
  const std::size_t budget = max_len - specials;

  auto total = [&] {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.size();
    return n;
  };
  bool truncated = false;
  while (total() > budget) {
    // Scan from the last segment so that ties drop reference/source before the hypothesis.
    std::size_t victim = segments.size() - 1;
    for (std::size_t k = segments.size(); k-- > 0;) {
      if (segments[k].size() > segments[victim].size()) victim = k;
    }
    segments[victim].pop_back();
    truncated = true;
  }

  InputSequence seq;
  seq.format = format;
  seq.truncated = truncated;
  seq.ids.reserve(total() + specials);
  seq.ids.push_back(kBos);
  for (std::size_t k = 0; k < segments.size(); ++k) {
    if (k > 0) seq.ids.push_back(kDel);
    seq.ids.insert(seq.ids.end(), segments[k].begin(), segments[k].end());
  }
  seq.ids.push_back(kEos);

  seq.hypothesis_length = segments[0].size();
  switch (format) {
    case InputFormat::Src:
      seq.source_length = segments[1].size();
      break;
    case InputFormat::Ref:
      seq.reference_length = segments[1].size();
      break;
    case InputFormat::SrcRef:
      seq.source_length = segments[1].size();
      seq.reference_length = segments[2].size();
      break;
  }
  return seq;
}

std::vector<std::vector<TokenId>> split_segments(std::span<const TokenId> ids) {
  if (ids.size() < 2 || ids.front() != kBos || ids.back() != kEos) {
    throw Error(ErrorKind::Format, "input sequence is not framed by BOS/EOS");
  }
  std::vector<std::vector<TokenId>> segments(1);
  for (auto id : ids.subspan(1, ids.size() - 2)) {
    if (id == kDel) {
      segments.emplace_back();
    } else {
      segments.back().push_back(id);
    }
  }
  return segments;
}

}  // namespace unite::text
