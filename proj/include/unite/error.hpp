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

#include <stdexcept>
#include <string>
#include <string_view>

namespace unite {

enum class ErrorKind { InvalidArgument, Io, Parse, Format, Numeric, Mismatch };

inline std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return "invalid-argument";
    case ErrorKind::Io:
      return "io";
    case ErrorKind::Parse:
      return "parse";
    case ErrorKind::Format:
      return "format";
    case ErrorKind::Numeric:
      return "numeric";
    case ErrorKind::Mismatch:
      return "mismatch";
  }
  return "unknown";
}

// Every failure the library reports. The CLI prints kind and message on a
// single line, so messages must not contain newlines.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// "path:line: message", the context prefix used by every file parser.
inline std::string at_line(std::string_view path, std::size_t line, std::string_view message) {
  return std::string(path) + ":" + std::to_string(line) + ": " + std::string(message);
}

}  // namespace unite
