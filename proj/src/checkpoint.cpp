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

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "unite/encoder.hpp"
#include "unite/error.hpp"
#include "unite/io.hpp"

namespace unite::model {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 8> kMagic{'U', 'N', 'I', 'T', 'E', 'C', 'K', 'P'};

class HashingWriter {
 public:
  explicit HashingWriter(std::ostream& out) : out_(out) {}

  void bytes(const void* data, std::size_t n) {
    hash(data, n);
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  std::uint64_t digest() const { return state_; }

 private:
  void hash(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }

  std::ostream& out_;
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

class HashingReader {
 public:
  HashingReader(std::istream& in, std::string_view origin) : in_(in), origin_(origin) {}

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error(ErrorKind::Format, std::string(origin_) + ": truncated checkpoint");
    }
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    bytes(&v, sizeof v);
    return v;
  }
  std::uint64_t digest() const { return state_; }
  std::istream& stream() { return in_; }

 private:
  std::istream& in_;
  std::string_view origin_;
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace

void write_checkpoint(std::ostream& out, const EncoderModel& model) {
  HashingWriter w(out);
  w.bytes(kMagic.data(), kMagic.size());
  const std::uint32_t version = kCheckpointVersion;
  w.bytes(&version, sizeof version);

  const auto& c = model.config;
  for (std::uint64_t v : {std::uint64_t{c.vocab_size}, std::uint64_t{c.d}, std::uint64_t{c.n_layers},
                          std::uint64_t{c.n_heads}, std::uint64_t{c.ff_dim}, std::uint64_t{c.max_len},
                          std::uint64_t{c.head_dims[0]}, std::uint64_t{c.head_dims[1]}, std::uint64_t{c.head_dims[2]},
                          c.seed}) {
    w.u64(v);
  }
  model.params.for_each([&](auto, const Tensor& t, ParamGroup) {
    w.u64(t.rows);
    w.u64(t.cols);
    w.bytes(t.values.data(), t.values.size() * sizeof(double));
  });
  const std::uint64_t digest = w.digest();
  out.write(reinterpret_cast<const char*>(&digest), sizeof digest);
}

EncoderModel read_checkpoint(std::istream& in, std::string_view origin) {
  HashingReader r(in, origin);
  auto fail = [&](const std::string& msg) { return Error(ErrorKind::Format, std::string(origin) + ": " + msg); };

  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kMagic) throw fail("not a checkpoint (bad magic header)");
  std::uint32_t version = 0;
  r.bytes(&version, sizeof version);
  if (version != kCheckpointVersion) {
    throw fail("unsupported checkpoint version " + std::to_string(version) + ", expected " +
               std::to_string(kCheckpointVersion));
  }

  EncoderConfig c;
  c.vocab_size = r.u64();
  c.d = r.u64();
  c.n_layers = r.u64();
  c.n_heads = r.u64();
  c.ff_dim = r.u64();
  c.max_len = r.u64();
  c.head_dims = {r.u64(), r.u64(), r.u64()};
  c.seed = r.u64();
  // Guards allocation against garbage that happens to follow a valid magic.
  if (c.n_layers > 64 || c.d > (1u << 16) || c.vocab_size > (1u << 24) || c.max_len > (1u << 20) ||
      c.ff_dim > (1u << 20) || c.head_dims[0] > (1u << 20) || c.head_dims[1] > (1u << 20)) {
    throw fail("implausible config block");
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw fail(e.what());
  }

  EncoderModel model{c, Parameters::zeros(c)};
  model.params.for_each([&](auto name, Tensor& t, ParamGroup) {
    const auto rows = r.u64();
    const auto cols = r.u64();
    if (rows != t.rows || cols != t.cols) throw fail("shape mismatch for tensor " + std::string(name));
    r.bytes(t.values.data(), t.values.size() * sizeof(double));
  });
  const std::uint64_t expected = r.digest();
  std::uint64_t stored = 0;
  in.read(reinterpret_cast<char*>(&stored), sizeof stored);
  if (in.gcount() != sizeof stored) throw fail("truncated checkpoint");
  if (stored != expected) throw fail("checksum mismatch");
  if (in.peek() != std::char_traits<char>::eof()) throw fail("trailing bytes after checkpoint");
  return model;
}

void save_checkpoint(const EncoderModel& model, const std::string& path) {
  io::write_atomic(path, [&](std::ostream& out) { write_checkpoint(out, model); });
}

EncoderModel load_checkpoint(const std::string& path) {
  auto in = io::open_input(path);
  return read_checkpoint(in, path);
}

}  // namespace unite::model
