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
#include <vector>

#include "unite/tensor.hpp"
#include "unite/text.hpp"

namespace unite::model {

// Head widths of the full-size regressor: 3072 -> 1024 -> 1.
inline constexpr std::array<std::size_t, 3> kFullScaleHeadDims{3072, 1024, 1};

// Architecture of the pre-layer-norm encoder and its regression head.
// Defaults are the desk-scale configuration.
struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t d = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t ff_dim = 128;
  // Not fixed by the original recipe; sized for short sentence triples.
  std::size_t max_len = 64;
  std::array<std::size_t, 3> head_dims{64, 32, 1};
  std::uint64_t seed = 1;

  std::size_t head_width() const { return d / n_heads; }

  // Throws Error(InvalidArgument) naming the first violated constraint.
  void validate() const;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

enum class ParamGroup { Encoder, Head };

struct LayerParams {
  Tensor norm1_gain, norm1_bias;
  Tensor query, query_bias, key, key_bias, value, value_bias, out, out_bias;
  Tensor norm2_gain, norm2_bias;
  Tensor ff_in, ff_in_bias, ff_out, ff_out_bias;
};

// w1 is head_dims[0] x d, w2 is head_dims[1] x head_dims[0], w3 is 1 x head_dims[1].
struct HeadParams {
  Tensor w1, b1, w2, b2, w3, b3;
};

// Every trainable tensor. Gradients share this layout.
struct Parameters {
  Tensor token_embedding;     // vocab_size x d
  Tensor position_embedding;  // max_len x d
  std::vector<LayerParams> layers;
  Tensor final_norm_gain, final_norm_bias;
  HeadParams head;

  static Parameters zeros(const EncoderConfig& config);

  // Visits tensors in the fixed checkpoint order as f(name, tensor, group).
  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  std::size_t scalar_count() const;

  friend bool operator==(const Parameters&, const Parameters&) = default;

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f);
};

using Gradients = Parameters;

struct EncoderModel {
  EncoderConfig config;
  Parameters params;
};

// Weights uniform in +-1/sqrt(fan_in) (embedding tables use fan_in = d),
// layer-norm gains 1, all biases 0. Deterministic in config.seed.
EncoderModel init_model(const EncoderConfig& config);

// Hidden states after the final layer norm, one row per token.
Tensor encode(const EncoderModel& model, const text::InputSequence& seq);

// Row 0, the BOS position.
std::vector<double> pool_cls(const Tensor& hidden);

// w3 . tanh(w2 . tanh(w1 . h + b1) + b2) + b3
double predict_head(const EncoderModel& model, std::span<const double> cls);

double forward(const EncoderModel& model, const text::InputSequence& seq);

struct TrainingItem {
  const text::InputSequence* sequence = nullptr;
  std::optional<double> target;
};

struct BackwardResult {
  double loss = 0.0;
  Gradients grads;
};

// Mean squared error over the batch and its exact gradient.
BackwardResult backward(const EncoderModel& model, std::span<const TrainingItem> batch);

// Same as backward() but adds the gradient into an existing buffer.
double accumulate_backward(const EncoderModel& model, std::span<const TrainingItem> batch, Gradients& grads);

bool all_finite(const Parameters& params);

// Binary container: magic "UNITECKP", format version, config block, then every
// tensor in Parameters::for_each order as (rows, cols, values), then an FNV-1a
// checksum of everything before it. Little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const EncoderModel& model);
EncoderModel read_checkpoint(std::istream& in, std::string_view origin = "<stream>");
void save_checkpoint(const EncoderModel& model, const std::string& path);
EncoderModel load_checkpoint(const std::string& path);

template <typename Self, typename F>
void Parameters::visit(Self& self, F& f) {
  f("token_embedding", self.token_embedding, ParamGroup::Encoder);
  f("position_embedding", self.position_embedding, ParamGroup::Encoder);
  for (std::size_t i = 0; i < self.layers.size(); ++i) {
    auto& l = self.layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    f(p + "norm1_gain", l.norm1_gain, ParamGroup::Encoder);
    f(p + "norm1_bias", l.norm1_bias, ParamGroup::Encoder);
    f(p + "query", l.query, ParamGroup::Encoder);
    f(p + "query_bias", l.query_bias, ParamGroup::Encoder);
    f(p + "key", l.key, ParamGroup::Encoder);
    f(p + "key_bias", l.key_bias, ParamGroup::Encoder);
    f(p + "value", l.value, ParamGroup::Encoder);
    f(p + "value_bias", l.value_bias, ParamGroup::Encoder);
    f(p + "out", l.out, ParamGroup::Encoder);
    f(p + "out_bias", l.out_bias, ParamGroup::Encoder);
    f(p + "norm2_gain", l.norm2_gain, ParamGroup::Encoder);
    f(p + "norm2_bias", l.norm2_bias, ParamGroup::Encoder);
    f(p + "ff_in", l.ff_in, ParamGroup::Encoder);
    f(p + "ff_in_bias", l.ff_in_bias, ParamGroup::Encoder);
    f(p + "ff_out", l.ff_out, ParamGroup::Encoder);
    f(p + "ff_out_bias", l.ff_out_bias, ParamGroup::Encoder);
  }
  f("final_norm_gain", self.final_norm_gain, ParamGroup::Encoder);
  f("final_norm_bias", self.final_norm_bias, ParamGroup::Encoder);
  f("head.w1", self.head.w1, ParamGroup::Head);
  f("head.b1", self.head.b1, ParamGroup::Head);
  f("head.w2", self.head.w2, ParamGroup::Head);
  f("head.b2", self.head.b2, ParamGroup::Head);
  f("head.w3", self.head.w3, ParamGroup::Head);
  f("head.b3", self.head.b3, ParamGroup::Head);
}

}  // namespace unite::model
