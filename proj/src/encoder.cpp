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

#include "unite/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "unite/error.hpp"
#include "unite/kernels.hpp"
#include "unite/random.hpp"

namespace unite::model {

namespace {

constexpr double kNormEpsilon = 1e-5;
constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;

using text::InputSequence;

void fill_uniform(Tensor& t, double bound, std::mt19937_64& rng) {
  for (auto& v : t.values) v = bound * (2.0 * uniform01(rng) - 1.0);
}

// y = x w + b, with x: n x in, w: in x out, b: 1 x out.
void linear(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
  y = Tensor(x.rows, w.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto out = y.row(i);
    std::copy(b.values.begin(), b.values.end(), out.begin());
    for (std::size_t p = 0; p < x.cols; ++p) kernels::axpy(x(i, p), w.row(p), out);
  }
}

void linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, Tensor& dw, Tensor& db) {
  for (std::size_t i = 0; i < dy.rows; ++i) {
    auto grad_row = dy.row(i);
    kernels::axpy(1.0, grad_row, db.row(0));
    for (std::size_t p = 0; p < x.cols; ++p) {
      const double xv = x(i, p);
      if (xv != 0.0) kernels::axpy(xv, grad_row, dw.row(p));
      if (dx) (*dx)(i, p) += kernels::dot(grad_row, w.row(p));
    }
  }
}

struct NormCache {
  Tensor normalized;
  std::vector<double> inv_std;
};

void layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Tensor& y, NormCache& cache) {
  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  y = Tensor(n, d);
  cache.normalized = Tensor(n, d);
  cache.inv_std.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = x.row(i);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv_std = 1.0 / std::sqrt(var + kNormEpsilon);
    cache.inv_std[i] = inv_std;
    for (std::size_t c = 0; c < d; ++c) {
      const double xhat = (row[c] - mean) * inv_std;
      cache.normalized(i, c) = xhat;
      y(i, c) = gain.values[c] * xhat + bias.values[c];
    }
  }
}

// Adds dL/dx into dx.
void layer_norm_backward(const NormCache& cache, const Tensor& gain, const Tensor& dy, Tensor& dx, Tensor& dgain,
                         Tensor& dbias) {
  const std::size_t d = dy.cols;
  std::vector<double> dxhat(d);
  for (std::size_t i = 0; i < dy.rows; ++i) {
    auto g = dy.row(i);
    auto xhat = cache.normalized.row(i);
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      dgain.values[c] += g[c] * xhat[c];
      dbias.values[c] += g[c];
      dxhat[c] = g[c] * gain.values[c];
      mean_dxhat += dxhat[c];
      mean_dxhat_xhat += dxhat[c] * xhat[c];
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    for (std::size_t c = 0; c < d; ++c) {
      dx(i, c) += cache.inv_std[i] * (dxhat[c] - mean_dxhat - xhat[c] * mean_dxhat_xhat);
    }
  }
}

double gelu(double u) { return 0.5 * u * (1.0 + std::tanh(kGeluScale * (u + kGeluCubic * u * u * u))); }

double gelu_derivative(double u) {
  const double t = std::tanh(kGeluScale * (u + kGeluCubic * u * u * u));
  return 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * kGeluScale * (1.0 + 3.0 * kGeluCubic * u * u);
}

struct LayerTrace {
  Tensor input;
  NormCache norm1;
  Tensor normed1;
  Tensor query, key, value;
  std::vector<Tensor> probs;  // per head, n x n
  Tensor attended;            // heads concatenated, n x d
  Tensor middle;              // input + attention output
  NormCache norm2;
  Tensor normed2;
  Tensor ff_pre;
  Tensor ff_act;
};

struct HeadTrace {
  std::vector<double> cls;
  std::vector<double> z1, z2;
  double prediction = 0.0;
};

struct Trace {
  std::vector<std::size_t> ids;
  std::vector<LayerTrace> layers;
  Tensor last;  // input to the final norm
  NormCache final_norm;
  Tensor hidden;
  HeadTrace head;
};

void check_sequence(const EncoderConfig& config, const InputSequence& seq) {
  if (seq.ids.empty()) throw Error(ErrorKind::InvalidArgument, "empty input sequence");
  if (seq.ids.size() > config.max_len) {
    throw Error(ErrorKind::InvalidArgument, "sequence length " + std::to_string(seq.ids.size()) +
                                                " exceeds max_len " + std::to_string(config.max_len));
  }
  for (auto id : seq.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size) {
      throw Error(ErrorKind::InvalidArgument, "token id " + std::to_string(id) + " out of range for vocab size " +
                                                  std::to_string(config.vocab_size));
    }
  }
}

void attention(const EncoderConfig& config, LayerTrace& t) {
  const std::size_t n = t.query.rows;
  const std::size_t width = config.head_width();
  const double scale = 1.0 / std::sqrt(static_cast<double>(width));
  t.attended = Tensor(n, config.d);
  t.probs.assign(config.n_heads, Tensor(n, n));
  for (std::size_t h = 0; h < config.n_heads; ++h) {
    const std::size_t off = h * width;
    Tensor& p = t.probs[h];
    for (std::size_t i = 0; i < n; ++i) {
      auto q = t.query.row(i).subspan(off, width);
      double max_score = -INFINITY;
      for (std::size_t j = 0; j < n; ++j) {
        p(i, j) = scale * kernels::dot(q, t.key.row(j).subspan(off, width));
        max_score = std::max(max_score, p(i, j));
      }
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        p(i, j) = std::exp(p(i, j) - max_score);
        total += p(i, j);
      }
      auto out = t.attended.row(i).subspan(off, width);
      for (std::size_t j = 0; j < n; ++j) {
        p(i, j) /= total;
        kernels::axpy(p(i, j), t.value.row(j).subspan(off, width), out);
      }
    }
  }
}

// Given dL/d(attended), adds into dquery/dkey/dvalue.
void attention_backward(const EncoderConfig& config, const LayerTrace& t, const Tensor& dattended, Tensor& dquery,
                        Tensor& dkey, Tensor& dvalue) {
  const std::size_t n = t.query.rows;
  const std::size_t width = config.head_width();
  const double scale = 1.0 / std::sqrt(static_cast<double>(width));
  std::vector<double> dprob(n);
  for (std::size_t h = 0; h < config.n_heads; ++h) {
    const std::size_t off = h * width;
    const Tensor& p = t.probs[h];
    for (std::size_t i = 0; i < n; ++i) {
      auto dout = dattended.row(i).subspan(off, width);
      double weighted = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        dprob[j] = kernels::dot(dout, t.value.row(j).subspan(off, width));
        weighted += p(i, j) * dprob[j];
        kernels::axpy(p(i, j), dout, dvalue.row(j).subspan(off, width));
      }
      auto q = t.query.row(i).subspan(off, width);
      auto dq = dquery.row(i).subspan(off, width);
      for (std::size_t j = 0; j < n; ++j) {
        const double dscore = scale * p(i, j) * (dprob[j] - weighted);
        if (dscore == 0.0) continue;
        kernels::axpy(dscore, t.key.row(j).subspan(off, width), dq);
        kernels::axpy(dscore, q, dkey.row(j).subspan(off, width));
      }
    }
  }
}

Trace run_encoder(const EncoderModel& model, const InputSequence& seq) {
  const auto& config = model.config;
  const auto& params = model.params;
  check_sequence(config, seq);
  const std::size_t n = seq.ids.size();

  Trace trace;
  trace.ids.reserve(n);
  Tensor x(n, config.d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<std::size_t>(seq.ids[i]);
    trace.ids.push_back(id);
    auto row = x.row(i);
    kernels::axpy(1.0, params.token_embedding.row(id), row);
    kernels::axpy(1.0, params.position_embedding.row(i), row);
  }

  trace.layers.resize(config.n_layers);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const auto& w = params.layers[l];
    auto& t = trace.layers[l];
    t.input = std::move(x);
    layer_norm(t.input, w.norm1_gain, w.norm1_bias, t.normed1, t.norm1);
    linear(t.normed1, w.query, w.query_bias, t.query);
    linear(t.normed1, w.key, w.key_bias, t.key);
    linear(t.normed1, w.value, w.value_bias, t.value);
    attention(config, t);
    linear(t.attended, w.out, w.out_bias, t.middle);
    kernels::axpy(1.0, t.input.flat(), t.middle.flat());

    layer_norm(t.middle, w.norm2_gain, w.norm2_bias, t.normed2, t.norm2);
    linear(t.normed2, w.ff_in, w.ff_in_bias, t.ff_pre);
    t.ff_act = Tensor(n, config.ff_dim);
    for (std::size_t k = 0; k < t.ff_pre.size(); ++k) t.ff_act.values[k] = gelu(t.ff_pre.values[k]);
    linear(t.ff_act, w.ff_out, w.ff_out_bias, x);
    kernels::axpy(1.0, t.middle.flat(), x.flat());
  }
  trace.last = std::move(x);
  layer_norm(trace.last, params.final_norm_gain, params.final_norm_bias, trace.hidden, trace.final_norm);
  return trace;
}

void check_head_input(const EncoderModel& model, std::span<const double> cls) {
  if (cls.size() != model.config.d) {
    throw Error(ErrorKind::InvalidArgument, "head input width " + std::to_string(cls.size()) + " != d " +
                                                std::to_string(model.config.d));
  }
}

void run_head(const EncoderModel& model, std::span<const double> cls, HeadTrace& t) {
  check_head_input(model, cls);
  const auto& head = model.params.head;
  t.cls.assign(cls.begin(), cls.end());
  t.z1.resize(head.w1.rows);
  for (std::size_t j = 0; j < head.w1.rows; ++j) t.z1[j] = std::tanh(kernels::dot(head.w1.row(j), cls) + head.b1.values[j]);
  t.z2.resize(head.w2.rows);
  for (std::size_t k = 0; k < head.w2.rows; ++k) t.z2[k] = std::tanh(kernels::dot(head.w2.row(k), t.z1) + head.b2.values[k]);
  t.prediction = kernels::dot(head.w3.row(0), t.z2) + head.b3.values[0];
}

// Adds head gradients for dL/dp = dpred and returns dL/dcls.
std::vector<double> head_backward(const EncoderModel& model, const HeadTrace& t, double dpred, HeadParams& grad) {
  const auto& head = model.params.head;
  kernels::axpy(dpred, t.z2, grad.w3.row(0));
  grad.b3.values[0] += dpred;

  std::vector<double> da2(t.z2.size());
  for (std::size_t k = 0; k < t.z2.size(); ++k) da2[k] = dpred * head.w3(0, k) * (1.0 - t.z2[k] * t.z2[k]);

  std::vector<double> dz1(t.z1.size(), 0.0);
  for (std::size_t k = 0; k < da2.size(); ++k) {
    kernels::axpy(da2[k], t.z1, grad.w2.row(k));
    grad.b2.values[k] += da2[k];
    kernels::axpy(da2[k], head.w2.row(k), dz1);
  }

  std::vector<double> dcls(t.cls.size(), 0.0);
  for (std::size_t j = 0; j < dz1.size(); ++j) {
    const double da1 = dz1[j] * (1.0 - t.z1[j] * t.z1[j]);
    kernels::axpy(da1, t.cls, grad.w1.row(j));
    grad.b1.values[j] += da1;
    kernels::axpy(da1, head.w1.row(j), dcls);
  }
  return dcls;
}

void encoder_backward(const EncoderModel& model, const Trace& trace, Tensor dhidden, Gradients& grads) {
  const auto& config = model.config;
  const auto& params = model.params;
  const std::size_t n = trace.ids.size();

  Tensor dx(n, config.d);
  layer_norm_backward(trace.final_norm, params.final_norm_gain, dhidden, dx, grads.final_norm_gain,
                      grads.final_norm_bias);

  for (std::size_t l = config.n_layers; l-- > 0;) {
    const auto& w = params.layers[l];
    const auto& t = trace.layers[l];
    auto& g = grads.layers[l];

    // x_out = middle + ff_out(gelu(ff_in(norm2(middle))))
    Tensor dact(n, config.ff_dim);
    linear_backward(t.ff_act, w.ff_out, dx, &dact, g.ff_out, g.ff_out_bias);
    for (std::size_t k = 0; k < dact.size(); ++k) dact.values[k] *= gelu_derivative(t.ff_pre.values[k]);
    Tensor dnormed2(n, config.d);
    linear_backward(t.normed2, w.ff_in, dact, &dnormed2, g.ff_in, g.ff_in_bias);
    Tensor dmiddle = dx;
    layer_norm_backward(t.norm2, w.norm2_gain, dnormed2, dmiddle, g.norm2_gain, g.norm2_bias);

    // middle = input + out(attention(norm1(input)))
    Tensor dattended(n, config.d);
    linear_backward(t.attended, w.out, dmiddle, &dattended, g.out, g.out_bias);
    Tensor dquery(n, config.d), dkey(n, config.d), dvalue(n, config.d);
    attention_backward(config, t, dattended, dquery, dkey, dvalue);
    Tensor dnormed1(n, config.d);
    linear_backward(t.normed1, w.query, dquery, &dnormed1, g.query, g.query_bias);
    linear_backward(t.normed1, w.key, dkey, &dnormed1, g.key, g.key_bias);
    linear_backward(t.normed1, w.value, dvalue, &dnormed1, g.value, g.value_bias);
    dx = std::move(dmiddle);
    layer_norm_backward(t.norm1, w.norm1_gain, dnormed1, dx, g.norm1_gain, g.norm1_bias);
  }

  for (std::size_t i = 0; i < n; ++i) {
    kernels::axpy(1.0, dx.row(i), grads.token_embedding.row(trace.ids[i]));
    kernels::axpy(1.0, dx.row(i), grads.position_embedding.row(i));
  }
}

}  // namespace

void EncoderConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, "invalid encoder config: " + msg); };
  if (vocab_size < text::kReservedCount + 1) fail("vocab_size must be at least 5");
  if (d == 0) fail("d must be positive");
  if (n_heads == 0) fail("n_heads must be positive");
  if (d % n_heads != 0) fail("d=" + std::to_string(d) + " is not divisible by n_heads=" + std::to_string(n_heads));
  if (ff_dim == 0) fail("ff_dim must be positive");
  if (max_len < 7) fail("max_len must be at least 7");
  if (head_dims[0] == 0 || head_dims[1] == 0) fail("head widths must be positive");
  if (head_dims[2] != 1) fail("the last head width must be 1");
}

Parameters Parameters::zeros(const EncoderConfig& config) {
  config.validate();
  const std::size_t d = config.d;
  Parameters p;
  p.token_embedding = Tensor(config.vocab_size, d);
  p.position_embedding = Tensor(config.max_len, d);
  p.layers.resize(config.n_layers);
  for (auto& l : p.layers) {
    l.norm1_gain = Tensor::vector(d);
    l.norm1_bias = Tensor::vector(d);
    l.query = Tensor(d, d);
    l.query_bias = Tensor::vector(d);
    l.key = Tensor(d, d);
    l.key_bias = Tensor::vector(d);
    l.value = Tensor(d, d);
    l.value_bias = Tensor::vector(d);
    l.out = Tensor(d, d);
    l.out_bias = Tensor::vector(d);
    l.norm2_gain = Tensor::vector(d);
    l.norm2_bias = Tensor::vector(d);
    l.ff_in = Tensor(d, config.ff_dim);
    l.ff_in_bias = Tensor::vector(config.ff_dim);
    l.ff_out = Tensor(config.ff_dim, d);
    l.ff_out_bias = Tensor::vector(d);
  }
  p.final_norm_gain = Tensor::vector(d);
  p.final_norm_bias = Tensor::vector(d);
  p.head.w1 = Tensor(config.head_dims[0], d);
  p.head.b1 = Tensor::vector(config.head_dims[0]);
  p.head.w2 = Tensor(config.head_dims[1], config.head_dims[0]);
  p.head.b2 = Tensor::vector(config.head_dims[1]);
  p.head.w3 = Tensor(1, config.head_dims[1]);
  p.head.b3 = Tensor::vector(1);
  return p;
}

std::size_t Parameters::scalar_count() const {
  std::size_t n = 0;
  for_each([&](auto, const Tensor& t, ParamGroup) { n += t.size(); });
  return n;
}

EncoderModel init_model(const EncoderConfig& config) {
  EncoderModel model{config, Parameters::zeros(config)};
  std::mt19937_64 rng(config.seed);
  auto& p = model.params;
  const double embed_bound = 1.0 / std::sqrt(static_cast<double>(config.d));
  fill_uniform(p.token_embedding, embed_bound, rng);
  fill_uniform(p.position_embedding, embed_bound, rng);
  for (auto& l : p.layers) {
    std::fill(l.norm1_gain.values.begin(), l.norm1_gain.values.end(), 1.0);
    std::fill(l.norm2_gain.values.begin(), l.norm2_gain.values.end(), 1.0);
    // x * W layout: fan_in is the row count.
    for (Tensor* w : {&l.query, &l.key, &l.value, &l.out, &l.ff_in, &l.ff_out}) {
      fill_uniform(*w, 1.0 / std::sqrt(static_cast<double>(w->rows)), rng);
    }
  }
  std::fill(p.final_norm_gain.values.begin(), p.final_norm_gain.values.end(), 1.0);
  // W * h layout: fan_in is the column count.
  for (Tensor* w : {&p.head.w1, &p.head.w2, &p.head.w3}) {
    fill_uniform(*w, 1.0 / std::sqrt(static_cast<double>(w->cols)), rng);
  }
  return model;
}

Tensor encode(const EncoderModel& model, const InputSequence& seq) { return run_encoder(model, seq).hidden; }

std::vector<double> pool_cls(const Tensor& hidden) {
  if (hidden.rows == 0) throw Error(ErrorKind::InvalidArgument, "cannot pool an empty hidden-state matrix");
  auto row = hidden.row(0);
  return {row.begin(), row.end()};
}

double predict_head(const EncoderModel& model, std::span<const double> cls) {
  HeadTrace t;
  run_head(model, cls, t);
  return t.prediction;
}

double forward(const EncoderModel& model, const InputSequence& seq) {
  return predict_head(model, pool_cls(encode(model, seq)));
}

double accumulate_backward(const EncoderModel& model, std::span<const TrainingItem> batch, Gradients& grads) {
  if (batch.empty()) throw Error(ErrorKind::InvalidArgument, "backward on an empty batch");
  for (const auto& item : batch) {
    if (!item.sequence) throw Error(ErrorKind::InvalidArgument, "batch item without a sequence");
    if (!item.target) throw Error(ErrorKind::InvalidArgument, "batch item without a gold score");
  }
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& item : batch) {
    Trace trace = run_encoder(model, *item.sequence);
    run_head(model, trace.hidden.row(0), trace.head);
    const double residual = trace.head.prediction - *item.target;
    loss += residual * residual;

    auto dcls = head_backward(model, trace.head, 2.0 * residual * inv_batch, grads.head);
    Tensor dhidden(trace.hidden.rows, trace.hidden.cols);
    std::copy(dcls.begin(), dcls.end(), dhidden.row(0).begin());
    encoder_backward(model, trace, std::move(dhidden), grads);
  }
  return loss * inv_batch;
}

BackwardResult backward(const EncoderModel& model, std::span<const TrainingItem> batch) {
  BackwardResult result{0.0, Parameters::zeros(model.config)};
  result.loss = accumulate_backward(model, batch, result.grads);
  return result;
}

bool all_finite(const Parameters& params) {
  bool ok = true;
  params.for_each([&](auto, const Tensor& t, ParamGroup) {
    for (double v : t.values) ok = ok && std::isfinite(v);
  });
  return ok;
}

}  // namespace unite::model
