// Copyright (c) 2026 The send-diar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "send/nnet.h"

#include <cmath>

#include "send/common.h"

namespace send {

void FsmnConfig::validate() const {
  if (num_blocks < 1 || hidden_units < 1 || projection_dim < 1) {
    throw InvalidInput("fsmn config dimensions must be positive");
  }
  if (filter_size < 1 || filter_size % 2 == 0) {
    throw InvalidInput("fsmn filter size must be odd and >= 1");
  }
}

void AttentionConfig::validate() const {
  if (model_dim < 1 || num_heads < 1 || num_blocks < 1) {
    throw InvalidInput("attention config dimensions must be positive");
  }
  if (model_dim % num_heads != 0) {
    throw InvalidInput("attention model_dim must be divisible by num_heads");
  }
}

Tensor glorot_init(int64_t rows, int64_t cols, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t({rows, cols});
  for (int64_t i = 0; i < t.size(); ++i) t.at(i) = dist(rng);
  return t;
}

Linear::Linear(const std::string& name, int64_t in_dim, int64_t out_dim,
               bool bias, std::mt19937_64& rng)
    : weight_(name + ".w", glorot_init(in_dim, out_dim, rng)),
      has_bias_(bias) {
  if (bias) bias_ = Parameter(name + ".b", Tensor({out_dim}));
}

Var Linear::forward(Tape& tape, Var x) {
  Var y = tape.matmul(x, tape.param(weight_));
  if (has_bias_) y = tape.add_row_broadcast(y, tape.param(bias_));
  return y;
}

void Linear::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

Fcn::Fcn(const std::string& name, const std::vector<int64_t>& dims,
         std::mt19937_64& rng) {
  if (dims.size() < 2) {
    throw InvalidInput("fcn needs at least input and output dimensions");
  }
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    layers_.emplace_back(name + ".l" + std::to_string(i), dims[i], dims[i + 1],
                         /*bias=*/true, rng);
  }
}

Var Fcn::forward(Tape& tape, Var x) {
  for (size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i].forward(tape, x);
    if (i + 1 < layers_.size()) x = tape.tanh(x);
  }
  return x;
}

void Fcn::collect(std::vector<Parameter*>& out) {
  for (Linear& l : layers_) l.collect(out);
}

FsmnBlock::FsmnBlock(const std::string& name, int64_t in_dim, int64_t hidden,
                     int64_t filter_size, int64_t projection_dim,
                     std::mt19937_64& rng)
    : input_(name + ".in", in_dim, hidden, /*bias=*/true, rng),
      taps_(name + ".taps", Tensor({filter_size, hidden})),
      projection_(name + ".proj", hidden, projection_dim, /*bias=*/false,
                  rng) {
  int64_t center = (filter_size - 1) / 2;
  for (int64_t c = 0; c < hidden; ++c) taps_.value.at(center, c) = 1.0;
}

Var FsmnBlock::forward(Tape& tape, Var x) {
  Var projected = input_.forward(tape, x);
  Var memory = tape.seq_conv1d(projected, tape.param(taps_));
  return projection_.forward(tape, tape.tanh(memory));
}

void FsmnBlock::collect(std::vector<Parameter*>& out) {
  input_.collect(out);
  out.push_back(&taps_);
  projection_.collect(out);
}

FsmnEncoder::FsmnEncoder(const std::string& name, int64_t in_dim,
                         const FsmnConfig& cfg, int64_t out_dim,
                         std::mt19937_64& rng) {
  cfg.validate();
  int64_t dim = in_dim;
  for (int b = 0; b < cfg.num_blocks; ++b) {
    blocks_.emplace_back(name + ".b" + std::to_string(b), dim,
                         cfg.hidden_units, cfg.filter_size, cfg.projection_dim,
                         rng);
    dim = cfg.projection_dim;
  }
  output_ = Linear(name + ".out", dim, out_dim, /*bias=*/true, rng);
}

Var FsmnEncoder::forward(Tape& tape, Var x) {
  for (FsmnBlock& b : blocks_) x = b.forward(tape, x);
  return output_.forward(tape, x);
}

void FsmnEncoder::collect(std::vector<Parameter*>& out) {
  for (FsmnBlock& b : blocks_) b.collect(out);
  output_.collect(out);
}

TransformerBlock::TransformerBlock(const std::string& name, int64_t model_dim,
                                   int64_t num_heads, std::mt19937_64& rng)
    : num_heads_(num_heads) {
  int64_t head_dim = model_dim / num_heads;
  for (int64_t h = 0; h < num_heads; ++h) {
    std::string hn = name + ".h" + std::to_string(h);
    query_.emplace_back(hn + ".q", model_dim, head_dim, /*bias=*/false, rng);
    key_.emplace_back(hn + ".k", model_dim, head_dim, /*bias=*/false, rng);
    value_.emplace_back(hn + ".v", model_dim, head_dim, /*bias=*/false, rng);
  }
  out_ = Linear(name + ".o", model_dim, model_dim, /*bias=*/true, rng);
  ln1_gain_ = Parameter(name + ".ln1.g", Tensor::full({model_dim}, 1.0));
  ln1_bias_ = Parameter(name + ".ln1.b", Tensor({model_dim}));
  ff_in_ = Linear(name + ".ff1", model_dim, 4 * model_dim, /*bias=*/true, rng);
  ff_out_ = Linear(name + ".ff2", 4 * model_dim, model_dim, /*bias=*/true, rng);
  ln2_gain_ = Parameter(name + ".ln2.g", Tensor::full({model_dim}, 1.0));
  ln2_bias_ = Parameter(name + ".ln2.b", Tensor({model_dim}));
}

Var TransformerBlock::forward(Tape& tape, Var x) {
  int64_t head_dim = tape.value(x).dim(1) / num_heads_;
  double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Var> heads;
  heads.reserve(static_cast<size_t>(num_heads_));
  for (int64_t h = 0; h < num_heads_; ++h) {
    Var q = query_[static_cast<size_t>(h)].forward(tape, x);
    Var k = key_[static_cast<size_t>(h)].forward(tape, x);
    Var v = value_[static_cast<size_t>(h)].forward(tape, x);
    Var weights = tape.row_softmax(tape.scale(tape.matmul(q, k, false, true),
                                              scale));
    heads.push_back(tape.matmul(weights, v));
  }
  Var attended = out_.forward(tape, tape.concat_cols(heads));
  Var x1 = tape.layer_norm(tape.add(x, attended), tape.param(ln1_gain_),
                           tape.param(ln1_bias_));
  Var ff = ff_out_.forward(tape, tape.tanh(ff_in_.forward(tape, x1)));
  return tape.layer_norm(tape.add(x1, ff), tape.param(ln2_gain_),
                         tape.param(ln2_bias_));
}

void TransformerBlock::collect(std::vector<Parameter*>& out) {
  for (int64_t h = 0; h < num_heads_; ++h) {
    query_[static_cast<size_t>(h)].collect(out);
    key_[static_cast<size_t>(h)].collect(out);
    value_[static_cast<size_t>(h)].collect(out);
  }
  out_.collect(out);
  out.push_back(&ln1_gain_);
  out.push_back(&ln1_bias_);
  ff_in_.collect(out);
  ff_out_.collect(out);
  out.push_back(&ln2_gain_);
  out.push_back(&ln2_bias_);
}

Tensor sinusoidal_positions(int64_t length, int64_t dim) {
  Tensor pe({length, dim});
  for (int64_t pos = 0; pos < length; ++pos) {
    for (int64_t i = 0; i < dim; ++i) {
      double exponent = static_cast<double>(2 * (i / 2)) /
                        static_cast<double>(dim);
      double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      pe.at(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

TransformerEncoder::TransformerEncoder(const std::string& name,
                                       const AttentionConfig& cfg,
                                       std::mt19937_64& rng)
    : cfg_(cfg) {
  cfg_.validate();
  for (int b = 0; b < cfg.num_blocks; ++b) {
    blocks_.emplace_back(name + ".blk" + std::to_string(b), cfg.model_dim,
                         cfg.num_heads, rng);
  }
}

Var TransformerEncoder::encode(Tape& tape, Var embeddings) {
  const Tensor& z = tape.value(embeddings);
  if (z.ndim() != 2 || z.dim(1) != cfg_.model_dim) {
    throw InvalidInput("text encoder expects L x " +
                       std::to_string(cfg_.model_dim) + " embeddings, got " +
                       z.shape_str());
  }
  Var x = embeddings;
  if (cfg_.positional_encoding) {
    Var pe = tape.constant(sinusoidal_positions(z.dim(0), cfg_.model_dim),
                           "positions");
    x = tape.add(x, pe);
  }
  for (TransformerBlock& b : blocks_) x = b.forward(tape, x);
  return x;
}

void TransformerEncoder::collect(std::vector<Parameter*>& out) {
  for (TransformerBlock& b : blocks_) b.collect(out);
}

AttentionAligner::AttentionAligner(const std::string& name, int64_t query_dim,
                                   int64_t key_dim, int64_t attn_dim,
                                   int64_t out_dim, std::mt19937_64& rng)
    : query_proj_(name + ".wq", glorot_init(query_dim, attn_dim, rng)),
      key_proj_(name + ".wk", glorot_init(key_dim, attn_dim, rng)),
      value_proj_(name + ".wv", glorot_init(key_dim, out_dim, rng)) {}

AttentionAligner::Aligned AttentionAligner::forward_with_weights(Tape& tape,
                                                                 Var queries,
                                                                 Var keys) {
  Var q = tape.matmul(queries, tape.param(query_proj_));
  Var k = tape.matmul(keys, tape.param(key_proj_));
  Var weights = tape.row_softmax(tape.matmul(q, k, false, true));
  Var values = tape.matmul(keys, tape.param(value_proj_));
  return {tape.matmul(weights, values), weights};
}

Var AttentionAligner::forward(Tape& tape, Var queries, Var keys) {
  return forward_with_weights(tape, queries, keys).output;
}

void AttentionAligner::collect(std::vector<Parameter*>& out) {
  out.push_back(&query_proj_);
  out.push_back(&key_proj_);
  out.push_back(&value_proj_);
}

}  // namespace send
