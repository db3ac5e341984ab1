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

#ifndef SEND_NNET_H_
#define SEND_NNET_H_

#include <random>
#include <string>
#include <vector>

#include "send/autodiff.h"

namespace send {

struct FsmnConfig {
  int num_blocks = 2;
  int hidden_units = 32;
  int filter_size = 5;  // odd: lookback + current + lookahead taps
  int projection_dim = 16;
  void validate() const;
};

struct AttentionConfig {
  int model_dim = 32;
  int num_heads = 4;
  int num_blocks = 2;
  bool positional_encoding = true;
  void validate() const;
};

// y = x W (+ b). Weights are in_dim x out_dim, applied to row vectors.
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int64_t in_dim, int64_t out_dim, bool bias,
         std::mt19937_64& rng);
  Var forward(Tape& tape, Var x);
  void collect(std::vector<Parameter*>& out);
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  Parameter weight_;
  Parameter bias_;
  bool has_bias_ = false;
};

// Dense stack: affine + tanh between layers, final layer affine.
class Fcn {
 public:
  Fcn() = default;
  // dims = {in, hidden..., out}; at least {in, out}.
  Fcn(const std::string& name, const std::vector<int64_t>& dims,
      std::mt19937_64& rng);
  Var forward(Tape& tape, Var x);
  void collect(std::vector<Parameter*>& out);
  std::vector<Linear>& layers() { return layers_; }

 private:
  std::vector<Linear> layers_;
};

// One FSMN block:
//   p = x W_in + b_in                     dense projection (T x hidden)
//   m = seq_conv1d(p, taps)               memory filter, zero-padded
//   y = tanh(m) W_proj                    (T x projection_dim)
// The filter's center tap is initialized to 1 and the rest to 0, so a fresh
// block starts as its pure feedforward path; the identity center tap plays
// the role of the residual connection and is learned with the other taps.
class FsmnBlock {
 public:
  FsmnBlock() = default;
  FsmnBlock(const std::string& name, int64_t in_dim, int64_t hidden,
            int64_t filter_size, int64_t projection_dim, std::mt19937_64& rng);
  Var forward(Tape& tape, Var x);
  void collect(std::vector<Parameter*>& out);
  Parameter& taps() { return taps_; }

 private:
  Linear input_;
  Parameter taps_;  // filter_size x hidden
  Linear projection_;
};

// Stack of FSMN blocks plus a final affine to out_dim.
class FsmnEncoder {
 public:
  FsmnEncoder() = default;
  FsmnEncoder(const std::string& name, int64_t in_dim, const FsmnConfig& cfg,
              int64_t out_dim, std::mt19937_64& rng);
  Var forward(Tape& tape, Var x);  // T x in_dim -> T x out_dim
  void collect(std::vector<Parameter*>& out);
  std::vector<FsmnBlock>& blocks() { return blocks_; }

 private:
  std::vector<FsmnBlock> blocks_;
  Linear output_;
};

// Post-LN transformer encoder block with multi-head self-attention
// (scaled dot-product) and a tanh feedforward sublayer.
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(const std::string& name, int64_t model_dim,
                   int64_t num_heads, std::mt19937_64& rng);
  Var forward(Tape& tape, Var x);
  void collect(std::vector<Parameter*>& out);

 private:
  int64_t num_heads_ = 0;
  std::vector<Linear> query_, key_, value_;  // per head, model_dim -> head_dim
  Linear out_;
  Parameter ln1_gain_, ln1_bias_;
  Linear ff_in_, ff_out_;
  Parameter ln2_gain_, ln2_bias_;
};

// Token-embedding sequences (L x model_dim) -> contextual encodings.
class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(const std::string& name, const AttentionConfig& cfg,
                     std::mt19937_64& rng);
  Var encode(Tape& tape, Var embeddings);
  void collect(std::vector<Parameter*>& out);
  const AttentionConfig& config() const { return cfg_; }

 private:
  AttentionConfig cfg_;
  std::vector<TransformerBlock> blocks_;
};

// Sinusoidal position table, rows 0..length-1.
Tensor sinusoidal_positions(int64_t length, int64_t dim);

// Single-head cross-attention pooling of a key sequence into each query row:
//   scores[l, t] = (q_l Wq) . (k_t Wk),  weights = row_softmax(scores),
//   out_l = sum_t weights[l, t] (k_t Wv).
// Weight rows each sum to 1; the output rows are convex combinations of the
// projected key rows.
class AttentionAligner {
 public:
  AttentionAligner() = default;
  AttentionAligner(const std::string& name, int64_t query_dim, int64_t key_dim,
                   int64_t attn_dim, int64_t out_dim, std::mt19937_64& rng);
  Var forward(Tape& tape, Var queries, Var keys);
  // Same computation, also exposing the softmaxed weight matrix (L x T).
  struct Aligned {
    Var output;
    Var weights;
  };
  Aligned forward_with_weights(Tape& tape, Var queries, Var keys);
  void collect(std::vector<Parameter*>& out);
  Parameter& query_proj() { return query_proj_; }

 private:
  Parameter query_proj_;  // query_dim x attn_dim
  Parameter key_proj_;    // key_dim x attn_dim
  Parameter value_proj_;  // key_dim x out_dim
};

// Shared initializer: uniform(-limit, limit) with limit = sqrt(6/(in+out)).
Tensor glorot_init(int64_t rows, int64_t cols, std::mt19937_64& rng);

}  // namespace send

#endif  // SEND_NNET_H_
