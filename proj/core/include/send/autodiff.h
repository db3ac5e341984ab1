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

#ifndef SEND_AUTODIFF_H_
#define SEND_AUTODIFF_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "send/tensor.h"

namespace send {

// A trainable tensor. `grad` always has the value's shape and is accumulated
// into by Tape::backward; call zero_grad() between optimization steps.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(0.0); }
};

// Handle to a node on a Tape.
struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff over dense tensors. Ops evaluate eagerly and record
// a backward closure; backward() runs the closures in reverse creation order
// (creation order is topological because evaluation is eager).
//
// Every op validates operand shapes and throws InvalidInput naming the op and
// its operands on mismatch. Tensor values are immutable once recorded.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  Var constant(Tensor value, std::string label = "const");
  Var param(Parameter& p);  // backward() accumulates into p.grad

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;  // valid after backward()

  // Primitives. Shapes are rank-2 matrices unless noted; rank-1 operands are
  // treated as a single row where that is unambiguous.
  Var matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);
  Var add(Var a, Var b);                  // same shape, elementwise
  Var add_row_broadcast(Var x, Var row);  // every row of x plus `row`
  Var mul(Var a, Var b);                  // same shape, elementwise
  Var scale(Var a, double c);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var row_softmax(Var a);
  Var row_l2_normalize(Var a);  // zero rows map to zero rows
  // FIR filter along the sequence (row) axis, one tap set per channel.
  // x: T x H, taps: S x H with S odd; the window is centered and the sequence
  // is zero-padded at both ends. Output is T x H.
  Var seq_conv1d(Var x, Var taps);
  Var layer_norm(Var x, Var gain, Var bias, double epsilon = 1e-5);
  Var lookup_rows(Var table, std::vector<int64_t> ids);
  Var concat_cols(const std::vector<Var>& parts);
  Var sum(Var a);   // scalar
  Var mean(Var a);  // scalar

  // Fused training heads (numerically stable via log-sum-exp / softplus).
  // Mean cross-entropy over rows of `logits` against integer class targets.
  Var softmax_cross_entropy(Var logits, std::vector<int64_t> targets);
  // Mean binary cross-entropy over all entries; targets in [0, 1].
  Var sigmoid_binary_cross_entropy(Var logits, Tensor targets);

  // Seeds d(loss)/d(loss) = 1, sweeps the tape, accumulates parameter
  // gradients, and returns the scalar loss value.
  double backward(Var loss);

  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape*)> backward;  // null for leaves
    std::string label;
  };

  Var emplace(Tensor value, std::string label,
              std::function<void(Tape*)> backward = nullptr);
  const Tensor& val(Var v) const {
    return nodes_[static_cast<size_t>(v.id)].value;
  }
  void check_var(Var v, const char* op) const;
  std::string describe(Var v) const;

  std::vector<Node> nodes_;
  struct Binding {
    int32_t node;
    Parameter* param;
  };
  std::vector<Binding> bindings_;
};

// Runs the recorded graph backward from `loss` (a scalar node) and returns
// the loss value; every bound Parameter's grad then holds d(loss)/d(value).
double forward_backward(Tape& tape, Var loss);

// Central-difference gradient verification. `build_loss` must rebuild the
// computation from the parameters' current values and return the scalar loss
// node. Returns the maximum over all parameter elements of
//   |analytic - central| / max(|analytic|, |central|, 1e-8).
// A graph with no parameters returns 0.
double grad_check(const std::function<Var(Tape&)>& build_loss,
                  std::span<Parameter* const> params, double epsilon = 1e-4);

// Numerically stable softmax of one logit vector (max-subtracted).
std::vector<double> softmax(std::span<const double> logits);

// -log(probabilities[target]); throws InvalidInput when target is out of
// range or the input is not a probability vector.
double cross_entropy(std::span<const double> probabilities, int64_t target);

}  // namespace send

#endif  // SEND_AUTODIFF_H_
