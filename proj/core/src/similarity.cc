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

#include "send/similarity.h"

#include <cmath>
#include <sstream>

#include "send/common.h"

namespace send {

namespace {

void check_dims(std::span<const double> a, std::span<const double> b,
                const char* op) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << op << ": vector dimensions disagree (" << a.size() << " vs "
       << b.size() << ")";
    throw InvalidInput(os.str());
  }
  if (a.empty()) {
    throw InvalidInput(std::string(op) + ": empty vectors");
  }
}

}  // namespace

SimilarityMetric similarity_metric_from_string(const std::string& name) {
  if (name == "dot") return SimilarityMetric::kDot;
  if (name == "sigma_dot") return SimilarityMetric::kSigmaDot;
  if (name == "cosine") return SimilarityMetric::kCosine;
  throw InvalidInput("unknown similarity metric '" + name +
                     "' (expected dot, sigma_dot or cosine)");
}

std::string to_string(SimilarityMetric metric) {
  switch (metric) {
    case SimilarityMetric::kDot:
      return "dot";
    case SimilarityMetric::kSigmaDot:
      return "sigma_dot";
    case SimilarityMetric::kCosine:
      return "cosine";
  }
  return "?";
}

double dot_similarity(std::span<const double> a, std::span<const double> b) {
  check_dims(a, b, "dot_similarity");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sigma_dot_similarity(std::span<const double> a,
                            std::span<const double> b) {
  check_dims(a, b, "sigma_dot_similarity");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += std::tanh(a[i]) * std::tanh(b[i]);
  return s;
}

CosineResult cosine_similarity(std::span<const double> a,
                               std::span<const double> b) {
  check_dims(a, b, "cosine_similarity");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return {0.0, true};
  return {dot / (std::sqrt(na) * std::sqrt(nb)), false};
}

SimilarityMatrix similarity_matrix(const Tensor& sequence,
                                   const Tensor& speakers,
                                   SimilarityMetric metric) {
  if (sequence.ndim() != 2 || speakers.ndim() != 2 ||
      sequence.dim(1) != speakers.dim(1)) {
    std::ostringstream os;
    os << "similarity_matrix: sequence " << sequence.shape_str()
       << " and speakers " << speakers.shape_str()
       << " must be rank 2 with a shared last dimension";
    throw InvalidInput(os.str());
  }
  SimilarityMatrix out;
  out.metric = metric;
  out.values = Tensor({sequence.dim(0), speakers.dim(0)});
  for (int64_t t = 0; t < sequence.dim(0); ++t) {
    for (int64_t n = 0; n < speakers.dim(0); ++n) {
      double v = 0.0;
      switch (metric) {
        case SimilarityMetric::kDot:
          v = dot_similarity(sequence.row(t), speakers.row(n));
          break;
        case SimilarityMetric::kSigmaDot:
          v = sigma_dot_similarity(sequence.row(t), speakers.row(n));
          break;
        case SimilarityMetric::kCosine: {
          CosineResult r = cosine_similarity(sequence.row(t), speakers.row(n));
          if (r.zero_vector) ++out.zero_vector_pairs;
          v = r.value;
          break;
        }
      }
      out.values.at(t, n) = v;
    }
  }
  return out;
}

Var similarity_graph(Tape& tape, Var sequence, Var speakers,
                     SimilarityMetric metric) {
  switch (metric) {
    case SimilarityMetric::kDot:
      return tape.matmul(sequence, speakers, false, true);
    case SimilarityMetric::kSigmaDot:
      return tape.matmul(tape.tanh(sequence), tape.tanh(speakers), false,
                         true);
    case SimilarityMetric::kCosine:
      return tape.matmul(tape.row_l2_normalize(sequence),
                         tape.row_l2_normalize(speakers), false, true);
  }
  throw InvalidInput("similarity_graph: unknown metric");
}

}  // namespace send
