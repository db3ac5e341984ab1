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

#ifndef SEND_SIMILARITY_H_
#define SEND_SIMILARITY_H_

#include <span>
#include <string>

#include "send/autodiff.h"
#include "send/tensor.h"

namespace send {

// Frame-vs-speaker scoring functions. `dot` is unbounded; `sigma_dot` runs
// both vectors through tanh first and is bounded by the vector dimension;
// `cosine` is the normalized dot product in [-1, 1].
enum class SimilarityMetric { kDot, kSigmaDot, kCosine };

SimilarityMetric similarity_metric_from_string(const std::string& name);
std::string to_string(SimilarityMetric metric);

double dot_similarity(std::span<const double> a, std::span<const double> b);
double sigma_dot_similarity(std::span<const double> a,
                            std::span<const double> b);

// Cosine of the zero vector is undefined; we return 0 ("no evidence") and
// flag it so callers can tell the degenerate case from true orthogonality.
struct CosineResult {
  double value = 0.0;
  bool zero_vector = false;
};
CosineResult cosine_similarity(std::span<const double> a,
                               std::span<const double> b);

// Pairwise scores between sequence rows and speaker rows.
struct SimilarityMatrix {
  SimilarityMetric metric = SimilarityMetric::kDot;
  Tensor values;                 // T x N (or L x N at word level)
  int64_t zero_vector_pairs = 0; // cosine only
};

SimilarityMatrix similarity_matrix(const Tensor& sequence,  // T x D
                                   const Tensor& speakers,  // N x D
                                   SimilarityMetric metric);

// Differentiable T x N similarity block for model graphs.
Var similarity_graph(Tape& tape, Var sequence, Var speakers,
                     SimilarityMetric metric);

}  // namespace send

#endif  // SEND_SIMILARITY_H_
