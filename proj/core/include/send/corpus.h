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

#ifndef SEND_CORPUS_H_
#define SEND_CORPUS_H_

#include <cstdint>
#include <random>
#include <vector>

#include "send/keyvalue.h"
#include "send/pse.h"
#include "send/tensor.h"

namespace send {

// Mixture simulation settings. Features are synthetic per-speaker signature
// vectors (not audio): active speakers' signatures sum per frame, plus
// isotropic noise, which keeps the diarization task linearly separable by
// construction. The seed is mandatory; a dataset is a pure function of it.
struct SimConfig {
  int num_samples = 100;
  int min_speakers = 2;  // speakers per mixture
  int max_speakers = 4;
  int num_pool_speakers = 8;  // global speaker inventory
  int max_simultaneous = 2;
  int min_turns = 4;
  int max_turns = 10;
  int min_turn_frames = 20;
  int max_turn_frames = 60;
  int min_pause_frames = 1;
  int max_pause_frames = 15;
  // Fraction of speech frames carrying two or more speakers. Turn onsets are
  // shifted back across the previous turn's tail with the probability that
  // makes the expected ratio hit this target.
  double overlap_ratio = 0.30;
  int feature_dim = 16;
  double feature_noise = 0.05;
  int embedding_dim = 16;
  // Pairwise cosine between speaker means is 1/(1+separation^2);
  // +infinity requests an exactly orthonormal inventory.
  double speaker_separation = 4.0;
  double enrollment_noise = 0.05;
  // Word-level transcript generation (for the text-aware model).
  bool transcripts = true;
  int min_word_frames = 3;
  int max_word_frames = 8;
  int vocab_size = 50;  // content words; vocab id 0 is the SC separator
  uint64_t seed = 1;

  void validate() const;
  static SimConfig from_keyvalue(const KeyValueFile& kv);
  KeyValueFile to_keyvalue() const;
};

// A word's frame span inside a mixture; speaker is a sample-local index.
struct WordSpan {
  int64_t begin = 0;  // [begin, end)
  int64_t end = 0;
  int32_t vocab_id = 0;
  int32_t speaker = -1;
};

struct MixtureSample {
  Tensor features;    // T x F
  FrameLabels labels; // T x S, S = speakers in this mixture
  std::vector<int32_t> speaker_ids;              // pool indices, size S
  std::vector<std::vector<double>> enrollments;  // S rows of embedding_dim
  std::vector<WordSpan> words;  // serialized by onset; empty when disabled
};

// Global speaker inventory: unit-norm mean embeddings plus fixed
// feature-space signatures (means mapped into feature_dim).
struct SpeakerPool {
  Tensor means;       // S x embedding_dim
  Tensor signatures;  // S x feature_dim
};

// Unit-norm mean embeddings with pairwise cosine exactly 1/(1+separation^2)
// (0 when separation is +infinity). Needs dim > num_speakers for finite
// separation and dim >= num_speakers for the orthogonal case.
Tensor synth_speaker_bank(int num_speakers, int dim, double separation,
                          std::mt19937_64& rng);

// mean + noise_scale * gaussian, renormalized; noise 0 returns the mean.
std::vector<double> sample_enrollment(std::span<const double> mean,
                                      double noise_scale,
                                      std::mt19937_64& rng);

SpeakerPool build_speaker_pool(const SimConfig& cfg, std::mt19937_64& rng);

MixtureSample simulate_mixture(const SimConfig& cfg, const SpeakerPool& pool,
                               std::mt19937_64& rng);

// Feature frontend: every frame is concatenated with `context` previous and
// succeeding frames (edges replicated), then every `stride`-th stacked frame
// is kept, giving ceil(T/stride) output frames of dimension (2*context+1)*F.
Tensor stack_and_subsample(const Tensor& raw, int context, int stride);

// Per-column strict majority over each stride window (ties -> inactive), so
// label sequences stay aligned with the subsampled features.
FrameLabels subsample_labels(const FrameLabels& labels, int stride);

}  // namespace send

#endif  // SEND_CORPUS_H_
