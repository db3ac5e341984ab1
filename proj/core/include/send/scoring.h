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

#ifndef SEND_SCORING_H_
#define SEND_SCORING_H_

#include <cstdint>
#include <span>
#include <string>

#include "send/pse.h"

namespace send {

// Frame-based scoring with no collar. `kIgnoreOverlap` drops every frame
// where the reference has two or more active speakers before scoring.
enum class DerMode { kFull, kIgnoreOverlap };

DerMode der_mode_from_string(const std::string& name);
std::string to_string(DerMode mode);

// der = miss + false_alarm + confusion, each normalized by the reference
// speaker-frame count in the scored region. Can exceed 1 when the hypothesis
// invents enough speech.
struct DerReport {
  DerMode mode = DerMode::kFull;
  double der = 0.0;
  double miss = 0.0;
  double false_alarm = 0.0;
  double confusion = 0.0;
  int64_t scored_frames = 0;          // frames kept by the mode
  int64_t ref_speaker_frames = 0;     // denominator
  std::string to_text() const;
};

// Speaker columns are assumed aligned (model output follows the bank order).
// Throws when shapes differ or the scored region has no reference speech.
DerReport compute_der(const FrameLabels& ref, const FrameLabels& hyp,
                      DerMode mode);

// For hypotheses from external systems whose column order is arbitrary:
// picks the column permutation that maximizes matched speaker-frames
// (Hungarian assignment) and then scores as compute_der.
DerReport compute_der_best_mapping(const FrameLabels& ref,
                                   const FrameLabels& hyp, DerMode mode);

// The permutation step of compute_der_best_mapping on its own.
FrameLabels remap_best_speaker_mapping(const FrameLabels& ref,
                                       const FrameLabels& hyp);

struct WderReport {
  double wder = 0.0;
  int64_t total_words = 0;
  int64_t wrong_words = 0;
  std::string to_text() const;
};

// Word-level attribution error over pre-aligned words.
WderReport compute_wder(std::span<const int> ref_speakers,
                        std::span<const int> hyp_speakers);

// Streaming corpus-level DER: add per-recording label pairs, then report.
class DerAccumulator {
 public:
  void add(const FrameLabels& ref, const FrameLabels& hyp, DerMode mode);
  DerReport report(DerMode mode) const;  // throws when nothing was scored

 private:
  int64_t miss_ = 0, false_alarm_ = 0, confusion_ = 0;
  int64_t denom_ = 0, scored_ = 0;
};

// Maximum-weight assignment of rows to columns (square cost, maximizing).
// Exposed for the mapping search; returns col index per row.
std::vector<int> max_weight_assignment(const std::vector<std::vector<int64_t>>& weight);

}  // namespace send

#endif  // SEND_SCORING_H_
