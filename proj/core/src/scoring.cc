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

#include "send/scoring.h"

#include <algorithm>
#include <limits>
#include <sstream>
#include <vector>

#include "send/common.h"

namespace send {

DerMode der_mode_from_string(const std::string& name) {
  if (name == "full") return DerMode::kFull;
  if (name == "ignore" || name == "ignore_overlap") {
    return DerMode::kIgnoreOverlap;
  }
  throw InvalidInput("unknown DER mode '" + name +
                     "' (expected full or ignore)");
}

std::string to_string(DerMode mode) {
  return mode == DerMode::kFull ? "full" : "ignore_overlap";
}

std::string DerReport::to_text() const {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed;
  os << "mode=" << send::to_string(mode) << " der=" << der
     << " miss=" << miss << " false_alarm=" << false_alarm
     << " confusion=" << confusion << " scored_frames=" << scored_frames
     << " ref_speaker_frames=" << ref_speaker_frames;
  return os.str();
}

std::string WderReport::to_text() const {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed;
  os << "wder=" << wder << " wrong_words=" << wrong_words
     << " total_words=" << total_words;
  return os.str();
}

void DerAccumulator::add(const FrameLabels& ref, const FrameLabels& hyp,
                         DerMode mode) {
  if (ref.num_frames() != hyp.num_frames() ||
      ref.num_speakers() != hyp.num_speakers()) {
    std::ostringstream os;
    os << "der: reference is " << ref.num_frames() << "x" << ref.num_speakers()
       << " but hypothesis is " << hyp.num_frames() << "x"
       << hyp.num_speakers();
    throw InvalidInput(os.str());
  }
  for (int64_t t = 0; t < ref.num_frames(); ++t) {
    int ref_n = ref.active_count(t);
    if (mode == DerMode::kIgnoreOverlap && ref_n >= 2) continue;
    ++scored_;
    int hyp_n = hyp.active_count(t);
    int correct = 0;
    for (int s = 0; s < ref.num_speakers(); ++s) {
      if (ref.active(t, s) && hyp.active(t, s)) ++correct;
    }
    denom_ += ref_n;
    // Per-frame optimal matching with aligned columns: identical speakers
    // pair up first, the leftovers pair as confusion, the excess on either
    // side is miss or false alarm.
    miss_ += std::max(0, ref_n - hyp_n);
    false_alarm_ += std::max(0, hyp_n - ref_n);
    confusion_ += std::min(ref_n, hyp_n) - correct;
  }
}

DerReport DerAccumulator::report(DerMode mode) const {
  if (denom_ == 0) {
    throw InvalidInput(
        "der: no reference speech in the scored region (undefined rate)");
  }
  DerReport r;
  r.mode = mode;
  r.scored_frames = scored_;
  r.ref_speaker_frames = denom_;
  double d = static_cast<double>(denom_);
  r.miss = static_cast<double>(miss_) / d;
  r.false_alarm = static_cast<double>(false_alarm_) / d;
  r.confusion = static_cast<double>(confusion_) / d;
  r.der = r.miss + r.false_alarm + r.confusion;
  return r;
}

DerReport compute_der(const FrameLabels& ref, const FrameLabels& hyp,
                      DerMode mode) {
  DerAccumulator acc;
  acc.add(ref, hyp, mode);
  return acc.report(mode);
}

std::vector<int> max_weight_assignment(
    const std::vector<std::vector<int64_t>>& weight) {
  size_t n = weight.size();
  if (n == 0) return {};
  for (const auto& row : weight) {
    if (row.size() != n) {
      throw InvalidInput("assignment: weight matrix must be square");
    }
  }
  // Potential-based Hungarian algorithm on negated weights (minimization).
  const int64_t kInf = std::numeric_limits<int64_t>::max() / 4;
  size_t m = n;
  std::vector<int64_t> u(n + 1, 0), v(m + 1, 0);
  std::vector<size_t> match(m + 1, 0);  // match[j] = row assigned to col j
  for (size_t i = 1; i <= n; ++i) {
    std::vector<int64_t> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    std::vector<size_t> way(m + 1, 0);
    match[0] = i;
    size_t j0 = 0;
    do {
      used[j0] = true;
      size_t i0 = match[j0], j1 = 0;
      int64_t delta = kInf;
      for (size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        int64_t cur = -weight[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (size_t j = 1; j <= m; ++j) {
    if (match[j] != 0) row_to_col[match[j] - 1] = static_cast<int>(j - 1);
  }
  return row_to_col;
}

FrameLabels remap_best_speaker_mapping(const FrameLabels& ref,
                                       const FrameLabels& hyp) {
  if (ref.num_frames() != hyp.num_frames() ||
      ref.num_speakers() != hyp.num_speakers()) {
    throw InvalidInput("der: shape mismatch between reference and hypothesis");
  }
  int n = ref.num_speakers();
  std::vector<std::vector<int64_t>> agree(
      static_cast<size_t>(n), std::vector<int64_t>(static_cast<size_t>(n), 0));
  for (int64_t t = 0; t < ref.num_frames(); ++t) {
    for (int r = 0; r < n; ++r) {
      if (!ref.active(t, r)) continue;
      for (int h = 0; h < n; ++h) {
        if (hyp.active(t, h)) {
          ++agree[static_cast<size_t>(r)][static_cast<size_t>(h)];
        }
      }
    }
  }
  std::vector<int> ref_to_hyp = max_weight_assignment(agree);
  FrameLabels remapped(hyp.num_frames(), n);
  for (int64_t t = 0; t < hyp.num_frames(); ++t) {
    for (int r = 0; r < n; ++r) {
      remapped.set(t, r, hyp.active(t, ref_to_hyp[static_cast<size_t>(r)]));
    }
  }
  return remapped;
}

DerReport compute_der_best_mapping(const FrameLabels& ref,
                                   const FrameLabels& hyp, DerMode mode) {
  return compute_der(ref, remap_best_speaker_mapping(ref, hyp), mode);
}

WderReport compute_wder(std::span<const int> ref_speakers,
                        std::span<const int> hyp_speakers) {
  if (ref_speakers.empty()) {
    throw InvalidInput("wder: empty word list");
  }
  if (ref_speakers.size() != hyp_speakers.size()) {
    std::ostringstream os;
    os << "wder: " << ref_speakers.size() << " reference words vs "
       << hyp_speakers.size() << " hypothesis words";
    throw InvalidInput(os.str());
  }
  WderReport r;
  r.total_words = static_cast<int64_t>(ref_speakers.size());
  for (size_t i = 0; i < ref_speakers.size(); ++i) {
    if (ref_speakers[i] != hyp_speakers[i]) ++r.wrong_words;
  }
  r.wder = static_cast<double>(r.wrong_words) /
           static_cast<double>(r.total_words);
  return r;
}

}  // namespace send
