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

#ifndef SEND_PSE_H_
#define SEND_PSE_H_

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace send {

// Subset-of-speakers code: bit (i-1) set iff speaker i (1-based) is active.
using PseCode = uint64_t;

// Speakers are indexed 1..capacity; the empty set is valid (silence).
// Capacity is capped at 62 so every code fits a 64-bit integer.
struct SpeakerSet {
  int capacity = 0;
  std::vector<int> members;  // sorted, unique, each in [1, capacity]
};

PseCode encode_speaker_set(const SpeakerSet& s);
SpeakerSet decode_speaker_set(PseCode code, int capacity);

// The valid-label table: all subset codes with cardinality <= max_overlap,
// sorted ascending. Class ids are positions in that list, so class 0 is
// always silence. Size is sum_{k<=K} C(N, k).
class ValidLabelTable {
 public:
  ValidLabelTable() = default;
  ValidLabelTable(int max_overlap, int capacity, std::vector<PseCode> codes);

  int max_overlap() const { return max_overlap_; }
  int capacity() const { return capacity_; }
  int num_classes() const { return static_cast<int>(codes_.size()); }
  PseCode code_of(int class_id) const;
  // -1 when the code is not a valid label (too many active speakers).
  int class_of(PseCode code) const;
  const std::vector<PseCode>& codes() const { return codes_; }

 private:
  int max_overlap_ = 0;
  int capacity_ = 0;
  std::vector<PseCode> codes_;
  std::unordered_map<PseCode, int> code_to_class_;
};

ValidLabelTable build_valid_table(int max_overlap, int capacity);

// T x N multi-hot speaker activity, row-major.
class FrameLabels {
 public:
  FrameLabels() = default;
  FrameLabels(int64_t num_frames, int num_speakers);

  int64_t num_frames() const { return num_frames_; }
  int num_speakers() const { return num_speakers_; }
  bool active(int64_t frame, int speaker) const {
    return cells_[static_cast<size_t>(frame) * num_speakers_ + speaker] != 0;
  }
  void set(int64_t frame, int speaker, bool on) {
    cells_[static_cast<size_t>(frame) * num_speakers_ + speaker] = on ? 1 : 0;
  }
  int active_count(int64_t frame) const;
  bool operator==(const FrameLabels&) const = default;

 private:
  int64_t num_frames_ = 0;
  int num_speakers_ = 0;
  std::vector<uint8_t> cells_;
};

using PseClassSequence = std::vector<int32_t>;

// What to do with a frame whose active-speaker count exceeds the table's
// max_overlap: refuse, or keep the first max_overlap speakers in column
// order and drop the rest.
enum class OverflowPolicy { kReject, kTruncate };

PseClassSequence labels_to_classes(const FrameLabels& labels,
                                   const ValidLabelTable& table,
                                   OverflowPolicy policy);
FrameLabels classes_to_labels(const PseClassSequence& classes,
                              const ValidLabelTable& table);

}  // namespace send

#endif  // SEND_PSE_H_
