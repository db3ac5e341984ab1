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

#include "send/pse.h"

#include <algorithm>
#include <sstream>

#include "send/common.h"

namespace send {

namespace {

constexpr int kMaxCapacity = 62;

void check_capacity(int capacity) {
  if (capacity < 0 || capacity > kMaxCapacity) {
    std::ostringstream os;
    os << "speaker capacity " << capacity << " outside [0, " << kMaxCapacity
       << "]";
    throw InvalidInput(os.str());
  }
}

}  // namespace

PseCode encode_speaker_set(const SpeakerSet& s) {
  check_capacity(s.capacity);
  PseCode code = 0;
  for (int m : s.members) {
    if (m < 1 || m > s.capacity) {
      std::ostringstream os;
      os << "speaker index " << m << " outside [1, " << s.capacity << "]";
      throw InvalidInput(os.str());
    }
    code |= PseCode{1} << (m - 1);
  }
  return code;
}

SpeakerSet decode_speaker_set(PseCode code, int capacity) {
  check_capacity(capacity);
  if (capacity < 64 && code >= (PseCode{1} << capacity)) {
    std::ostringstream os;
    os << "code " << code << " out of range for capacity " << capacity;
    throw InvalidInput(os.str());
  }
  SpeakerSet s;
  s.capacity = capacity;
  for (int i = 0; i < capacity; ++i) {
    if (code & (PseCode{1} << i)) s.members.push_back(i + 1);
  }
  return s;
}

ValidLabelTable::ValidLabelTable(int max_overlap, int capacity,
                                 std::vector<PseCode> codes)
    : max_overlap_(max_overlap), capacity_(capacity), codes_(std::move(codes)) {
  code_to_class_.reserve(codes_.size());
  for (size_t i = 0; i < codes_.size(); ++i) {
    code_to_class_[codes_[i]] = static_cast<int>(i);
  }
}

PseCode ValidLabelTable::code_of(int class_id) const {
  if (class_id < 0 || class_id >= num_classes()) {
    std::ostringstream os;
    os << "class id " << class_id << " out of range for table of "
       << num_classes() << " classes";
    throw InvalidInput(os.str());
  }
  return codes_[static_cast<size_t>(class_id)];
}

int ValidLabelTable::class_of(PseCode code) const {
  auto it = code_to_class_.find(code);
  return it == code_to_class_.end() ? -1 : it->second;
}

ValidLabelTable build_valid_table(int max_overlap, int capacity) {
  check_capacity(capacity);
  if (max_overlap < 0 || max_overlap > capacity) {
    std::ostringstream os;
    os << "max overlap " << max_overlap << " outside [0, " << capacity << "]";
    throw InvalidInput(os.str());
  }
  // Enumerate subsets per cardinality (classic next-combination walk), then
  // sort; 2^N enumeration would not scale to the 62-speaker cap.
  std::vector<PseCode> codes;
  codes.push_back(0);
  for (int k = 1; k <= max_overlap; ++k) {
    std::vector<int> pick(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) pick[static_cast<size_t>(i)] = i;
    while (true) {
      PseCode c = 0;
      for (int i : pick) c |= PseCode{1} << i;
      codes.push_back(c);
      int j = k - 1;
      while (j >= 0 && pick[static_cast<size_t>(j)] == capacity - k + j) --j;
      if (j < 0) break;
      ++pick[static_cast<size_t>(j)];
      for (int i = j + 1; i < k; ++i) {
        pick[static_cast<size_t>(i)] = pick[static_cast<size_t>(i - 1)] + 1;
      }
    }
  }
  std::sort(codes.begin(), codes.end());
  return ValidLabelTable(max_overlap, capacity, std::move(codes));
}

FrameLabels::FrameLabels(int64_t num_frames, int num_speakers)
    : num_frames_(num_frames), num_speakers_(num_speakers) {
  if (num_frames < 0 || num_speakers < 0) {
    throw InvalidInput("frame label dimensions must be nonnegative");
  }
  cells_.assign(static_cast<size_t>(num_frames) * num_speakers, 0);
}

int FrameLabels::active_count(int64_t frame) const {
  int n = 0;
  for (int s = 0; s < num_speakers_; ++s) n += active(frame, s) ? 1 : 0;
  return n;
}

PseClassSequence labels_to_classes(const FrameLabels& labels,
                                   const ValidLabelTable& table,
                                   OverflowPolicy policy) {
  if (labels.num_speakers() != table.capacity()) {
    std::ostringstream os;
    os << "label capacity " << labels.num_speakers()
       << " does not match table capacity " << table.capacity();
    throw InvalidInput(os.str());
  }
  PseClassSequence out;
  out.reserve(static_cast<size_t>(labels.num_frames()));
  for (int64_t t = 0; t < labels.num_frames(); ++t) {
    PseCode code = 0;
    int active = 0;
    for (int n = 0; n < labels.num_speakers(); ++n) {
      if (!labels.active(t, n)) continue;
      if (active == table.max_overlap()) {
        if (policy == OverflowPolicy::kReject) {
          std::ostringstream os;
          os << "frame " << t << " has more than " << table.max_overlap()
             << " active speakers";
          throw InvalidInput(os.str());
        }
        break;  // kTruncate: keep the first max_overlap speakers
      }
      code |= PseCode{1} << n;
      ++active;
    }
    int cls = table.class_of(code);
    // Unreachable once cardinality is capped; kept as a hard invariant.
    if (cls < 0) throw std::runtime_error("valid-label table lookup failed");
    out.push_back(static_cast<int32_t>(cls));
  }
  return out;
}

FrameLabels classes_to_labels(const PseClassSequence& classes,
                              const ValidLabelTable& table) {
  FrameLabels out(static_cast<int64_t>(classes.size()), table.capacity());
  for (size_t t = 0; t < classes.size(); ++t) {
    PseCode code = table.code_of(classes[t]);  // throws on out-of-range class
    for (int n = 0; n < table.capacity(); ++n) {
      if (code & (PseCode{1} << n)) out.set(static_cast<int64_t>(t), n, true);
    }
  }
  return out;
}

}  // namespace send
