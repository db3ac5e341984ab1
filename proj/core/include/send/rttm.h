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

#ifndef SEND_RTTM_H_
#define SEND_RTTM_H_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "send/pse.h"

namespace send {

struct RttmSegment {
  std::string recording_id;
  double onset = 0.0;     // seconds, >= 0
  double duration = 0.0;  // seconds, > 0
  std::string speaker_id;
  bool operator==(const RttmSegment&) const = default;
};

// Standard 10-field SPEAKER lines:
//   SPEAKER <rec> <chnl> <tbeg> <tdur> <ortho> <stype> <name> <conf> <slat>
// Anything else is an error naming the offending line.
std::vector<RttmSegment> rttm_parse(std::istream& in);
std::vector<RttmSegment> rttm_parse_file(const std::string& path);

// Emits times with three decimals; emit-then-parse is exact for values
// already on the millisecond grid.
std::string rttm_emit(std::span<const RttmSegment> segments);

// Frame t covers time [t, t+1) * frame_shift and is active for a speaker iff
// the frame center falls inside one of that speaker's segments. Column order
// follows speaker_order; an unknown speaker in `segments` is an error.
FrameLabels rttm_to_frame_labels(std::span<const RttmSegment> segments,
                                 double frame_shift,
                                 std::span<const std::string> speaker_order);

// Inverse direction: maximal runs of active frames become segments.
std::vector<RttmSegment> frame_labels_to_rttm(
    const FrameLabels& labels, double frame_shift,
    std::span<const std::string> speaker_names,
    const std::string& recording_id);

}  // namespace send

#endif  // SEND_RTTM_H_
