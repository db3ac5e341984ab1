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

#include "send/rttm.h"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "send/common.h"

namespace send {

namespace {

[[noreturn]] void line_error(int line_no, const std::string& what) {
  std::ostringstream os;
  os << "rttm line " << line_no << ": " << what;
  throw InvalidInput(os.str());
}

double parse_seconds(const std::string& field, int line_no, const char* name) {
  try {
    size_t pos = 0;
    double v = std::stod(field, &pos);
    if (pos != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    line_error(line_no, std::string("bad ") + name + " '" + field + "'");
  }
}

}  // namespace

std::vector<RttmSegment> rttm_parse(std::istream& in) {
  std::vector<RttmSegment> segments;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream is(line);
    std::vector<std::string> fields;
    std::string f;
    while (is >> f) fields.push_back(f);
    if (fields.size() != 10) {
      std::ostringstream os;
      os << "expected 10 fields, got " << fields.size();
      line_error(line_no, os.str());
    }
    if (fields[0] != "SPEAKER") {
      line_error(line_no, "expected type SPEAKER, got '" + fields[0] + "'");
    }
    RttmSegment seg;
    seg.recording_id = fields[1];
    seg.onset = parse_seconds(fields[3], line_no, "onset");
    seg.duration = parse_seconds(fields[4], line_no, "duration");
    seg.speaker_id = fields[7];
    if (seg.onset < 0.0) line_error(line_no, "negative onset");
    if (seg.duration <= 0.0) line_error(line_no, "non-positive duration");
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::vector<RttmSegment> rttm_parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open RTTM file: " + path);
  return rttm_parse(in);
}

std::string rttm_emit(std::span<const RttmSegment> segments) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  for (const RttmSegment& s : segments) {
    os << "SPEAKER " << s.recording_id << " 1 " << s.onset << ' ' << s.duration
       << " <NA> <NA> " << s.speaker_id << " <NA> <NA>\n";
  }
  return os.str();
}

FrameLabels rttm_to_frame_labels(std::span<const RttmSegment> segments,
                                 double frame_shift,
                                 std::span<const std::string> speaker_order) {
  if (frame_shift <= 0.0) {
    throw InvalidInput("rttm_to_frame_labels: frame_shift must be positive");
  }
  std::map<std::string, int> column;
  for (size_t i = 0; i < speaker_order.size(); ++i) {
    column[speaker_order[i]] = static_cast<int>(i);
  }
  double max_end = 0.0;
  for (const RttmSegment& s : segments) {
    if (!column.count(s.speaker_id)) {
      throw InvalidInput("rttm_to_frame_labels: speaker '" + s.speaker_id +
                         "' not in the given speaker order");
    }
    max_end = std::max(max_end, s.onset + s.duration);
  }
  int64_t frames = static_cast<int64_t>(std::ceil(max_end / frame_shift));
  FrameLabels labels(frames, static_cast<int>(speaker_order.size()));
  for (const RttmSegment& s : segments) {
    int col = column[s.speaker_id];
    for (int64_t t = 0; t < frames; ++t) {
      double center = (static_cast<double>(t) + 0.5) * frame_shift;
      if (center >= s.onset && center < s.onset + s.duration) {
        labels.set(t, col, true);
      }
    }
  }
  return labels;
}

std::vector<RttmSegment> frame_labels_to_rttm(
    const FrameLabels& labels, double frame_shift,
    std::span<const std::string> speaker_names,
    const std::string& recording_id) {
  if (frame_shift <= 0.0) {
    throw InvalidInput("frame_labels_to_rttm: frame_shift must be positive");
  }
  if (static_cast<int>(speaker_names.size()) != labels.num_speakers()) {
    throw InvalidInput("frame_labels_to_rttm: speaker name count mismatch");
  }
  std::vector<RttmSegment> out;
  for (int s = 0; s < labels.num_speakers(); ++s) {
    int64_t run_start = -1;
    for (int64_t t = 0; t <= labels.num_frames(); ++t) {
      bool on = t < labels.num_frames() && labels.active(t, s);
      if (on && run_start < 0) run_start = t;
      if (!on && run_start >= 0) {
        RttmSegment seg;
        seg.recording_id = recording_id;
        seg.onset = static_cast<double>(run_start) * frame_shift;
        seg.duration = static_cast<double>(t - run_start) * frame_shift;
        seg.speaker_id = speaker_names[static_cast<size_t>(s)];
        out.push_back(std::move(seg));
        run_start = -1;
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RttmSegment& a, const RttmSegment& b) {
                     return a.onset < b.onset;
                   });
  return out;
}

}  // namespace send
