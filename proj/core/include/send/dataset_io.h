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

#ifndef SEND_DATASET_IO_H_
#define SEND_DATASET_IO_H_

#include <string>
#include <vector>

#include "send/corpus.h"

namespace send {

struct DatasetStats {
  int64_t num_samples = 0;
  int64_t total_frames = 0;
  int64_t speech_frames = 0;   // frames with >= 1 active speaker
  int64_t overlap_frames = 0;  // frames with >= 2 active speakers
  int64_t total_words = 0;
  int max_simultaneous_seen = 0;
  double overlap_ratio() const {
    return speech_frames > 0
               ? static_cast<double>(overlap_frames) /
                     static_cast<double>(speech_frames)
               : 0.0;
  }
};

struct Dataset {
  SimConfig config;
  SpeakerPool pool;
  std::vector<MixtureSample> samples;
  DatasetStats stats() const;
};

// Deterministic in config.seed: the pool uses the "pool" sub-stream and each
// sample its own "sample"/index sub-stream.
Dataset simulate_dataset(const SimConfig& config);

// On-disk layout:
//   <dir>/manifest.json         counts, stats, resolved config, speaker pool
//   <dir>/sample_000123.bin     per-sample binary record (see dataset_io.cc)
// Rewriting the same dataset is byte-identical.
void write_dataset(const std::string& dir, const Dataset& dataset);
Dataset read_dataset(const std::string& dir);

// Standalone frame-label records (hypothesis output / scoring input).
void write_frame_labels(const std::string& path, const FrameLabels& labels);
FrameLabels read_frame_labels(const std::string& path);

}  // namespace send

#endif  // SEND_DATASET_IO_H_
