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

#include "send/corpus.h"

#include <cmath>
#include <filesystem>
#include <sstream>

#include <doctest.h>

#include "send/common.h"
#include "send/dataset_io.h"
#include "send/rttm.h"
#include "support/test_util.h"

using namespace send;

namespace {

SimConfig small_config(uint64_t seed) {
  SimConfig c;
  c.num_samples = 4;
  c.min_speakers = 2;
  c.max_speakers = 3;
  c.num_pool_speakers = 5;
  c.max_simultaneous = 2;
  c.min_turns = 3;
  c.max_turns = 6;
  c.min_turn_frames = 10;
  c.max_turn_frames = 30;
  c.feature_dim = 8;
  c.embedding_dim = 8;
  c.speaker_separation = 2.0;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("synthetic speaker bank geometry") {
  std::mt19937_64 rng(5);
  // Orthogonal request with num == dim: pairwise cosine 0.
  Tensor ortho = synth_speaker_bank(
      6, 6, std::numeric_limits<double>::infinity(), rng);
  for (int a = 0; a < 6; ++a) {
    double norm = 0.0;
    for (int d = 0; d < 6; ++d) norm += ortho.at(a, d) * ortho.at(a, d);
    CHECK(norm == doctest::Approx(1.0));
    for (int b = a + 1; b < 6; ++b) {
      double dot = 0.0;
      for (int d = 0; d < 6; ++d) dot += ortho.at(a, d) * ortho.at(b, d);
      CHECK(dot == doctest::Approx(0.0).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(
      synth_speaker_bank(7, 6, std::numeric_limits<double>::infinity(), rng),
      InvalidInput);

  // Finite separation: pairwise cosine exactly 1 / (1 + s^2), decreasing.
  for (double s : {1.0, 2.0, 4.0}) {
    std::mt19937_64 r2(9);
    Tensor means = synth_speaker_bank(4, 8, s, r2);
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b) {
        double dot = 0.0;
        for (int d = 0; d < 8; ++d) dot += means.at(a, d) * means.at(b, d);
        CHECK(dot == doctest::Approx(1.0 / (1.0 + s * s)));
      }
    }
  }
}

TEST_CASE("enrollment sampling: zero noise returns the mean, seeded runs repeat") {
  std::mt19937_64 rng(7);
  Tensor means = synth_speaker_bank(3, 6, 2.0, rng);
  std::mt19937_64 r1(11), r2(11);
  std::vector<double> clean = sample_enrollment(means.row(0), 0.0, r1);
  for (int d = 0; d < 6; ++d) CHECK(clean[static_cast<size_t>(d)] == means.at(0, d));

  std::vector<double> a = sample_enrollment(means.row(1), 0.3, r1);
  std::mt19937_64 r1b(11);
  sample_enrollment(means.row(0), 0.0, r1b);  // replay the stream
  std::vector<double> b = sample_enrollment(means.row(1), 0.3, r1b);
  CHECK(a == b);
  double norm = 0.0;
  for (double v : a) norm += v * v;
  CHECK(norm == doctest::Approx(1.0));
  (void)r2;
}

TEST_CASE("single-speaker mixture is one active column plus silence") {
  SimConfig cfg = small_config(3);
  cfg.min_speakers = 1;
  cfg.max_speakers = 1;
  cfg.min_turns = 1;
  cfg.max_turns = 1;
  cfg.overlap_ratio = 0.0;
  std::mt19937_64 rng(1);
  SpeakerPool pool = build_speaker_pool(cfg, rng);
  MixtureSample s = simulate_mixture(cfg, pool, rng);
  REQUIRE(s.labels.num_speakers() == 1);
  CHECK(!s.labels.active(0, 0));  // leading silence
  int64_t active = 0;
  for (int64_t t = 0; t < s.labels.num_frames(); ++t) {
    active += s.labels.active(t, 0) ? 1 : 0;
  }
  CHECK(active >= cfg.min_turn_frames);
  CHECK(active < s.labels.num_frames());  // trailing silence exists
}

TEST_CASE("forced overlap produces frames with two active speakers") {
  SimConfig cfg = small_config(5);
  cfg.min_speakers = 2;
  cfg.max_speakers = 2;
  cfg.overlap_ratio = 0.45;
  cfg.min_turns = 8;
  cfg.max_turns = 8;
  std::mt19937_64 rng(2);
  SpeakerPool pool = build_speaker_pool(cfg, rng);
  bool saw_overlap = false;
  for (int i = 0; i < 10 && !saw_overlap; ++i) {
    MixtureSample s = simulate_mixture(cfg, pool, rng);
    for (int64_t t = 0; t < s.labels.num_frames(); ++t) {
      if (s.labels.active_count(t) >= 2) {
        saw_overlap = true;
        break;
      }
    }
  }
  CHECK(saw_overlap);
}

TEST_CASE("no simulated frame exceeds max_simultaneous; every sample has silence") {
  SimConfig cfg = small_config(9);
  cfg.max_speakers = 4;
  cfg.num_pool_speakers = 6;
  cfg.max_simultaneous = 2;
  cfg.overlap_ratio = 0.6;  // push hard against the cap
  cfg.min_turns = 10;
  cfg.max_turns = 14;
  std::mt19937_64 rng(4);
  SpeakerPool pool = build_speaker_pool(cfg, rng);
  for (int i = 0; i < 25; ++i) {
    MixtureSample s = simulate_mixture(cfg, pool, rng);
    bool silence = false;
    for (int64_t t = 0; t < s.labels.num_frames(); ++t) {
      CHECK(s.labels.active_count(t) <= 2);
      silence |= s.labels.active_count(t) == 0;
    }
    CHECK(silence);
    // Every active frame's speaker carries an enrollment.
    CHECK(s.enrollments.size() ==
          static_cast<size_t>(s.labels.num_speakers()));
  }
}

TEST_CASE("mixture features are signature sums (noise-free check)") {
  SimConfig cfg = small_config(13);
  cfg.feature_noise = 0.0;
  std::mt19937_64 rng(6);
  SpeakerPool pool = build_speaker_pool(cfg, rng);
  MixtureSample s = simulate_mixture(cfg, pool, rng);
  for (int64_t t = 0; t < s.labels.num_frames(); ++t) {
    for (int d = 0; d < cfg.feature_dim; ++d) {
      double expect = 0.0;
      for (int spk = 0; spk < s.labels.num_speakers(); ++spk) {
        if (s.labels.active(t, spk)) {
          expect += pool.signatures.at(s.speaker_ids[static_cast<size_t>(spk)], d);
        }
      }
      CHECK(s.features.at(t, d) == doctest::Approx(expect));
    }
  }
}

TEST_CASE("transcript words tile their turns and stay sorted") {
  SimConfig cfg = small_config(17);
  cfg.transcripts = true;
  std::mt19937_64 rng(8);
  SpeakerPool pool = build_speaker_pool(cfg, rng);
  MixtureSample s = simulate_mixture(cfg, pool, rng);
  REQUIRE(!s.words.empty());
  for (size_t i = 0; i < s.words.size(); ++i) {
    const WordSpan& w = s.words[i];
    CHECK(w.begin < w.end);
    CHECK(w.vocab_id >= 1);
    CHECK(w.vocab_id <= cfg.vocab_size);
    CHECK(w.speaker >= 0);
    CHECK(w.speaker < s.labels.num_speakers());
    if (i) CHECK(s.words[i - 1].begin <= w.begin);
    // The word's speaker is active across its span.
    for (int64_t f = w.begin; f < w.end; ++f) {
      CHECK(s.labels.active(f, w.speaker));
    }
  }
}

TEST_CASE("simulation is bit-deterministic under a fixed seed") {
  SimConfig cfg = small_config(21);
  Dataset a = simulate_dataset(cfg);
  Dataset b = simulate_dataset(cfg);
  REQUIRE(a.samples.size() == b.samples.size());
  for (size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].labels == b.samples[i].labels);
    REQUIRE(a.samples[i].features.size() == b.samples[i].features.size());
    for (int64_t j = 0; j < a.samples[i].features.size(); ++j) {
      CHECK(a.samples[i].features.at(j) == b.samples[i].features.at(j));
    }
    CHECK(a.samples[i].speaker_ids == b.samples[i].speaker_ids);
    CHECK(a.samples[i].enrollments == b.samples[i].enrollments);
  }
}

TEST_CASE("frontend stacking and subsampling") {
  // T_raw = 1: one frame of 7 replicated copies.
  Tensor one = Tensor::from_values({1, 2}, {3.0, -1.0});
  Tensor stacked = stack_and_subsample(one, 3, 6);
  REQUIRE(stacked.dim(0) == 1);
  REQUIRE(stacked.dim(1) == 14);
  for (int64_t w = 0; w < 7; ++w) {
    CHECK(stacked.at(0, 2 * w) == 3.0);
    CHECK(stacked.at(0, 2 * w + 1) == -1.0);
  }

  // stride = 1 preserves length; output dim is always 7x input dim.
  Tensor raw({10, 4});
  for (int64_t i = 0; i < raw.size(); ++i) raw.at(i) = static_cast<double>(i);
  Tensor s1 = stack_and_subsample(raw, 3, 1);
  CHECK(s1.dim(0) == 10);
  CHECK(s1.dim(1) == 28);

  // stride = 6 on 60 raw frames -> 10 frames.
  Tensor raw60({60, 80});
  CHECK(stack_and_subsample(raw60, 3, 6).dim(0) == 10);
  CHECK(stack_and_subsample(raw60, 3, 6).dim(1) == 560);

  // A mid-sequence window stacks the right neighbors.
  Tensor s6 = stack_and_subsample(raw, 1, 3);  // windows at frames 0, 3, 6, 9
  CHECK(s6.dim(0) == 4);
  CHECK(s6.at(1, 0) == raw.at(2, 0));  // frame 3, left neighbor
  CHECK(s6.at(1, 4) == raw.at(3, 0));  // center
  CHECK(s6.at(1, 8) == raw.at(4, 0));  // right neighbor
}

TEST_CASE("label subsampling takes per-column strict majority") {
  FrameLabels labels(6, 2);
  labels.set(0, 0, true);
  labels.set(1, 0, true);  // window {0,1,2}: speaker0 2/3 -> active
  labels.set(3, 1, true);  // window {3,4,5}: speaker1 1/3 -> inactive
  FrameLabels out = subsample_labels(labels, 3);
  REQUIRE(out.num_frames() == 2);
  CHECK(out.active(0, 0));
  CHECK(!out.active(0, 1));
  CHECK(!out.active(1, 0));
  CHECK(!out.active(1, 1));
}

TEST_CASE("rttm parse and emit") {
  std::istringstream in(
      "SPEAKER rec 1 0.00 1.50 <NA> <NA> spk1 <NA> <NA>\n"
      "\n"
      "SPEAKER rec 1 2.25 0.75 <NA> <NA> spk2 <NA> <NA>\n");
  std::vector<RttmSegment> segments = rttm_parse(in);
  REQUIRE(segments.size() == 2);
  CHECK(segments[0].recording_id == "rec");
  CHECK(segments[0].onset == doctest::Approx(0.0));
  CHECK(segments[0].duration == doctest::Approx(1.5));
  CHECK(segments[0].speaker_id == "spk1");

  std::istringstream empty("");
  CHECK(rttm_parse(empty).empty());

  std::istringstream bad("SPEAKER rec 1 0.0 1.0 <NA> <NA>\n");
  try {
    rttm_parse(bad);
    FAIL("expected a parse error");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }

  std::istringstream wrong_type("LEXEME rec 1 0.0 1.0 <NA> <NA> s <NA> <NA>\n");
  CHECK_THROWS_AS(rttm_parse(wrong_type), InvalidInput);
}

TEST_CASE("rttm round trip is exact on millisecond-grid segments") {
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<int> ms(1, 500000);
  std::vector<RttmSegment> segments;
  for (int i = 0; i < 100; ++i) {
    RttmSegment s;
    s.recording_id = "rec" + std::to_string(i % 3);
    s.onset = ms(rng) / 1000.0;
    s.duration = ms(rng) / 1000.0;
    s.speaker_id = "spk" + std::to_string(i % 7);
    segments.push_back(s);
  }
  std::string text = rttm_emit(segments);
  std::istringstream in(text);
  std::vector<RttmSegment> reparsed = rttm_parse(in);
  CHECK(reparsed == segments);
  CHECK(rttm_emit(reparsed) == text);
}

TEST_CASE("rttm to frame labels") {
  std::vector<RttmSegment> segments{{"rec", 0.0, 1.0, "a"}};
  std::vector<std::string> order{"a", "b"};
  FrameLabels labels = rttm_to_frame_labels(segments, 0.01, order);
  REQUIRE(labels.num_frames() == 100);
  for (int64_t t = 0; t < 100; ++t) {
    CHECK(labels.active(t, 0));
    CHECK(!labels.active(t, 1));
  }

  // Abutting segments of one speaker leave no gap frame.
  std::vector<RttmSegment> abut{{"rec", 0.0, 0.5, "a"}, {"rec", 0.5, 0.5, "a"}};
  FrameLabels joined = rttm_to_frame_labels(abut, 0.01, order);
  for (int64_t t = 0; t < joined.num_frames(); ++t) CHECK(joined.active(t, 0));

  // Overlapping segments of different speakers both mark the intersection.
  std::vector<RttmSegment> overlap{{"rec", 0.0, 1.0, "a"},
                                   {"rec", 0.5, 1.0, "b"}};
  FrameLabels both = rttm_to_frame_labels(overlap, 0.01, order);
  CHECK(both.active(75, 0));
  CHECK(both.active(75, 1));

  std::vector<RttmSegment> unknown{{"rec", 0.0, 1.0, "zz"}};
  CHECK_THROWS_AS(rttm_to_frame_labels(unknown, 0.01, order), InvalidInput);
}

TEST_CASE("frame labels to rttm inverts rttm_to_frame_labels") {
  std::mt19937_64 rng(35);
  FrameLabels labels = send::testing::random_labels(40, 3, 2, rng);
  std::vector<std::string> names{"s0", "s1", "s2"};
  std::vector<RttmSegment> segments =
      frame_labels_to_rttm(labels, 0.01, names, "rec");
  FrameLabels back = rttm_to_frame_labels(segments, 0.01, names);
  for (int64_t t = 0; t < back.num_frames(); ++t) {
    for (int s = 0; s < 3; ++s) CHECK(back.active(t, s) == labels.active(t, s));
  }
}

TEST_CASE("dataset write and read round trip") {
  SimConfig cfg = small_config(27);
  cfg.transcripts = true;
  Dataset d = simulate_dataset(cfg);
  std::string dir = "/tmp/send_test_dataset";
  std::filesystem::remove_all(dir);
  write_dataset(dir, d);
  Dataset r = read_dataset(dir);
  REQUIRE(r.samples.size() == d.samples.size());
  CHECK(r.config.seed == cfg.seed);
  for (size_t i = 0; i < d.samples.size(); ++i) {
    CHECK(r.samples[i].labels == d.samples[i].labels);
    CHECK(r.samples[i].speaker_ids == d.samples[i].speaker_ids);
    CHECK(r.samples[i].enrollments == d.samples[i].enrollments);
    REQUIRE(r.samples[i].words.size() == d.samples[i].words.size());
    for (int64_t j = 0; j < d.samples[i].features.size(); ++j) {
      CHECK(r.samples[i].features.at(j) == d.samples[i].features.at(j));
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("sim config validation and parsing") {
  SimConfig bad;
  bad.min_turn_frames = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);

  KeyValueFile kv;
  kv.set("seed", "42");
  kv.set("speaker_separation", "orthogonal");
  SimConfig parsed = SimConfig::from_keyvalue(kv);
  CHECK(parsed.seed == 42);
  CHECK(std::isinf(parsed.speaker_separation));

  KeyValueFile no_seed;  // seed is mandatory
  CHECK_THROWS_AS(SimConfig::from_keyvalue(no_seed), InvalidInput);

  // Round trip through text keeps the config identical.
  SimConfig cfg = small_config(99);
  SimConfig again = SimConfig::from_keyvalue(
      KeyValueFile::parse_text(cfg.to_keyvalue().to_text()));
  CHECK(again.to_keyvalue().to_text() == cfg.to_keyvalue().to_text());
}
