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

#include <bit>
#include <random>

#include <doctest.h>

#include "send/common.h"
#include "support/test_util.h"

using namespace send;

TEST_CASE("encode: empty set, singleton, pair") {
  CHECK(encode_speaker_set({4, {}}) == 0);
  CHECK(encode_speaker_set({4, {1}}) == 1);
  CHECK(encode_speaker_set({4, {2, 4}}) == 10);
  CHECK_THROWS_AS(encode_speaker_set({4, {5}}), InvalidInput);
  CHECK_THROWS_AS(encode_speaker_set({70, {1}}), InvalidInput);
}

TEST_CASE("decode: inverse direction") {
  CHECK(decode_speaker_set(0, 4).members.empty());
  CHECK(decode_speaker_set(3, 4).members == std::vector<int>{1, 2});
  CHECK(decode_speaker_set(10, 4).members == std::vector<int>{2, 4});
  CHECK_THROWS_AS(decode_speaker_set(16, 4), InvalidInput);
}

TEST_CASE("exhaustive round trip for all subsets up to N = 10") {
  for (int n = 0; n <= 10; ++n) {
    for (PseCode code = 0; code < (PseCode{1} << n); ++code) {
      SpeakerSet s = decode_speaker_set(code, n);
      CHECK(encode_speaker_set(s) == code);
    }
  }
}

TEST_CASE("valid table sizes") {
  CHECK(build_valid_table(0, 5).num_classes() == 1);
  CHECK(build_valid_table(2, 2).num_classes() == 4);
  CHECK(build_valid_table(3, 16).num_classes() == 697);
  CHECK(build_valid_table(10, 10).num_classes() == 1024);  // full power set
  CHECK_THROWS_AS(build_valid_table(3, 2), InvalidInput);
  CHECK_THROWS_AS(build_valid_table(-1, 2), InvalidInput);
}

TEST_CASE("table contents match brute-force subset enumeration") {
  for (int n : {3, 5, 9, 12, 16}) {
    for (int k = 0; k <= 4 && k <= n; ++k) {
      ValidLabelTable table = build_valid_table(k, n);
      std::vector<PseCode> expected;
      for (PseCode code = 0; code < (PseCode{1} << n); ++code) {
        if (std::popcount(code) <= k) expected.push_back(code);
      }
      REQUIRE(table.codes() == expected);  // sorted ascending by construction
      CHECK(table.code_of(0) == 0);        // class 0 is silence
      for (int c = 1; c < table.num_classes(); ++c) {
        CHECK(table.code_of(c) > table.code_of(c - 1));
      }
    }
  }
}

TEST_CASE("labels_to_classes basics") {
  ValidLabelTable table = build_valid_table(2, 4);

  FrameLabels silence(3, 4);
  PseClassSequence classes =
      labels_to_classes(silence, table, OverflowPolicy::kReject);
  CHECK(classes == PseClassSequence{0, 0, 0});

  FrameLabels pair(1, 4);
  pair.set(0, 0, true);  // speakers {1, 3} -> code 1 + 4 = 5
  pair.set(0, 2, true);
  classes = labels_to_classes(pair, table, OverflowPolicy::kReject);
  CHECK(classes.size() == 1);
  CHECK(table.code_of(classes[0]) == 5);
  CHECK(classes[0] == table.class_of(5));
}

TEST_CASE("overflow policies") {
  ValidLabelTable table = build_valid_table(2, 4);
  FrameLabels three(1, 4);
  three.set(0, 0, true);
  three.set(0, 1, true);
  three.set(0, 3, true);
  CHECK_THROWS_AS(labels_to_classes(three, table, OverflowPolicy::kReject),
                  InvalidInput);
  try {
    labels_to_classes(three, table, OverflowPolicy::kReject);
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("frame 0") != std::string::npos);
  }
  PseClassSequence truncated =
      labels_to_classes(three, table, OverflowPolicy::kTruncate);
  CHECK(table.code_of(truncated[0]) == 3);  // first two columns kept
}

TEST_CASE("classes_to_labels basics and errors") {
  ValidLabelTable table = build_valid_table(2, 4);
  FrameLabels all_silence = classes_to_labels({0, 0, 0, 0}, table);
  for (int64_t t = 0; t < 4; ++t) CHECK(all_silence.active_count(t) == 0);

  int last_only = table.class_of(PseCode{1} << 3);  // only speaker N active
  FrameLabels decoded = classes_to_labels({last_only}, table);
  CHECK(decoded.active(0, 3));
  CHECK(decoded.active_count(0) == 1);

  CHECK_THROWS_AS(classes_to_labels({999}, table), InvalidInput);
  CHECK_THROWS_AS(classes_to_labels({-1}, table), InvalidInput);
}

TEST_CASE("round trip on 1000 random valid label matrices") {
  std::mt19937_64 rng(41);
  ValidLabelTable table = build_valid_table(2, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::uniform_int_distribution<int64_t> frames(1, 12);
    FrameLabels labels =
        send::testing::random_labels(frames(rng), 5, 2, rng);
    PseClassSequence classes =
        labels_to_classes(labels, table, OverflowPolicy::kReject);
    CHECK(classes_to_labels(classes, table) == labels);
  }
}

TEST_CASE("labels_to_classes is permutation-covariant") {
  std::mt19937_64 rng(43);
  ValidLabelTable table = build_valid_table(3, 6);
  for (int trial = 0; trial < 50; ++trial) {
    FrameLabels labels = send::testing::random_labels(10, 6, 3, rng);
    std::vector<int> perm{0, 1, 2, 3, 4, 5};
    std::shuffle(perm.begin(), perm.end(), rng);
    FrameLabels permuted(10, 6);
    for (int64_t t = 0; t < 10; ++t) {
      for (int s = 0; s < 6; ++s) {
        permuted.set(t, perm[static_cast<size_t>(s)], labels.active(t, s));
      }
    }
    PseClassSequence direct =
        labels_to_classes(permuted, table, OverflowPolicy::kReject);
    // Permuting the columns then encoding equals permuting set members
    // before encoding.
    PseClassSequence via_sets;
    for (int64_t t = 0; t < 10; ++t) {
      SpeakerSet s;
      s.capacity = 6;
      for (int col = 0; col < 6; ++col) {
        if (labels.active(t, col)) {
          s.members.push_back(perm[static_cast<size_t>(col)] + 1);
        }
      }
      std::sort(s.members.begin(), s.members.end());
      via_sets.push_back(table.class_of(encode_speaker_set(s)));
    }
    CHECK(direct == via_sets);
  }
}
