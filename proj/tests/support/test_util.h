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

#ifndef SEND_TESTS_SUPPORT_TEST_UTIL_H_
#define SEND_TESTS_SUPPORT_TEST_UTIL_H_

#include <random>

#include "send/pse.h"
#include "send/tensor.h"

namespace send::testing {

inline Tensor random_tensor(std::vector<int64_t> shape, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t.at(i) = gauss(rng);
  return t;
}

inline FrameLabels random_labels(int64_t frames, int speakers, int max_active,
                                 std::mt19937_64& rng) {
  FrameLabels labels(frames, speakers);
  std::uniform_int_distribution<int> count(0, max_active);
  for (int64_t t = 0; t < frames; ++t) {
    int active = count(rng);
    std::vector<int> cols(static_cast<size_t>(speakers));
    for (int s = 0; s < speakers; ++s) cols[static_cast<size_t>(s)] = s;
    std::shuffle(cols.begin(), cols.end(), rng);
    for (int a = 0; a < active; ++a) {
      labels.set(t, cols[static_cast<size_t>(a)], true);
    }
  }
  return labels;
}

}  // namespace send::testing

#endif  // SEND_TESTS_SUPPORT_TEST_UTIL_H_
