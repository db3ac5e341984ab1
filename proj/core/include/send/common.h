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

#ifndef SEND_COMMON_H_
#define SEND_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace send {

// Raised for malformed user input (bad config, bad file, bad argument).
// The CLI maps this to exit code 2; everything else maps to 1.
class InvalidInput : public std::runtime_error {
 public:
  explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

// All randomness in a run flows from one root seed; sub-streams are derived
// by hashing (root, label, index) so results are attributable to the config.
uint64_t derive_seed(uint64_t root, std::string_view label, uint64_t index = 0);

inline std::mt19937_64 make_rng(uint64_t root, std::string_view label,
                                uint64_t index = 0) {
  return std::mt19937_64(derive_seed(root, label, index));
}

inline uint64_t derive_seed(uint64_t root, std::string_view label,
                            uint64_t index, uint64_t index2) {
  return derive_seed(derive_seed(root, label, index), label, index2);
}

}  // namespace send

#endif  // SEND_COMMON_H_
