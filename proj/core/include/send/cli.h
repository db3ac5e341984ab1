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

#ifndef SEND_CLI_H_
#define SEND_CLI_H_

#include <string>
#include <vector>

namespace send {

// Batch entry point behind the send-diar binary. Subcommands: simulate,
// train, infer, score, ablate. Exit codes: 0 success, 1 runtime failure,
// 2 invalid input.
int run_cli(const std::vector<std::string>& args);

}  // namespace send

#endif  // SEND_CLI_H_
