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

#ifndef SEND_CHECKPOINT_H_
#define SEND_CHECKPOINT_H_

#include <span>
#include <string>

#include "send/autodiff.h"

namespace send {

// Parameter checkpoint on disk:
//   <path>           raw little-endian 64-bit floats, arrays back to back
//   <path>.manifest  one line per array: "<name> <d0>[x<d1>...] <byte-offset>"
// Manifest order equals file order. Names must be unique.
void save_checkpoint(const std::string& path,
                     std::span<Parameter* const> params);

// Loads arrays by name into the given parameters; every parameter must be
// present with a matching shape. Extra arrays in the file are ignored.
void load_checkpoint(const std::string& path, std::span<Parameter*> params);

}  // namespace send

#endif  // SEND_CHECKPOINT_H_
