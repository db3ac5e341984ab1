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

#ifndef SEND_ABLATION_H_
#define SEND_ABLATION_H_

#include <map>
#include <string>
#include <vector>

#include "send/corpus.h"

namespace send {

// Desk-scale comparison recipes, each training the relevant model variants
// on the same seeded data and reporting mean metrics over `num_seeds` seeds:
//   metrics      one row per similarity metric (cosine, dot, sigma_dot)
//   postnet_pse  post-net {none, fcn, fsmn_fcn} x head {multilabel, pse}
//                (pse requires a post-net, so 5 rows); multilabel rows are
//                scored at their best threshold from a sweep
//   sendti_sc    word-level model with and without SC separators (wDER)
struct AblationOptions {
  uint64_t seed = 11;
  int num_seeds = 5;
  int train_samples = 48;
  int val_samples = 16;
  int epochs = 8;
  std::string out_dir;  // when set: table.txt, records.jsonl, options echo
};

struct AblationRow {
  std::string label;
  // Mean over seeds; key "metric" is DER or wDER depending on the recipe.
  std::map<std::string, double> values;
  std::map<std::string, std::string> info;
};

struct AblationResult {
  std::string recipe;
  std::vector<AblationRow> rows;
  std::string table_text;
};

AblationResult run_ablation(const std::string& recipe,
                            const AblationOptions& options);

// The seeded desk-scale data/model settings the recipes train with; exposed
// so the acceptance suite runs the same task.
SimConfig ablation_sim_config(uint64_t seed, int num_samples);

}  // namespace send

#endif  // SEND_ABLATION_H_
