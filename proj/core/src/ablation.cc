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

#include "send/ablation.h"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "send/common.h"
#include "send/train.h"

namespace send {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Desk-scale model shared by the recipes; widths stay small so a full
// recipe (configs x seeds) finishes in minutes on one core.
SendConfig ablation_send_config(const SimConfig& sim, HeadType head,
                                PostNetKind post_net, SimilarityMetric metric) {
  SendConfig mc;
  mc.feature_dim = sim.feature_dim;
  mc.embedding_dim = sim.embedding_dim;
  mc.encoding_dim = 16;
  mc.capacity = 4;
  mc.max_overlap = 2;
  mc.metric = metric;
  mc.head = head;
  mc.post_net = post_net;
  mc.speech_encoder = {/*num_blocks=*/1, /*hidden_units=*/24,
                       /*filter_size=*/5, /*projection_dim=*/16};
  mc.speaker_encoder_hidden = {16};
  mc.postnet_fsmn = {/*num_blocks=*/1, /*hidden_units=*/4, /*filter_size=*/5,
                     /*projection_dim=*/4};
  mc.postnet_fcn_hidden = {16};
  mc.validate();
  return mc;
}

SendTiConfig ablation_sendti_config(const SimConfig& sim) {
  SendTiConfig mc;
  mc.feature_dim = sim.feature_dim;
  mc.embedding_dim = sim.embedding_dim;
  mc.encoding_dim = 16;
  mc.capacity = 4;
  mc.vocab_size = sim.vocab_size;
  mc.speech_encoder = {1, 24, 5, 16};
  mc.speaker_encoder_hidden = {16};
  mc.text_encoder = {/*model_dim=*/16, /*num_heads=*/2, /*num_blocks=*/1,
                     /*positional_encoding=*/true};
  mc.postnet_fsmn = {1, 4, 5, 4};
  mc.postnet_fcn_hidden = {16};
  mc.validate();
  return mc;
}

TrainConfig ablation_train_config(uint64_t seed, int epochs) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.adam.peak_lr = 5e-3;
  tc.adam.warmup_steps = 100;
  tc.seed = seed;
  return tc;
}

struct SeededData {
  Dataset train;
  Dataset val;
};

SeededData make_data(const AblationOptions& opt, uint64_t seed_index) {
  SimConfig train_cfg = ablation_sim_config(
      derive_seed(opt.seed, "ablate-train", seed_index), opt.train_samples);
  SimConfig val_cfg = ablation_sim_config(
      derive_seed(opt.seed, "ablate-val", seed_index), opt.val_samples);
  SeededData d;
  d.train = simulate_dataset(train_cfg);
  // Validation draws fresh mixtures over the training speaker inventory.
  d.val.config = val_cfg;
  d.val.pool = d.train.pool;
  for (int i = 0; i < val_cfg.num_samples; ++i) {
    std::mt19937_64 rng =
        make_rng(val_cfg.seed, "sample", static_cast<uint64_t>(i));
    d.val.samples.push_back(simulate_mixture(val_cfg, d.val.pool, rng));
  }
  return d;
}

constexpr double kThresholdGrid[] = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};

std::string format_table(const std::string& recipe,
                         const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "recipe: " << recipe << "\n";
  os << std::left << std::setw(28) << "configuration";
  if (!rows.empty()) {
    for (const auto& [k, v] : rows[0].values) {
      os << std::right << std::setw(14) << k;
    }
  }
  os << "\n";
  for (const AblationRow& row : rows) {
    os << std::left << std::setw(28) << row.label;
    for (const auto& [k, v] : row.values) {
      os << std::right << std::setw(14) << std::fixed << std::setprecision(4)
         << v;
    }
    os << "\n";
  }
  return os.str();
}

void write_outputs(const AblationOptions& opt, const AblationResult& result) {
  if (opt.out_dir.empty()) return;
  std::error_code ec;
  fs::create_directories(opt.out_dir, ec);
  if (ec) throw InvalidInput("cannot create output directory: " + opt.out_dir);
  {
    std::ofstream table(fs::path(opt.out_dir) / "table.txt", std::ios::trunc);
    table << result.table_text;
  }
  {
    std::ofstream records(fs::path(opt.out_dir) / "records.jsonl",
                          std::ios::trunc);
    for (const AblationRow& row : result.rows) {
      json rec;
      rec["recipe"] = result.recipe;
      rec["label"] = row.label;
      for (const auto& [k, v] : row.values) rec[k] = v;
      for (const auto& [k, v] : row.info) rec[k] = v;
      records << rec.dump() << "\n";
    }
  }
  {
    std::ofstream echo(fs::path(opt.out_dir) / "options.txt", std::ios::trunc);
    echo << "recipe = " << result.recipe << "\n"
         << "seed = " << opt.seed << "\n"
         << "num_seeds = " << opt.num_seeds << "\n"
         << "train_samples = " << opt.train_samples << "\n"
         << "val_samples = " << opt.val_samples << "\n"
         << "epochs = " << opt.epochs << "\n";
  }
}

AblationResult run_metrics_recipe(const AblationOptions& opt) {
  AblationResult result;
  result.recipe = "metrics";
  const SimilarityMetric metrics[] = {SimilarityMetric::kCosine,
                                      SimilarityMetric::kDot,
                                      SimilarityMetric::kSigmaDot};
  for (SimilarityMetric metric : metrics) {
    double der_full = 0.0, der_ignore = 0.0;
    for (int s = 0; s < opt.num_seeds; ++s) {
      SeededData data = make_data(opt, static_cast<uint64_t>(s));
      SendConfig mc = ablation_send_config(data.train.config, HeadType::kPse,
                                           PostNetKind::kFsmnFcn, metric);
      SendModel model(mc, derive_seed(opt.seed, "model", s));
      TrainConfig tc = ablation_train_config(
          derive_seed(opt.seed, "train", s), opt.epochs);
      train_send(model, data.train, data.val, tc);
      der_full +=
          evaluate_send(model, data.val, std::nullopt, DerMode::kFull).der;
      der_ignore +=
          evaluate_send(model, data.val, std::nullopt, DerMode::kIgnoreOverlap)
              .der;
    }
    AblationRow row;
    row.label = to_string(metric);
    row.values["der_full"] = der_full / opt.num_seeds;
    row.values["der_ignore"] = der_ignore / opt.num_seeds;
    row.info["head"] = "pse";
    row.info["post_net"] = "fsmn_fcn";
    result.rows.push_back(std::move(row));
  }
  result.table_text = format_table(result.recipe, result.rows);
  return result;
}

AblationResult run_postnet_pse_recipe(const AblationOptions& opt) {
  AblationResult result;
  result.recipe = "postnet_pse";
  struct Variant {
    HeadType head;
    PostNetKind post_net;
  };
  const Variant variants[] = {
      {HeadType::kMultilabel, PostNetKind::kNone},
      {HeadType::kMultilabel, PostNetKind::kFcn},
      {HeadType::kMultilabel, PostNetKind::kFsmnFcn},
      {HeadType::kPse, PostNetKind::kFcn},
      {HeadType::kPse, PostNetKind::kFsmnFcn},
  };
  for (const Variant& v : variants) {
    double der_full = 0.0, der_ignore = 0.0, thr_sum = 0.0;
    for (int s = 0; s < opt.num_seeds; ++s) {
      SeededData data = make_data(opt, static_cast<uint64_t>(s));
      SendConfig mc =
          ablation_send_config(data.train.config, v.head, v.post_net,
                               SimilarityMetric::kSigmaDot);
      SendModel model(mc, derive_seed(opt.seed, "model", s));
      TrainConfig tc = ablation_train_config(
          derive_seed(opt.seed, "train", s), opt.epochs);
      train_send(model, data.train, data.val, tc);
      if (v.head == HeadType::kMultilabel) {
        ThresholdSweep sweep =
            best_threshold(model, data.val, kThresholdGrid, DerMode::kFull);
        der_full += sweep.report.der;
        der_ignore += evaluate_send(model, data.val, sweep.threshold,
                                    DerMode::kIgnoreOverlap)
                          .der;
        thr_sum += sweep.threshold;
      } else {
        der_full +=
            evaluate_send(model, data.val, std::nullopt, DerMode::kFull).der;
        der_ignore += evaluate_send(model, data.val, std::nullopt,
                                    DerMode::kIgnoreOverlap)
                          .der;
      }
    }
    AblationRow row;
    row.label = std::string("post_net=") + to_string(v.post_net) +
                " head=" + to_string(v.head);
    row.values["der_full"] = der_full / opt.num_seeds;
    row.values["der_ignore"] = der_ignore / opt.num_seeds;
    if (v.head == HeadType::kMultilabel) {
      row.values["mean_best_threshold"] = thr_sum / opt.num_seeds;
    }
    row.info["head"] = to_string(v.head);
    row.info["post_net"] = to_string(v.post_net);
    result.rows.push_back(std::move(row));
  }
  result.table_text = format_table(result.recipe, result.rows);
  return result;
}

AblationResult run_sendti_sc_recipe(const AblationOptions& opt) {
  AblationResult result;
  result.recipe = "sendti_sc";
  for (bool sc : {false, true}) {
    double wder_sum = 0.0;
    for (int s = 0; s < opt.num_seeds; ++s) {
      SeededData data = make_data(opt, static_cast<uint64_t>(s));
      SendTiConfig mc = ablation_sendti_config(data.train.config);
      SendTiModel model(mc, derive_seed(opt.seed, "model-ti", s));
      SendTiTrainConfig tc;
      tc.epochs = opt.epochs;
      tc.adam.peak_lr = 3e-3;
      tc.adam.warmup_steps = 100;
      tc.seed = derive_seed(opt.seed, "train-ti", s);
      tc.train_text.sc_separators = sc;
      tc.val_text.sc_separators = sc;
      train_sendti(model, data.train, data.val, tc);
      wder_sum +=
          evaluate_sendti(model, data.val, tc.val_text, tc.seed).wder;
    }
    AblationRow row;
    row.label = sc ? "sc=yes" : "sc=no";
    row.values["wder"] = wder_sum / opt.num_seeds;
    row.info["sc_separators"] = sc ? "true" : "false";
    result.rows.push_back(std::move(row));
  }
  result.table_text = format_table(result.recipe, result.rows);
  return result;
}

}  // namespace

SimConfig ablation_sim_config(uint64_t seed, int num_samples) {
  SimConfig sim;
  sim.num_samples = num_samples;
  sim.min_speakers = 2;
  sim.max_speakers = 3;
  sim.num_pool_speakers = 6;
  sim.max_simultaneous = 2;
  sim.min_turns = 4;
  sim.max_turns = 8;
  sim.min_turn_frames = 15;
  sim.max_turn_frames = 40;
  sim.min_pause_frames = 1;
  sim.max_pause_frames = 10;
  sim.overlap_ratio = 0.40;
  sim.feature_dim = 12;
  sim.feature_noise = 0.45;
  sim.embedding_dim = 12;
  sim.speaker_separation = 3.0;
  sim.enrollment_noise = 0.05;
  sim.transcripts = true;
  sim.min_word_frames = 3;
  sim.max_word_frames = 7;
  sim.vocab_size = 30;
  sim.seed = seed;
  return sim;
}

AblationResult run_ablation(const std::string& recipe,
                            const AblationOptions& options) {
  if (options.num_seeds < 1) {
    throw InvalidInput("ablation: num_seeds must be >= 1");
  }
  AblationResult result;
  if (recipe == "metrics") {
    result = run_metrics_recipe(options);
  } else if (recipe == "postnet_pse") {
    result = run_postnet_pse_recipe(options);
  } else if (recipe == "sendti_sc") {
    result = run_sendti_sc_recipe(options);
  } else {
    throw InvalidInput("unknown ablation recipe '" + recipe +
                       "' (expected metrics, postnet_pse or sendti_sc)");
  }
  write_outputs(options, result);
  return result;
}

}  // namespace send
