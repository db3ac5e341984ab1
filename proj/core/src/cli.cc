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

#include "send/cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "send/ablation.h"
#include "send/common.h"
#include "send/dataset_io.h"
#include "send/rttm.h"
#include "send/train.h"

namespace send {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string indexed_name(const char* stem, size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%06zu%s", stem, i, ext);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create output directory: " + dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_given = false;
};

int cmd_simulate(const SimulateArgs& a) {
  KeyValueFile kv = KeyValueFile::parse_file(a.config_path);
  if (a.seed_given) kv.set("seed", std::to_string(a.seed));
  SimConfig cfg = SimConfig::from_keyvalue(kv);
  Dataset dataset = simulate_dataset(cfg);
  ensure_dir(a.out_dir);
  write_dataset(a.out_dir, dataset);
  DatasetStats st = dataset.stats();
  std::cout << "simulated " << st.num_samples << " samples into " << a.out_dir
            << " (speech_frames=" << st.speech_frames
            << ", overlap_ratio=" << st.overlap_ratio()
            << ", max_simultaneous=" << st.max_simultaneous_seen << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config_path;
  std::string data_dir;
  std::string val_data_dir;
  double val_fraction = 0.2;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_given = false;
};

// Deterministic tail split when no explicit validation set is given.
void split_dataset(const Dataset& in, double val_fraction, Dataset* train,
                   Dataset* val) {
  size_t n = in.samples.size();
  size_t n_val = std::max<size_t>(1, static_cast<size_t>(
                                         static_cast<double>(n) * val_fraction));
  if (n_val >= n) {
    throw InvalidInput("train: dataset too small to split a validation set");
  }
  train->config = in.config;
  train->pool = in.pool;
  val->config = in.config;
  val->pool = in.pool;
  train->samples.assign(in.samples.begin(), in.samples.end() - n_val);
  val->samples.assign(in.samples.end() - n_val, in.samples.end());
}

int cmd_train(const TrainArgs& a) {
  KeyValueFile kv = KeyValueFile::parse_file(a.config_path);
  if (a.seed_given) kv.set("seed", std::to_string(a.seed));
  uint64_t seed = kv.get_uint("seed", 1);
  std::string model_kind = kv.get_string("model", "send");

  Dataset full = read_dataset(a.data_dir);
  Dataset train, val;
  if (!a.val_data_dir.empty()) {
    train = std::move(full);
    val = read_dataset(a.val_data_dir);
  } else {
    split_dataset(full, a.val_fraction, &train, &val);
  }

  ensure_dir(a.out_dir);
  TrainReport report;

  if (model_kind == "send") {
    SendConfig mc = SendConfig::from_keyvalue(kv);
    SendModel model(mc, seed);
    TrainConfig tc;
    tc.epochs = static_cast<int>(kv.get_int("epochs", 10));
    tc.adam.peak_lr = kv.get_double("peak_lr", tc.adam.peak_lr);
    tc.adam.warmup_steps =
        static_cast<int>(kv.get_int("warmup_steps", tc.adam.warmup_steps));
    tc.adam.beta1 = kv.get_double("beta1", tc.adam.beta1);
    tc.adam.beta2 = kv.get_double("beta2", tc.adam.beta2);
    tc.seed = seed;
    std::string overflow = kv.get_string("overflow", "reject");
    if (overflow == "reject") {
      tc.overflow = OverflowPolicy::kReject;
    } else if (overflow == "truncate") {
      tc.overflow = OverflowPolicy::kTruncate;
    } else {
      throw InvalidInput("train: overflow must be reject or truncate");
    }
    tc.val_threshold = kv.get_double("val_threshold", tc.val_threshold);
    report = train_send(model, train, val, tc);
    model.save((fs::path(a.out_dir) / "checkpoint").string());
    KeyValueFile echo = mc.to_keyvalue();
    echo.set("model", "send");
    echo.write_file((fs::path(a.out_dir) / "model.config").string());
  } else if (model_kind == "sendti") {
    SendTiConfig mc = SendTiConfig::from_keyvalue(kv);
    SendTiModel model(mc, seed);
    SendTiTrainConfig tc;
    tc.epochs = static_cast<int>(kv.get_int("epochs", 10));
    tc.adam.peak_lr = kv.get_double("peak_lr", tc.adam.peak_lr);
    tc.adam.warmup_steps =
        static_cast<int>(kv.get_int("warmup_steps", tc.adam.warmup_steps));
    tc.seed = seed;
    tc.train_text.sc_separators = kv.get_bool("sc_separators", true);
    tc.train_text.substitution_rate = kv.get_double("substitution_rate", 0.0);
    tc.val_text.sc_separators = tc.train_text.sc_separators;
    tc.val_text.substitution_rate =
        kv.get_double("val_substitution_rate", 0.0);
    if (kv.has("warm_start_checkpoint")) {
      model.load_speech_encoders(kv.get_string("warm_start_checkpoint"));
    }
    report = train_sendti(model, train, val, tc);
    model.save((fs::path(a.out_dir) / "checkpoint").string());
    KeyValueFile echo = mc.to_keyvalue();
    echo.set("model", "sendti");
    echo.set("sc_separators", tc.train_text.sc_separators ? "true" : "false");
    echo.write_file((fs::path(a.out_dir) / "model.config").string());
  } else {
    throw InvalidInput("train: model must be send or sendti, got '" +
                       model_kind + "'");
  }

  {
    KeyValueFile resolved = kv;
    resolved.set("seed", std::to_string(seed));
    resolved.write_file((fs::path(a.out_dir) / "train.config").string());
  }
  write_text(fs::path(a.out_dir) / "report.jsonl", report.to_jsonl());
  if (!report.epochs.empty()) {
    const EpochRecord& last = report.epochs.back();
    std::cout << "trained " << model_kind << " for " << last.epoch
              << " epochs; final mean_loss=" << last.mean_loss << " "
              << report.metric_name << "=" << last.val_metric << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// infer
// ---------------------------------------------------------------------------

struct InferArgs {
  std::string model_config;
  std::string checkpoint;
  std::string data_dir;
  std::string out_dir;
  double threshold = 0.5;
  bool threshold_given = false;
  double frame_shift = 0.01;
};

int cmd_infer(const InferArgs& a) {
  KeyValueFile kv = KeyValueFile::parse_file(a.model_config);
  std::string model_kind = kv.get_string("model", "send");
  Dataset data = read_dataset(a.data_dir);
  ensure_dir(a.out_dir);

  if (model_kind == "send") {
    SendConfig mc = SendConfig::from_keyvalue(kv);
    SendModel model(mc, /*seed=*/0);
    model.load(a.checkpoint);
    std::optional<double> threshold;
    if (mc.head == HeadType::kMultilabel) {
      threshold = a.threshold;
    } else if (a.threshold_given) {
      throw InvalidInput("infer: --threshold only applies to the multilabel head");
    }
    std::vector<std::string> slot_names;
    for (int s = 0; s < mc.capacity; ++s) {
      slot_names.push_back("spk" + std::to_string(s));
    }
    std::ostringstream all_rttm;
    for (size_t i = 0; i < data.samples.size(); ++i) {
      const MixtureSample& sample = data.samples[i];
      SpeakerBank bank = plain_bank(sample.enrollments, mc.capacity);
      DiarizationPosterior post = model.forward(sample.features, bank);
      FrameLabels hyp = decode_frames(post, model.table(), threshold);
      write_frame_labels(
          (fs::path(a.out_dir) / indexed_name("hyp", i, ".bin")).string(), hyp);
      std::vector<RttmSegment> segments = frame_labels_to_rttm(
          hyp, a.frame_shift, slot_names, indexed_name("sample", i, ""));
      all_rttm << rttm_emit(segments);
    }
    write_text(fs::path(a.out_dir) / "hyp.rttm", all_rttm.str());
    std::cout << "wrote hypotheses for " << data.samples.size()
              << " samples to " << a.out_dir << "\n";
  } else if (model_kind == "sendti") {
    SendTiConfig mc = SendTiConfig::from_keyvalue(kv);
    SendTiModel model(mc, /*seed=*/0);
    model.load(a.checkpoint);
    TextOptions text;
    text.sc_separators = kv.get_bool("sc_separators", true);
    std::ostringstream hyp_words, ref_words;
    std::mt19937_64 unused_rng(0);
    for (size_t i = 0; i < data.samples.size(); ++i) {
      const MixtureSample& sample = data.samples[i];
      SpeakerBank bank = plain_bank(sample.enrollments, mc.capacity);
      PreparedTokens prep = prepare_tokens(sample, bank, mc.none_class(),
                                           mc.vocab_size, text, unused_rng);
      WordPosterior post = model.forward(sample.features, bank, prep.tokens);
      std::vector<int> words = decode_words(post, prep.tokens);
      for (size_t w = 0; w < words.size(); ++w) {
        hyp_words << words[w] << (w + 1 < words.size() ? ' ' : '\n');
        ref_words << prep.word_slots[w]
                  << (w + 1 < words.size() ? ' ' : '\n');
      }
    }
    write_text(fs::path(a.out_dir) / "hyp_words.txt", hyp_words.str());
    write_text(fs::path(a.out_dir) / "ref_words.txt", ref_words.str());
    std::cout << "wrote word attributions for " << data.samples.size()
              << " samples to " << a.out_dir << "\n";
  } else {
    throw InvalidInput("infer: model must be send or sendti");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

struct ScoreArgs {
  std::string ref_data;
  std::string hyp_dir;
  std::string ref_rttm;
  std::string hyp_rttm;
  std::string ref_words;
  std::string hyp_words;
  std::string mode = "full";
  std::string out_dir;
  double frame_shift = 0.01;
  bool hungarian = false;
};

void emit_score_outputs(const ScoreArgs& a, const std::string& text,
                        const json& record) {
  std::cout << text << "\n";
  if (!a.out_dir.empty()) {
    ensure_dir(a.out_dir);
    write_text(fs::path(a.out_dir) / "report.txt", text + "\n");
    write_text(fs::path(a.out_dir) / "record.jsonl", record.dump() + "\n");
  }
}

std::vector<int> read_word_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open word file: " + path);
  std::vector<int> out;
  int v;
  while (in >> v) out.push_back(v);
  return out;
}

int cmd_score(const ScoreArgs& a) {
  DerMode mode = der_mode_from_string(a.mode);

  if (!a.ref_words.empty() || !a.hyp_words.empty()) {
    if (a.ref_words.empty() || a.hyp_words.empty()) {
      throw InvalidInput("score: word scoring needs --ref-words and --hyp-words");
    }
    std::vector<int> ref = read_word_file(a.ref_words);
    std::vector<int> hyp = read_word_file(a.hyp_words);
    WderReport report = compute_wder(ref, hyp);
    json record = {{"kind", "wder"},
                   {"wder", report.wder},
                   {"wrong_words", report.wrong_words},
                   {"total_words", report.total_words}};
    emit_score_outputs(a, report.to_text(), record);
    return 0;
  }

  DerReport report;
  if (!a.ref_rttm.empty() || !a.hyp_rttm.empty()) {
    if (a.ref_rttm.empty() || a.hyp_rttm.empty()) {
      throw InvalidInput("score: RTTM scoring needs --ref-rttm and --hyp-rttm");
    }
    std::vector<RttmSegment> ref_segs = rttm_parse_file(a.ref_rttm);
    std::vector<RttmSegment> hyp_segs = rttm_parse_file(a.hyp_rttm);
    std::set<std::string> names;
    for (const RttmSegment& s : ref_segs) names.insert(s.speaker_id);
    for (const RttmSegment& s : hyp_segs) names.insert(s.speaker_id);
    std::vector<std::string> order(names.begin(), names.end());
    FrameLabels ref = rttm_to_frame_labels(ref_segs, a.frame_shift, order);
    FrameLabels hyp = rttm_to_frame_labels(hyp_segs, a.frame_shift, order);
    // Pad the shorter matrix with silence so frame counts agree.
    int64_t frames = std::max(ref.num_frames(), hyp.num_frames());
    auto pad = [&](const FrameLabels& in) {
      FrameLabels out(frames, in.num_speakers());
      for (int64_t t = 0; t < in.num_frames(); ++t) {
        for (int s = 0; s < in.num_speakers(); ++s) {
          out.set(t, s, in.active(t, s));
        }
      }
      return out;
    };
    FrameLabels ref_p = pad(ref), hyp_p = pad(hyp);
    report = a.hungarian ? compute_der_best_mapping(ref_p, hyp_p, mode)
                         : compute_der(ref_p, hyp_p, mode);
  } else {
    if (a.ref_data.empty() || a.hyp_dir.empty()) {
      throw InvalidInput(
          "score: frame scoring needs --ref-data and --hyp-dir (or RTTM/word "
          "inputs)");
    }
    Dataset data = read_dataset(a.ref_data);
    DerAccumulator acc;
    for (size_t i = 0; i < data.samples.size(); ++i) {
      FrameLabels hyp = read_frame_labels(
          (fs::path(a.hyp_dir) / indexed_name("hyp", i, ".bin")).string());
      const MixtureSample& sample = data.samples[i];
      SpeakerBank bank =
          plain_bank(sample.enrollments, hyp.num_speakers());
      FrameLabels ref = slot_labels(sample, bank, hyp.num_speakers());
      if (a.hungarian) hyp = remap_best_speaker_mapping(ref, hyp);
      acc.add(ref, hyp, mode);
    }
    report = acc.report(mode);
  }
  json record = {{"kind", "der"},
                 {"mode", to_string(report.mode)},
                 {"der", report.der},
                 {"miss", report.miss},
                 {"false_alarm", report.false_alarm},
                 {"confusion", report.confusion},
                 {"scored_frames", report.scored_frames},
                 {"ref_speaker_frames", report.ref_speaker_frames}};
  emit_score_outputs(a, report.to_text(), record);
  return 0;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

struct AblateArgs {
  std::string recipe;
  AblationOptions options;
};

int cmd_ablate(const AblateArgs& a) {
  AblationResult result = run_ablation(a.recipe, a.options);
  std::cout << result.table_text;
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"speaker-embedding-aware neural diarization toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "generate a seeded synthetic mixture dataset");
  simulate->add_option("--config", sim.config_path, "sim config (key = value)")
      ->required();
  simulate->add_option("--out", sim.out_dir, "output dataset directory")
      ->required();
  CLI::Option* sim_seed_opt =
      simulate->add_option("--seed", sim.seed, "override the config seed");

  TrainArgs tr;
  CLI::App* train = app.add_subcommand("train", "train a model on a dataset");
  train->add_option("--config", tr.config_path, "model + training config")
      ->required();
  train->add_option("--data", tr.data_dir, "training dataset directory")
      ->required();
  train->add_option("--val-data", tr.val_data_dir,
                    "validation dataset directory (default: tail split)");
  train->add_option("--val-fraction", tr.val_fraction,
                    "fraction held out when --val-data is absent");
  train->add_option("--out", tr.out_dir, "output directory")->required();
  CLI::Option* train_seed_opt =
      train->add_option("--seed", tr.seed, "override the config seed");

  InferArgs inf;
  CLI::App* infer =
      app.add_subcommand("infer", "run a checkpoint over a dataset");
  infer->add_option("--model-config", inf.model_config,
                    "model.config written by train")
      ->required();
  infer->add_option("--checkpoint", inf.checkpoint, "checkpoint path")
      ->required();
  infer->add_option("--data", inf.data_dir, "dataset directory")->required();
  infer->add_option("--out", inf.out_dir, "output directory")->required();
  CLI::Option* infer_threshold_opt = infer->add_option(
      "--threshold", inf.threshold, "multilabel activation threshold");
  infer->add_option("--frame-shift", inf.frame_shift,
                    "seconds per frame for RTTM output");

  ScoreArgs sc;
  CLI::App* score =
      app.add_subcommand("score", "score hypotheses against a reference");
  score->add_option("--ref-data", sc.ref_data, "reference dataset directory");
  score->add_option("--hyp-dir", sc.hyp_dir, "hypothesis directory from infer");
  score->add_option("--ref-rttm", sc.ref_rttm, "reference RTTM file");
  score->add_option("--hyp-rttm", sc.hyp_rttm, "hypothesis RTTM file");
  score->add_option("--ref-words", sc.ref_words, "reference word speakers");
  score->add_option("--hyp-words", sc.hyp_words, "hypothesis word speakers");
  score->add_option("--mode", sc.mode, "full or ignore (overlap)");
  score->add_option("--frame-shift", sc.frame_shift, "seconds per frame");
  score->add_flag("--hungarian", sc.hungarian,
                  "best speaker mapping for external hypotheses");
  score->add_option("--out", sc.out_dir, "directory for report files");

  AblateArgs ab;
  CLI::App* ablate =
      app.add_subcommand("ablate", "run a comparison recipe end to end");
  ablate
      ->add_option("--recipe", ab.recipe,
                   "metrics | postnet_pse | sendti_sc")
      ->required();
  ablate->add_option("--out", ab.options.out_dir, "output directory");
  ablate->add_option("--seed", ab.options.seed, "root seed");
  ablate->add_option("--seeds", ab.options.num_seeds, "seeds to average over");
  ablate->add_option("--train-samples", ab.options.train_samples,
                     "training mixtures per seed");
  ablate->add_option("--val-samples", ab.options.val_samples,
                     "validation mixtures per seed");
  ablate->add_option("--epochs", ab.options.epochs, "training epochs");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  sim.seed_given = sim_seed_opt->count() > 0;
  tr.seed_given = train_seed_opt->count() > 0;
  inf.threshold_given = infer_threshold_opt->count() > 0;

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (train->parsed()) return cmd_train(tr);
    if (infer->parsed()) return cmd_infer(inf);
    if (score->parsed()) return cmd_score(sc);
    if (ablate->parsed()) return cmd_ablate(ab);
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace send
