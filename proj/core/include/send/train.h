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

#ifndef SEND_TRAIN_H_
#define SEND_TRAIN_H_

#include <optional>
#include <string>
#include <vector>

#include "send/dataset_io.h"
#include "send/scoring.h"
#include "send/send_model.h"
#include "send/sendti.h"

namespace send {

// Adam with a warmup-then-inverse-sqrt-decay schedule:
//   lr(t) = peak_lr * min(t / warmup, sqrt(warmup / t)).
struct AdamConfig {
  double peak_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-8;
  int warmup_steps = 200;
};

class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Parameter*> params, const AdamConfig& cfg);
  // Applies one update from the accumulated gradients, then zeroes them.
  void step();
  double current_lr() const;
  int64_t steps_taken() const { return steps_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig cfg_;
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
  int64_t steps_ = 0;
};

struct TrainConfig {
  int epochs = 20;
  AdamConfig adam;
  uint64_t seed = 1;
  OverflowPolicy overflow = OverflowPolicy::kReject;
  double val_threshold = 0.5;  // multilabel decode threshold for validation
  DerMode val_mode = DerMode::kFull;
  // Re-draw each sample's bank (slot order, negatives, zeros) every visit.
  // Off: deterministic positives-then-zeros banks, useful for overfit checks.
  bool bank_augmentation = true;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double val_metric = 0.0;  // DER for send, wDER for sendti
};

struct TrainReport {
  uint64_t seed = 0;
  std::string metric_name;  // "val_der" or "val_wder"
  std::vector<EpochRecord> epochs;
  // One JSON record per epoch, deterministic field order.
  std::string to_jsonl() const;
};

// Reference labels permuted into the bank's slot order: the column of
// positive slot p carries the activity of the sample speaker mapped there;
// negative and zero slots stay silent.
FrameLabels slot_labels(const MixtureSample& sample, const SpeakerBank& bank,
                        int capacity);

// Per-epoch pass over the training set (one mixture per step, bank
// re-augmented every visit), validation DER after each epoch. Throws when
// the loss stops being finite.
TrainReport train_send(SendModel& model, const Dataset& train,
                       const Dataset& val, const TrainConfig& cfg);

// Corpus-wide DER of a model over a dataset with deterministic banks
// (positives in sample order, zero padding, no augmentation).
DerReport evaluate_send(SendModel& model, const Dataset& data,
                        std::optional<double> threshold, DerMode mode);

// Sweeps candidate thresholds for the multilabel head, returns the best.
struct ThresholdSweep {
  double threshold = 0.5;
  DerReport report;
};
ThresholdSweep best_threshold(SendModel& model, const Dataset& data,
                              std::span<const double> candidates, DerMode mode);

// Text view of a dataset: whether SC separators are inserted and how much
// substitution noise corrupts the content words (the recognition-text
// stand-in; 0 = ground-truth text).
struct TextOptions {
  bool sc_separators = true;
  double substitution_rate = 0.0;
};

struct SendTiTrainConfig {
  int epochs = 20;
  AdamConfig adam;
  uint64_t seed = 1;
  TextOptions train_text;
  TextOptions val_text;
};

struct PreparedTokens {
  TokenSequence tokens;
  std::vector<int64_t> targets;  // one per token; separators -> none class
  std::vector<int> word_slots;   // reference slot per content word
};

PreparedTokens prepare_tokens(const MixtureSample& sample,
                              const SpeakerBank& bank, int none_class,
                              int vocab_size, const TextOptions& text,
                              std::mt19937_64& noise_rng);

TrainReport train_sendti(SendTiModel& model, const Dataset& train,
                         const Dataset& val, const SendTiTrainConfig& cfg);

WderReport evaluate_sendti(SendTiModel& model, const Dataset& data,
                           const TextOptions& text, uint64_t noise_seed);

// Speaker-identification accuracy over content words: the argmax is taken
// over the bank's positive slots (which of the present speakers said this
// word), so chance level is 1/num_speakers on a balanced task.
double evaluate_sendti_accuracy(SendTiModel& model, const Dataset& data,
                                const TextOptions& text, uint64_t noise_seed);

}  // namespace send

#endif  // SEND_TRAIN_H_
