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

#include "send/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "send/common.h"

namespace send {

namespace {

// Negative pool for one sample: mean embeddings of pool speakers absent
// from the mixture.
std::vector<std::vector<double>> absent_speaker_means(
    const SpeakerPool& pool, const std::vector<int32_t>& present) {
  std::vector<std::vector<double>> out;
  for (int64_t s = 0; s < pool.means.dim(0); ++s) {
    if (std::find(present.begin(), present.end(), static_cast<int32_t>(s)) !=
        present.end()) {
      continue;
    }
    std::span<const double> row = pool.means.row(s);
    out.emplace_back(row.begin(), row.end());
  }
  return out;
}

void check_finite_loss(double loss, int epoch, size_t step) {
  if (!std::isfinite(loss)) {
    std::ostringstream os;
    os << "training diverged: loss " << loss << " at epoch " << epoch
       << ", step " << step << "; lower the learning rate or check the data";
    throw std::runtime_error(os.str());
  }
}

}  // namespace

AdamOptimizer::AdamOptimizer(std::vector<Parameter*> params,
                             const AdamConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (cfg_.warmup_steps < 1) {
    throw InvalidInput("adam warmup_steps must be >= 1");
  }
  first_moment_.reserve(params_.size());
  second_moment_.reserve(params_.size());
  for (Parameter* p : params_) {
    first_moment_.emplace_back(p->value.shape());
    second_moment_.emplace_back(p->value.shape());
  }
}

double AdamOptimizer::current_lr() const {
  double t = static_cast<double>(std::max<int64_t>(steps_, 1));
  double w = static_cast<double>(cfg_.warmup_steps);
  return cfg_.peak_lr * std::min(t / w, std::sqrt(w / t));
}

void AdamOptimizer::step() {
  ++steps_;
  double lr = current_lr();
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Parameter* p = params_[i];
    Tensor& m = first_moment_[i];
    Tensor& v = second_moment_[i];
    for (int64_t j = 0; j < p->value.size(); ++j) {
      double g = p->grad.at(j);
      m.at(j) = cfg_.beta1 * m.at(j) + (1.0 - cfg_.beta1) * g;
      v.at(j) = cfg_.beta2 * v.at(j) + (1.0 - cfg_.beta2) * g * g;
      double m_hat = m.at(j) / bc1;
      double v_hat = v.at(j) / bc2;
      p->value.at(j) -= lr * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    }
    p->zero_grad();
  }
}

std::string TrainReport::to_jsonl() const {
  std::ostringstream os;
  os.precision(10);
  for (const EpochRecord& e : epochs) {
    os << "{\"epoch\":" << e.epoch << ",\"mean_loss\":" << e.mean_loss << ",\""
       << metric_name << "\":" << e.val_metric << ",\"seed\":" << seed
       << "}\n";
  }
  return os.str();
}

FrameLabels slot_labels(const MixtureSample& sample, const SpeakerBank& bank,
                        int capacity) {
  if (static_cast<int>(bank.positive_slots.size()) !=
      sample.labels.num_speakers()) {
    throw InvalidInput("slot_labels: bank positives do not match sample");
  }
  FrameLabels out(sample.labels.num_frames(), capacity);
  for (int64_t t = 0; t < sample.labels.num_frames(); ++t) {
    for (int s = 0; s < sample.labels.num_speakers(); ++s) {
      if (sample.labels.active(t, s)) {
        out.set(t, bank.positive_slots[static_cast<size_t>(s)], true);
      }
    }
  }
  return out;
}

TrainReport train_send(SendModel& model, const Dataset& train,
                       const Dataset& val, const TrainConfig& cfg) {
  if (train.samples.empty()) {
    throw InvalidInput("train_send: empty training set");
  }
  const SendConfig& mc = model.config();
  std::vector<Parameter*> params = model.parameters();
  for (Parameter* p : params) p->zero_grad();
  AdamOptimizer opt(params, cfg.adam);

  TrainReport report;
  report.seed = cfg.seed;
  report.metric_name = "val_der";

  size_t n = train.samples.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::mt19937_64 order_rng =
        make_rng(cfg.seed, "epoch-order", static_cast<uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), order_rng);
    double loss_sum = 0.0;
    for (size_t step = 0; step < n; ++step) {
      const MixtureSample& sample = train.samples[order[step]];
      std::mt19937_64 bank_rng = make_rng(
          cfg.seed, "bank",
          static_cast<uint64_t>(epoch) * n + static_cast<uint64_t>(step));
      SpeakerBank bank =
          cfg.bank_augmentation
              ? augment_bank(sample.enrollments,
                             absent_speaker_means(train.pool,
                                                  sample.speaker_ids),
                             mc.capacity, bank_rng)
              : plain_bank(sample.enrollments, mc.capacity);
      FrameLabels targets = slot_labels(sample, bank, mc.capacity);
      Tape tape;
      double loss;
      if (mc.head == HeadType::kPse) {
        PseClassSequence classes =
            labels_to_classes(targets, model.table(), cfg.overflow);
        loss = tape.backward(
            model.loss_graph(tape, sample.features, bank, classes));
      } else {
        loss =
            tape.backward(model.loss_graph(tape, sample.features, bank, targets));
      }
      check_finite_loss(loss, epoch, step);
      loss_sum += loss;
      opt.step();
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = loss_sum / static_cast<double>(n);
    std::optional<double> thr;
    if (mc.head == HeadType::kMultilabel) thr = cfg.val_threshold;
    rec.val_metric = evaluate_send(model, val, thr, cfg.val_mode).der;
    report.epochs.push_back(rec);
  }
  return report;
}

DerReport evaluate_send(SendModel& model, const Dataset& data,
                        std::optional<double> threshold, DerMode mode) {
  if (data.samples.empty()) {
    throw InvalidInput("evaluate_send: empty dataset");
  }
  const SendConfig& mc = model.config();
  DerAccumulator acc;
  for (const MixtureSample& sample : data.samples) {
    SpeakerBank bank = plain_bank(sample.enrollments, mc.capacity);
    DiarizationPosterior post = model.forward(sample.features, bank);
    FrameLabels hyp = decode_frames(post, model.table(), threshold);
    FrameLabels ref = slot_labels(sample, bank, mc.capacity);
    acc.add(ref, hyp, mode);
  }
  return acc.report(mode);
}

ThresholdSweep best_threshold(SendModel& model, const Dataset& data,
                              std::span<const double> candidates,
                              DerMode mode) {
  if (candidates.empty()) {
    throw InvalidInput("best_threshold: no candidate thresholds");
  }
  ThresholdSweep best;
  bool first = true;
  for (double t : candidates) {
    DerReport r = evaluate_send(model, data, t, mode);
    if (first || r.der < best.report.der) {
      best.threshold = t;
      best.report = r;
      first = false;
    }
  }
  return best;
}

PreparedTokens prepare_tokens(const MixtureSample& sample,
                              const SpeakerBank& bank, int none_class,
                              int vocab_size, const TextOptions& text,
                              std::mt19937_64& noise_rng) {
  if (sample.words.empty()) {
    throw InvalidInput(
        "prepare_tokens: sample has no transcript (simulate with "
        "transcripts = true)");
  }
  std::vector<int64_t> words;
  std::vector<int32_t> speakers;
  words.reserve(sample.words.size());
  speakers.reserve(sample.words.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int64_t> pick(1, vocab_size);
  for (const WordSpan& w : sample.words) {
    int64_t id = w.vocab_id;
    if (text.substitution_rate > 0.0 && unit(noise_rng) < text.substitution_rate) {
      id = pick(noise_rng);
    }
    words.push_back(id);
    speakers.push_back(w.speaker);
  }
  TokenSequence seq = text.sc_separators
                          ? insert_sc_separators(words, speakers)
                          : tokens_without_separators(words);
  PreparedTokens out;
  out.tokens = std::move(seq);
  size_t word_idx = 0;
  for (int64_t i = 0; i < out.tokens.length(); ++i) {
    if (out.tokens.is_separator(i)) {
      out.targets.push_back(none_class);
      continue;
    }
    int slot = bank.positive_slots[static_cast<size_t>(
        speakers[word_idx])];
    out.targets.push_back(slot);
    out.word_slots.push_back(slot);
    ++word_idx;
  }
  return out;
}

TrainReport train_sendti(SendTiModel& model, const Dataset& train,
                         const Dataset& val, const SendTiTrainConfig& cfg) {
  if (train.samples.empty()) {
    throw InvalidInput("train_sendti: empty training set");
  }
  const SendTiConfig& mc = model.config();
  std::vector<Parameter*> params = model.parameters();
  for (Parameter* p : params) p->zero_grad();
  AdamOptimizer opt(params, cfg.adam);

  TrainReport report;
  report.seed = cfg.seed;
  report.metric_name = "val_wder";

  size_t n = train.samples.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::mt19937_64 order_rng =
        make_rng(cfg.seed, "epoch-order", static_cast<uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), order_rng);
    double loss_sum = 0.0;
    for (size_t step = 0; step < n; ++step) {
      const MixtureSample& sample = train.samples[order[step]];
      uint64_t idx =
          static_cast<uint64_t>(epoch) * n + static_cast<uint64_t>(step);
      std::mt19937_64 bank_rng = make_rng(cfg.seed, "bank", idx);
      SpeakerBank bank =
          augment_bank(sample.enrollments,
                       absent_speaker_means(train.pool, sample.speaker_ids),
                       mc.capacity, bank_rng);
      std::mt19937_64 noise_rng = make_rng(cfg.seed, "text-noise", idx);
      PreparedTokens prep =
          prepare_tokens(sample, bank, mc.none_class(), mc.vocab_size,
                         cfg.train_text, noise_rng);
      Tape tape;
      double loss = tape.backward(model.loss_graph(
          tape, sample.features, bank, prep.tokens, prep.targets));
      check_finite_loss(loss, epoch, step);
      loss_sum += loss;
      opt.step();
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = loss_sum / static_cast<double>(n);
    rec.val_metric =
        evaluate_sendti(model, val, cfg.val_text, cfg.seed).wder;
    report.epochs.push_back(rec);
  }
  return report;
}

WderReport evaluate_sendti(SendTiModel& model, const Dataset& data,
                           const TextOptions& text, uint64_t noise_seed) {
  if (data.samples.empty()) {
    throw InvalidInput("evaluate_sendti: empty dataset");
  }
  const SendTiConfig& mc = model.config();
  std::vector<int> ref, hyp;
  for (size_t i = 0; i < data.samples.size(); ++i) {
    const MixtureSample& sample = data.samples[i];
    SpeakerBank bank = plain_bank(sample.enrollments, mc.capacity);
    std::mt19937_64 noise_rng = make_rng(noise_seed, "eval-text-noise", i);
    PreparedTokens prep = prepare_tokens(sample, bank, mc.none_class(),
                                         mc.vocab_size, text, noise_rng);
    WordPosterior post = model.forward(sample.features, bank, prep.tokens);
    std::vector<int> words = decode_words(post, prep.tokens);
    ref.insert(ref.end(), prep.word_slots.begin(), prep.word_slots.end());
    hyp.insert(hyp.end(), words.begin(), words.end());
  }
  return compute_wder(ref, hyp);
}

double evaluate_sendti_accuracy(SendTiModel& model, const Dataset& data,
                                const TextOptions& text, uint64_t noise_seed) {
  const SendTiConfig& mc = model.config();
  int64_t correct = 0, total = 0;
  for (size_t i = 0; i < data.samples.size(); ++i) {
    const MixtureSample& sample = data.samples[i];
    SpeakerBank bank = plain_bank(sample.enrollments, mc.capacity);
    std::mt19937_64 noise_rng = make_rng(noise_seed, "eval-text-noise", i);
    PreparedTokens prep = prepare_tokens(sample, bank, mc.none_class(),
                                         mc.vocab_size, text, noise_rng);
    WordPosterior post = model.forward(sample.features, bank, prep.tokens);
    size_t word_idx = 0;
    for (int64_t l = 0; l < prep.tokens.length(); ++l) {
      if (prep.tokens.is_separator(l)) continue;
      int best = bank.positive_slots[0];
      for (int slot : bank.positive_slots) {
        if (post.probs.at(l, slot) > post.probs.at(l, best)) best = slot;
      }
      if (best == prep.word_slots[word_idx]) ++correct;
      ++total;
      ++word_idx;
    }
  }
  if (total == 0) throw InvalidInput("evaluate_sendti_accuracy: no words");
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace send
