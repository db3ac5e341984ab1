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

#include "send/send_model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "send/checkpoint.h"
#include "send/common.h"

namespace send {

namespace {

std::vector<int64_t> parse_dims(const std::string& text,
                                const std::string& key) {
  std::vector<int64_t> dims;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      dims.push_back(std::stoll(tok));
    } catch (const std::exception&) {
      throw InvalidInput("config key '" + key + "': bad dimension '" + tok +
                         "'");
    }
  }
  return dims;
}

std::string dims_to_text(const std::vector<int64_t>& dims) {
  std::ostringstream os;
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) os << ',';
    os << dims[i];
  }
  return os.str();
}

}  // namespace

HeadType head_type_from_string(const std::string& name) {
  if (name == "pse") return HeadType::kPse;
  if (name == "multilabel") return HeadType::kMultilabel;
  throw InvalidInput("unknown head '" + name +
                     "' (expected pse or multilabel)");
}

std::string to_string(HeadType head) {
  return head == HeadType::kPse ? "pse" : "multilabel";
}

PostNetKind post_net_from_string(const std::string& name) {
  if (name == "none") return PostNetKind::kNone;
  if (name == "fcn") return PostNetKind::kFcn;
  if (name == "fsmn_fcn") return PostNetKind::kFsmnFcn;
  throw InvalidInput("unknown post_net '" + name +
                     "' (expected none, fcn or fsmn_fcn)");
}

std::string to_string(PostNetKind kind) {
  switch (kind) {
    case PostNetKind::kNone:
      return "none";
    case PostNetKind::kFcn:
      return "fcn";
    case PostNetKind::kFsmnFcn:
      return "fsmn_fcn";
  }
  return "?";
}

int SendConfig::num_classes() const {
  if (head == HeadType::kMultilabel) return capacity;
  int classes = 0;
  // sum_{k<=K} C(N, k); small by construction (capacity <= 62).
  for (int k = 0; k <= max_overlap; ++k) {
    double c = 1.0;
    for (int j = 0; j < k; ++j) {
      c = c * static_cast<double>(capacity - j) / static_cast<double>(j + 1);
    }
    classes += static_cast<int>(c + 0.5);
  }
  return classes;
}

void SendConfig::validate() const {
  if (feature_dim < 1 || embedding_dim < 1 || encoding_dim < 1) {
    throw InvalidInput("send config dimensions must be positive");
  }
  if (capacity < 1 || capacity > 62) {
    throw InvalidInput("send config capacity must lie in [1, 62]");
  }
  if (max_overlap < 0 || max_overlap > capacity) {
    throw InvalidInput("send config max_overlap must lie in [0, capacity]");
  }
  if (head == HeadType::kPse && post_net == PostNetKind::kNone) {
    throw InvalidInput(
        "send config: the pse head needs a post-net to map similarities to "
        "the valid-label classes (post_net must not be none)");
  }
  speech_encoder.validate();
  if (post_net == PostNetKind::kFsmnFcn) postnet_fsmn.validate();
}

SendConfig SendConfig::from_keyvalue(const KeyValueFile& kv) {
  SendConfig c;
  c.feature_dim = static_cast<int>(kv.get_int("feature_dim", c.feature_dim));
  c.embedding_dim =
      static_cast<int>(kv.get_int("embedding_dim", c.embedding_dim));
  c.encoding_dim = static_cast<int>(kv.get_int("encoding_dim", c.encoding_dim));
  c.capacity = static_cast<int>(kv.get_int("capacity", c.capacity));
  c.max_overlap = static_cast<int>(kv.get_int("max_overlap", c.max_overlap));
  c.metric = similarity_metric_from_string(
      kv.get_string("metric", to_string(c.metric)));
  c.head = head_type_from_string(kv.get_string("head", to_string(c.head)));
  c.post_net =
      post_net_from_string(kv.get_string("post_net", to_string(c.post_net)));
  c.speech_encoder.num_blocks = static_cast<int>(
      kv.get_int("speech_fsmn_blocks", c.speech_encoder.num_blocks));
  c.speech_encoder.hidden_units = static_cast<int>(
      kv.get_int("speech_fsmn_hidden", c.speech_encoder.hidden_units));
  c.speech_encoder.filter_size = static_cast<int>(
      kv.get_int("speech_fsmn_filter", c.speech_encoder.filter_size));
  c.speech_encoder.projection_dim = static_cast<int>(
      kv.get_int("speech_fsmn_projection", c.speech_encoder.projection_dim));
  if (kv.has("speaker_fcn_hidden")) {
    c.speaker_encoder_hidden =
        parse_dims(kv.get_string("speaker_fcn_hidden"), "speaker_fcn_hidden");
  }
  c.postnet_fsmn.num_blocks = static_cast<int>(
      kv.get_int("postnet_fsmn_blocks", c.postnet_fsmn.num_blocks));
  c.postnet_fsmn.hidden_units = static_cast<int>(
      kv.get_int("postnet_fsmn_hidden", c.capacity));
  c.postnet_fsmn.filter_size = static_cast<int>(
      kv.get_int("postnet_fsmn_filter", c.postnet_fsmn.filter_size));
  c.postnet_fsmn.projection_dim = static_cast<int>(
      kv.get_int("postnet_fsmn_projection", c.postnet_fsmn.hidden_units));
  if (kv.has("postnet_fcn_hidden")) {
    c.postnet_fcn_hidden =
        parse_dims(kv.get_string("postnet_fcn_hidden"), "postnet_fcn_hidden");
  }
  c.validate();
  return c;
}

KeyValueFile SendConfig::to_keyvalue() const {
  KeyValueFile kv;
  kv.set_int("feature_dim", feature_dim);
  kv.set_int("embedding_dim", embedding_dim);
  kv.set_int("encoding_dim", encoding_dim);
  kv.set_int("capacity", capacity);
  kv.set_int("max_overlap", max_overlap);
  kv.set("metric", to_string(metric));
  kv.set("head", to_string(head));
  kv.set("post_net", to_string(post_net));
  kv.set_int("speech_fsmn_blocks", speech_encoder.num_blocks);
  kv.set_int("speech_fsmn_hidden", speech_encoder.hidden_units);
  kv.set_int("speech_fsmn_filter", speech_encoder.filter_size);
  kv.set_int("speech_fsmn_projection", speech_encoder.projection_dim);
  kv.set("speaker_fcn_hidden", dims_to_text(speaker_encoder_hidden));
  kv.set_int("postnet_fsmn_blocks", postnet_fsmn.num_blocks);
  kv.set_int("postnet_fsmn_hidden", postnet_fsmn.hidden_units);
  kv.set_int("postnet_fsmn_filter", postnet_fsmn.filter_size);
  kv.set_int("postnet_fsmn_projection", postnet_fsmn.projection_dim);
  kv.set("postnet_fcn_hidden", dims_to_text(postnet_fcn_hidden));
  return kv;
}

SpeakerBank augment_bank(const std::vector<std::vector<double>>& positives,
                         const std::vector<std::vector<double>>& negative_pool,
                         int capacity, std::mt19937_64& rng) {
  if (static_cast<int>(positives.size()) > capacity) {
    std::ostringstream os;
    os << "augment_bank: " << positives.size()
       << " positive embeddings exceed capacity " << capacity;
    throw InvalidInput(os.str());
  }
  if (positives.empty()) {
    throw InvalidInput("augment_bank: need at least one positive embedding");
  }
  size_t dim = positives[0].size();
  for (const auto& v : positives) {
    if (v.size() != dim) {
      throw InvalidInput("augment_bank: inconsistent embedding dimensions");
    }
  }
  int free_slots = capacity - static_cast<int>(positives.size());
  int num_neg = 0;
  if (free_slots > 0) {
    std::uniform_int_distribution<int> d(0, free_slots);
    num_neg = std::min<int>(d(rng), static_cast<int>(negative_pool.size()));
  }
  std::vector<size_t> pool_order(negative_pool.size());
  std::iota(pool_order.begin(), pool_order.end(), 0);
  std::shuffle(pool_order.begin(), pool_order.end(), rng);

  std::vector<int> slot_order(static_cast<size_t>(capacity));
  std::iota(slot_order.begin(), slot_order.end(), 0);
  std::shuffle(slot_order.begin(), slot_order.end(), rng);

  SpeakerBank bank;
  bank.embeddings = Tensor({capacity, static_cast<int64_t>(dim)});
  bank.roles.assign(static_cast<size_t>(capacity), SlotRole::kZero);
  bank.positive_slots.resize(positives.size());
  int cursor = 0;
  for (size_t i = 0; i < positives.size(); ++i, ++cursor) {
    int slot = slot_order[static_cast<size_t>(cursor)];
    bank.roles[static_cast<size_t>(slot)] = SlotRole::kPositive;
    bank.positive_slots[i] = slot;
    for (size_t d = 0; d < dim; ++d) {
      bank.embeddings.at(slot, static_cast<int64_t>(d)) = positives[i][d];
    }
  }
  for (int i = 0; i < num_neg; ++i, ++cursor) {
    int slot = slot_order[static_cast<size_t>(cursor)];
    const auto& v = negative_pool[pool_order[static_cast<size_t>(i)]];
    if (v.size() != dim) {
      throw InvalidInput("augment_bank: inconsistent negative dimensions");
    }
    bank.roles[static_cast<size_t>(slot)] = SlotRole::kNegative;
    for (size_t d = 0; d < dim; ++d) {
      bank.embeddings.at(slot, static_cast<int64_t>(d)) = v[d];
    }
  }
  return bank;
}

SpeakerBank plain_bank(const std::vector<std::vector<double>>& positives,
                       int capacity) {
  if (positives.empty()) {
    throw InvalidInput("plain_bank: need at least one positive embedding");
  }
  if (static_cast<int>(positives.size()) > capacity) {
    throw InvalidInput("plain_bank: positives exceed capacity");
  }
  size_t dim = positives[0].size();
  SpeakerBank bank;
  bank.embeddings = Tensor({capacity, static_cast<int64_t>(dim)});
  bank.roles.assign(static_cast<size_t>(capacity), SlotRole::kZero);
  bank.positive_slots.resize(positives.size());
  for (size_t i = 0; i < positives.size(); ++i) {
    bank.positive_slots[i] = static_cast<int>(i);
    bank.roles[i] = SlotRole::kPositive;
    for (size_t d = 0; d < dim; ++d) {
      bank.embeddings.at(static_cast<int64_t>(i), static_cast<int64_t>(d)) =
          positives[i][d];
    }
  }
  return bank;
}

std::vector<std::vector<double>> cluster_centers(
    const std::vector<std::vector<double>>& embeddings,
    const std::vector<int64_t>& assignments) {
  if (embeddings.empty()) {
    throw InvalidInput("cluster_centers: empty input");
  }
  if (embeddings.size() != assignments.size()) {
    throw InvalidInput(
        "cluster_centers: embeddings and assignments differ in length");
  }
  std::vector<int64_t> order;  // cluster ids by first appearance
  std::vector<std::vector<double>> sums;
  std::vector<int64_t> counts;
  for (size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].size() != embeddings[0].size()) {
      throw InvalidInput("cluster_centers: inconsistent dimensions");
    }
    auto it = std::find(order.begin(), order.end(), assignments[i]);
    size_t idx;
    if (it == order.end()) {
      order.push_back(assignments[i]);
      sums.emplace_back(embeddings[i].size(), 0.0);
      counts.push_back(0);
      idx = order.size() - 1;
    } else {
      idx = static_cast<size_t>(it - order.begin());
    }
    for (size_t d = 0; d < embeddings[i].size(); ++d) {
      sums[idx][d] += embeddings[i][d];
    }
    ++counts[idx];
  }
  for (size_t c = 0; c < sums.size(); ++c) {
    for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
  }
  return sums;
}

SendModel::SendModel(const SendConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  table_ = build_valid_table(cfg_.max_overlap, cfg_.capacity);
  std::mt19937_64 rng = make_rng(seed, "send-model");
  speech_encoder_ = FsmnEncoder("speech", cfg_.feature_dim, cfg_.speech_encoder,
                                cfg_.encoding_dim, rng);
  std::vector<int64_t> spk_dims;
  spk_dims.push_back(cfg_.embedding_dim);
  for (int64_t h : cfg_.speaker_encoder_hidden) spk_dims.push_back(h);
  spk_dims.push_back(cfg_.encoding_dim);
  speaker_encoder_ = Fcn("speaker", spk_dims, rng);

  int out_width = cfg_.head == HeadType::kPse
                      ? static_cast<int>(table_.num_classes())
                      : cfg_.capacity;
  if (cfg_.post_net == PostNetKind::kFsmnFcn) {
    postnet_fsmn_ = FsmnEncoder("postnet.fsmn", cfg_.capacity,
                                cfg_.postnet_fsmn,
                                cfg_.postnet_fsmn.projection_dim, rng);
    std::vector<int64_t> dims;
    dims.push_back(cfg_.postnet_fsmn.projection_dim);
    for (int64_t h : cfg_.postnet_fcn_hidden) dims.push_back(h);
    dims.push_back(out_width);
    postnet_fcn_ = Fcn("postnet.fcn", dims, rng);
  } else if (cfg_.post_net == PostNetKind::kFcn) {
    std::vector<int64_t> dims;
    dims.push_back(cfg_.capacity);
    for (int64_t h : cfg_.postnet_fcn_hidden) dims.push_back(h);
    dims.push_back(out_width);
    postnet_fcn_ = Fcn("postnet.fcn", dims, rng);
  }
}

Var SendModel::postnet_graph(Tape& tape, Var similarity) {
  if (cfg_.post_net == PostNetKind::kNone) {
    return similarity;  // per-slot logits are the raw scores (sigmoid route)
  }
  // Dot-family scores span +-encoding_dim; bring them into the tanh linear
  // range before the post-net.
  Var scaled =
      tape.scale(similarity, 1.0 / static_cast<double>(cfg_.encoding_dim));
  if (cfg_.post_net == PostNetKind::kFcn) {
    return postnet_fcn_.forward(tape, scaled);
  }
  return postnet_fcn_.forward(tape, postnet_fsmn_.forward(tape, scaled));
}

Var SendModel::logits_graph(Tape& tape, const Tensor& features,
                            const SpeakerBank& bank) {
  if (features.ndim() != 2 || features.dim(1) != cfg_.feature_dim) {
    throw InvalidInput("send model expects T x " +
                       std::to_string(cfg_.feature_dim) + " features, got " +
                       features.shape_str());
  }
  if (bank.capacity() != cfg_.capacity ||
      bank.embeddings.dim(1) != cfg_.embedding_dim) {
    throw InvalidInput("send model: bank is " + bank.embeddings.shape_str() +
                       ", expected " + std::to_string(cfg_.capacity) + "x" +
                       std::to_string(cfg_.embedding_dim));
  }
  Var x = tape.constant(features, "features");
  Var v = tape.constant(bank.embeddings, "bank");
  Var speech = speech_encoder_.forward(tape, x);
  Var speakers = speaker_encoder_.forward(tape, v);
  Var similarity = similarity_graph(tape, speech, speakers, cfg_.metric);
  return postnet_graph(tape, similarity);
}

DiarizationPosterior SendModel::forward(const Tensor& features,
                                        const SpeakerBank& bank) {
  Tape tape;
  Var logits = logits_graph(tape, features, bank);
  Var probs = cfg_.head == HeadType::kPse ? tape.row_softmax(logits)
                                          : tape.sigmoid(logits);
  DiarizationPosterior post;
  post.head = cfg_.head;
  post.probs = tape.value(probs);
  return post;
}

Var SendModel::loss_graph(Tape& tape, const Tensor& features,
                          const SpeakerBank& bank,
                          const PseClassSequence& targets) {
  if (cfg_.head != HeadType::kPse) {
    throw InvalidInput("send model: class targets require the pse head");
  }
  Var logits = logits_graph(tape, features, bank);
  if (static_cast<int64_t>(targets.size()) != tape.value(logits).dim(0)) {
    throw InvalidInput("send model: target length does not match frame count");
  }
  std::vector<int64_t> t(targets.begin(), targets.end());
  return tape.softmax_cross_entropy(logits, std::move(t));
}

Var SendModel::loss_graph(Tape& tape, const Tensor& features,
                          const SpeakerBank& bank, const FrameLabels& targets) {
  if (cfg_.head != HeadType::kMultilabel) {
    throw InvalidInput("send model: label targets require the multilabel head");
  }
  Var logits = logits_graph(tape, features, bank);
  if (targets.num_frames() != tape.value(logits).dim(0) ||
      targets.num_speakers() != cfg_.capacity) {
    throw InvalidInput("send model: target shape does not match output");
  }
  Tensor y({targets.num_frames(), static_cast<int64_t>(cfg_.capacity)});
  for (int64_t f = 0; f < targets.num_frames(); ++f) {
    for (int n = 0; n < cfg_.capacity; ++n) {
      y.at(f, n) = targets.active(f, n) ? 1.0 : 0.0;
    }
  }
  return tape.sigmoid_binary_cross_entropy(logits, std::move(y));
}

std::vector<Parameter*> SendModel::parameters() {
  std::vector<Parameter*> out;
  speech_encoder_.collect(out);
  speaker_encoder_.collect(out);
  if (cfg_.post_net == PostNetKind::kFsmnFcn) postnet_fsmn_.collect(out);
  if (cfg_.post_net != PostNetKind::kNone) postnet_fcn_.collect(out);
  return out;
}

void SendModel::save(const std::string& path) {
  std::vector<Parameter*> params = parameters();
  save_checkpoint(path, params);
}

void SendModel::load(const std::string& path) {
  std::vector<Parameter*> params = parameters();
  load_checkpoint(path, params);
}

double send_loss(const DiarizationPosterior& post,
                 const PseClassSequence& targets) {
  if (post.head != HeadType::kPse) {
    throw InvalidInput("send_loss: class targets require a pse posterior");
  }
  if (static_cast<int64_t>(targets.size()) != post.probs.dim(0)) {
    throw InvalidInput("send_loss: target length mismatch");
  }
  double acc = 0.0;
  for (int64_t t = 0; t < post.probs.dim(0); ++t) {
    acc += cross_entropy(post.probs.row(t), targets[static_cast<size_t>(t)]);
  }
  return acc / static_cast<double>(post.probs.dim(0));
}

double send_loss(const DiarizationPosterior& post, const FrameLabels& targets) {
  if (post.head != HeadType::kMultilabel) {
    throw InvalidInput("send_loss: label targets require a multilabel posterior");
  }
  if (targets.num_frames() != post.probs.dim(0) ||
      targets.num_speakers() != post.probs.dim(1)) {
    throw InvalidInput("send_loss: target shape mismatch");
  }
  double acc = 0.0;
  constexpr double kTiny = 1e-12;
  for (int64_t t = 0; t < post.probs.dim(0); ++t) {
    for (int64_t n = 0; n < post.probs.dim(1); ++n) {
      double p = std::clamp(post.probs.at(t, n), kTiny, 1.0 - kTiny);
      double y = targets.active(t, static_cast<int>(n)) ? 1.0 : 0.0;
      acc += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
  }
  return acc / static_cast<double>(post.probs.size());
}

FrameLabels decode_frames(const DiarizationPosterior& post,
                          const ValidLabelTable& table,
                          std::optional<double> threshold) {
  if (post.head == HeadType::kPse) {
    if (threshold.has_value()) {
      throw InvalidInput("decode_frames: the pse head takes no threshold");
    }
    if (post.probs.dim(1) != table.num_classes()) {
      throw InvalidInput("decode_frames: posterior width does not match table");
    }
    PseClassSequence classes;
    classes.reserve(static_cast<size_t>(post.probs.dim(0)));
    for (int64_t t = 0; t < post.probs.dim(0); ++t) {
      int best = 0;  // ties break toward the lower class index (silence first)
      for (int c = 1; c < table.num_classes(); ++c) {
        if (post.probs.at(t, c) > post.probs.at(t, best)) best = c;
      }
      classes.push_back(best);
    }
    return classes_to_labels(classes, table);
  }
  if (!threshold.has_value()) {
    throw InvalidInput("decode_frames: the multilabel head needs a threshold");
  }
  FrameLabels out(post.probs.dim(0), static_cast<int>(post.probs.dim(1)));
  for (int64_t t = 0; t < post.probs.dim(0); ++t) {
    for (int64_t n = 0; n < post.probs.dim(1); ++n) {
      out.set(t, static_cast<int>(n), post.probs.at(t, n) >= *threshold);
    }
  }
  return out;
}

}  // namespace send
