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

#ifndef SEND_SEND_MODEL_H_
#define SEND_SEND_MODEL_H_

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "send/autodiff.h"
#include "send/keyvalue.h"
#include "send/nnet.h"
#include "send/pse.h"
#include "send/similarity.h"

namespace send {

// kPse: one softmax over the valid-label table per frame (threshold-free).
// kMultilabel: independent per-speaker sigmoids, needs a decision threshold.
enum class HeadType { kPse, kMultilabel };
HeadType head_type_from_string(const std::string& name);
std::string to_string(HeadType head);

enum class PostNetKind { kNone, kFcn, kFsmnFcn };
PostNetKind post_net_from_string(const std::string& name);
std::string to_string(PostNetKind kind);

// Defaults follow the reference configuration: 16 speaker slots with at most
// 3 simultaneous, an 8-block FSMN speech encoder with 512 memory units and
// filter size 31, a 3-layer dense speaker encoder, and a 2-block post-net
// FSMN with as many memory units as speaker slots.
struct SendConfig {
  int feature_dim = 560;
  int embedding_dim = 512;
  int encoding_dim = 512;  // width shared by speech and speaker encodings
  int capacity = 16;       // speaker slots in the bank
  int max_overlap = 3;
  SimilarityMetric metric = SimilarityMetric::kSigmaDot;
  HeadType head = HeadType::kPse;
  PostNetKind post_net = PostNetKind::kFsmnFcn;
  FsmnConfig speech_encoder{/*num_blocks=*/8, /*hidden_units=*/512,
                            /*filter_size=*/31, /*projection_dim=*/128};
  std::vector<int64_t> speaker_encoder_hidden = {512, 512};
  FsmnConfig postnet_fsmn{/*num_blocks=*/2, /*hidden_units=*/16,
                          /*filter_size=*/31, /*projection_dim=*/16};
  std::vector<int64_t> postnet_fcn_hidden = {512};

  int num_classes() const;  // valid-label count (pse) or capacity
  void validate() const;
  static SendConfig from_keyvalue(const KeyValueFile& kv);
  KeyValueFile to_keyvalue() const;
};

enum class SlotRole { kPositive, kNegative, kZero };

// The N-slot speaker embedding matrix fed to the model. Positive slots carry
// speakers present in the mixture, negative slots absent speakers, zero
// slots exact zero vectors.
struct SpeakerBank {
  Tensor embeddings;  // capacity x embedding_dim
  std::vector<SlotRole> roles;
  // Slot index of each positive input, in input order; label columns must be
  // permuted with this map so targets follow the bank's slot order.
  std::vector<int> positive_slots;

  int capacity() const { return static_cast<int>(roles.size()); }
  int num_positive() const { return static_cast<int>(positive_slots.size()); }
};

// Fills a bank with all positives, m negatives sampled without replacement
// from the pool (m uniform on 0..capacity-|positives|, clamped to the pool
// size) and zero vectors elsewhere, in a random slot order.
SpeakerBank augment_bank(const std::vector<std::vector<double>>& positives,
                         const std::vector<std::vector<double>>& negative_pool,
                         int capacity, std::mt19937_64& rng);

// Deterministic evaluation bank: positives in input order, zero padding.
SpeakerBank plain_bank(const std::vector<std::vector<double>>& positives,
                       int capacity);

// Mean embedding per cluster id, ordered by first appearance.
std::vector<std::vector<double>> cluster_centers(
    const std::vector<std::vector<double>>& embeddings,
    const std::vector<int64_t>& assignments);

struct DiarizationPosterior {
  HeadType head = HeadType::kPse;
  Tensor probs;  // T x num_classes (pse rows sum to 1) or T x capacity
};

class SendModel {
 public:
  SendModel(const SendConfig& cfg, uint64_t seed);

  const SendConfig& config() const { return cfg_; }
  const ValidLabelTable& table() const { return table_; }

  // Head logits for one mixture: T x num_classes.
  Var logits_graph(Tape& tape, const Tensor& features, const SpeakerBank& bank);
  DiarizationPosterior forward(const Tensor& features, const SpeakerBank& bank);

  // Mean cross-entropy (pse) over frame classes.
  Var loss_graph(Tape& tape, const Tensor& features, const SpeakerBank& bank,
                 const PseClassSequence& targets);
  // Mean binary cross-entropy (multilabel) over frames x slots.
  Var loss_graph(Tape& tape, const Tensor& features, const SpeakerBank& bank,
                 const FrameLabels& targets);

  std::vector<Parameter*> parameters();
  void save(const std::string& path);
  void load(const std::string& path);

 private:
  Var postnet_graph(Tape& tape, Var similarity);

  SendConfig cfg_;
  ValidLabelTable table_;
  FsmnEncoder speech_encoder_;
  Fcn speaker_encoder_;
  FsmnEncoder postnet_fsmn_;  // kFsmnFcn only
  Fcn postnet_fcn_;           // kFcn and kFsmnFcn
};

// Loss recomputed from an already-materialized posterior (evaluation path).
double send_loss(const DiarizationPosterior& post,
                 const PseClassSequence& targets);
double send_loss(const DiarizationPosterior& post, const FrameLabels& targets);

// PSE head: per-frame argmax class (ties toward the lower class index, i.e.
// toward silence) decoded through the table. Multilabel head: entries >=
// threshold, which is required for that head and rejected for PSE.
FrameLabels decode_frames(const DiarizationPosterior& post,
                          const ValidLabelTable& table,
                          std::optional<double> threshold = std::nullopt);

}  // namespace send

#endif  // SEND_SEND_MODEL_H_
