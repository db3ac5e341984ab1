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

#ifndef SEND_SENDTI_H_
#define SEND_SENDTI_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "send/send_model.h"

namespace send {

// Vocabulary id 0 is reserved for the speaker-change separator; content
// words use ids 1..vocab_size. In transcript files the separator is the
// literal token "<sc>" and content words are "w<id>".
constexpr int64_t kScTokenId = 0;

struct TokenSequence {
  std::vector<int64_t> tokens;
  std::vector<int64_t> sc_positions;  // sorted indices of separator tokens
  int64_t length() const { return static_cast<int64_t>(tokens.size()); }
  bool is_separator(int64_t i) const {
    return tokens[static_cast<size_t>(i)] == kScTokenId;
  }
};

// Inserts a separator token wherever the word-level speaker changes; word
// order is preserved. words and speaker_per_word must have equal length.
TokenSequence insert_sc_separators(std::span<const int64_t> words,
                                   std::span<const int32_t> speaker_per_word);
TokenSequence tokens_without_separators(std::span<const int64_t> words);

// One utterance per line, whitespace-separated tokens: "w<id>" or "<sc>".
std::vector<TokenSequence> parse_transcript_text(const std::string& text,
                                                 int vocab_size);
std::string render_transcript(const TokenSequence& seq);

// Word-level model (no power-set encoding: one speaker per word). Output
// classes are the capacity slots plus one trailing "none" class.
struct SendTiConfig {
  int feature_dim = 560;
  int embedding_dim = 512;
  int encoding_dim = 512;
  int capacity = 16;
  int vocab_size = 50;
  FsmnConfig speech_encoder{/*num_blocks=*/8, /*hidden_units=*/512,
                            /*filter_size=*/31, /*projection_dim=*/128};
  std::vector<int64_t> speaker_encoder_hidden = {512, 512};
  AttentionConfig text_encoder{/*model_dim=*/512, /*num_heads=*/8,
                               /*num_blocks=*/6, /*positional_encoding=*/true};
  FsmnConfig postnet_fsmn{/*num_blocks=*/2, /*hidden_units=*/16,
                          /*filter_size=*/31, /*projection_dim=*/16};
  std::vector<int64_t> postnet_fcn_hidden = {512};
  // Analysis knob: zero out the speech encodings so only text reaches the
  // word head.
  bool mask_speech = false;

  int num_word_classes() const { return capacity + 1; }
  int none_class() const { return capacity; }
  void validate() const;
  static SendTiConfig from_keyvalue(const KeyValueFile& kv);
  KeyValueFile to_keyvalue() const;
};

struct WordPosterior {
  Tensor probs;  // L x (capacity + 1), one row per token, rows sum to 1
  int none_class = 0;
};

class SendTiModel {
 public:
  SendTiModel(const SendTiConfig& cfg, uint64_t seed);

  const SendTiConfig& config() const { return cfg_; }

  Var logits_graph(Tape& tape, const Tensor& features, const SpeakerBank& bank,
                   const TokenSequence& tokens);
  WordPosterior forward(const Tensor& features, const SpeakerBank& bank,
                        const TokenSequence& tokens);
  // Mean cross-entropy over tokens; targets are slot classes (or none_class).
  Var loss_graph(Tape& tape, const Tensor& features, const SpeakerBank& bank,
                 const TokenSequence& tokens,
                 const std::vector<int64_t>& targets);

  std::vector<Parameter*> parameters();
  void save(const std::string& path);
  void load(const std::string& path);
  // Warm start: copies speech/speaker encoder arrays from a SEND checkpoint.
  void load_speech_encoders(const std::string& send_checkpoint_path);

  void set_mask_speech(bool mask) { cfg_.mask_speech = mask; }

 private:
  SendTiConfig cfg_;
  Parameter token_embeddings_;  // (vocab_size + 1) x text model_dim
  FsmnEncoder speech_encoder_;
  Fcn speaker_encoder_;
  TransformerEncoder text_encoder_;
  AttentionAligner aligner_;
  FsmnEncoder postnet_fsmn_;
  Fcn postnet_fcn_;
};

// Per-token argmax (ties toward the lower class); separator positions are
// dropped, so the result has one entry per content word. Classes equal to
// none_class come out as-is unless exclude_none restricts the argmax to the
// speaker slots.
std::vector<int> decode_words(const WordPosterior& post,
                              const TokenSequence& tokens,
                              bool exclude_none = false);

}  // namespace send

#endif  // SEND_SENDTI_H_
