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

#include "send/sendti.h"

#include <sstream>

#include "send/checkpoint.h"
#include "send/common.h"

namespace send {

TokenSequence insert_sc_separators(std::span<const int64_t> words,
                                   std::span<const int32_t> speaker_per_word) {
  if (words.size() != speaker_per_word.size()) {
    std::ostringstream os;
    os << "insert_sc_separators: " << words.size() << " words vs "
       << speaker_per_word.size() << " speakers";
    throw InvalidInput(os.str());
  }
  TokenSequence seq;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i > 0 && speaker_per_word[i] != speaker_per_word[i - 1]) {
      seq.sc_positions.push_back(static_cast<int64_t>(seq.tokens.size()));
      seq.tokens.push_back(kScTokenId);
    }
    seq.tokens.push_back(words[i]);
  }
  return seq;
}

TokenSequence tokens_without_separators(std::span<const int64_t> words) {
  TokenSequence seq;
  seq.tokens.assign(words.begin(), words.end());
  return seq;
}

std::vector<TokenSequence> parse_transcript_text(const std::string& text,
                                                 int vocab_size) {
  std::vector<TokenSequence> out;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    std::istringstream is(line);
    std::string tok;
    TokenSequence seq;
    while (is >> tok) {
      if (tok == "<sc>") {
        seq.sc_positions.push_back(static_cast<int64_t>(seq.tokens.size()));
        seq.tokens.push_back(kScTokenId);
        continue;
      }
      if (tok.size() < 2 || tok[0] != 'w') {
        std::ostringstream os;
        os << "transcript line " << line_no << ": bad token '" << tok
           << "' (expected w<id> or <sc>)";
        throw InvalidInput(os.str());
      }
      int64_t id;
      try {
        size_t pos = 0;
        id = std::stoll(tok.substr(1), &pos);
        if (pos != tok.size() - 1) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        std::ostringstream os;
        os << "transcript line " << line_no << ": bad token '" << tok << "'";
        throw InvalidInput(os.str());
      }
      if (id < 1 || id > vocab_size) {
        std::ostringstream os;
        os << "transcript line " << line_no << ": token id " << id
           << " outside vocabulary [1, " << vocab_size << "]";
        throw InvalidInput(os.str());
      }
      seq.tokens.push_back(id);
    }
    if (!seq.tokens.empty()) out.push_back(std::move(seq));
  }
  return out;
}

std::string render_transcript(const TokenSequence& seq) {
  std::ostringstream os;
  for (size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i) os << ' ';
    if (seq.tokens[i] == kScTokenId) {
      os << "<sc>";
    } else {
      os << 'w' << seq.tokens[i];
    }
  }
  return os.str();
}

void SendTiConfig::validate() const {
  if (feature_dim < 1 || embedding_dim < 1 || encoding_dim < 1) {
    throw InvalidInput("sendti config dimensions must be positive");
  }
  if (capacity < 1 || capacity > 62) {
    throw InvalidInput("sendti config capacity must lie in [1, 62]");
  }
  if (vocab_size < 1) {
    throw InvalidInput("sendti config vocab_size must be >= 1");
  }
  speech_encoder.validate();
  text_encoder.validate();
  postnet_fsmn.validate();
}

SendTiConfig SendTiConfig::from_keyvalue(const KeyValueFile& kv) {
  SendTiConfig c;
  c.feature_dim = static_cast<int>(kv.get_int("feature_dim", c.feature_dim));
  c.embedding_dim =
      static_cast<int>(kv.get_int("embedding_dim", c.embedding_dim));
  c.encoding_dim = static_cast<int>(kv.get_int("encoding_dim", c.encoding_dim));
  c.capacity = static_cast<int>(kv.get_int("capacity", c.capacity));
  c.vocab_size = static_cast<int>(kv.get_int("vocab_size", c.vocab_size));
  c.speech_encoder.num_blocks = static_cast<int>(
      kv.get_int("speech_fsmn_blocks", c.speech_encoder.num_blocks));
  c.speech_encoder.hidden_units = static_cast<int>(
      kv.get_int("speech_fsmn_hidden", c.speech_encoder.hidden_units));
  c.speech_encoder.filter_size = static_cast<int>(
      kv.get_int("speech_fsmn_filter", c.speech_encoder.filter_size));
  c.speech_encoder.projection_dim = static_cast<int>(
      kv.get_int("speech_fsmn_projection", c.speech_encoder.projection_dim));
  c.text_encoder.model_dim =
      static_cast<int>(kv.get_int("text_model_dim", c.text_encoder.model_dim));
  c.text_encoder.num_heads =
      static_cast<int>(kv.get_int("text_heads", c.text_encoder.num_heads));
  c.text_encoder.num_blocks =
      static_cast<int>(kv.get_int("text_blocks", c.text_encoder.num_blocks));
  c.text_encoder.positional_encoding =
      kv.get_bool("text_positional", c.text_encoder.positional_encoding);
  c.postnet_fsmn.num_blocks = static_cast<int>(
      kv.get_int("postnet_fsmn_blocks", c.postnet_fsmn.num_blocks));
  c.postnet_fsmn.hidden_units =
      static_cast<int>(kv.get_int("postnet_fsmn_hidden", c.capacity));
  c.postnet_fsmn.filter_size = static_cast<int>(
      kv.get_int("postnet_fsmn_filter", c.postnet_fsmn.filter_size));
  c.postnet_fsmn.projection_dim = static_cast<int>(
      kv.get_int("postnet_fsmn_projection", c.postnet_fsmn.hidden_units));
  c.mask_speech = kv.get_bool("mask_speech", c.mask_speech);
  c.validate();
  return c;
}

KeyValueFile SendTiConfig::to_keyvalue() const {
  KeyValueFile kv;
  kv.set_int("feature_dim", feature_dim);
  kv.set_int("embedding_dim", embedding_dim);
  kv.set_int("encoding_dim", encoding_dim);
  kv.set_int("capacity", capacity);
  kv.set_int("vocab_size", vocab_size);
  kv.set_int("speech_fsmn_blocks", speech_encoder.num_blocks);
  kv.set_int("speech_fsmn_hidden", speech_encoder.hidden_units);
  kv.set_int("speech_fsmn_filter", speech_encoder.filter_size);
  kv.set_int("speech_fsmn_projection", speech_encoder.projection_dim);
  kv.set_int("text_model_dim", text_encoder.model_dim);
  kv.set_int("text_heads", text_encoder.num_heads);
  kv.set_int("text_blocks", text_encoder.num_blocks);
  kv.set("text_positional", text_encoder.positional_encoding ? "true" : "false");
  kv.set_int("postnet_fsmn_blocks", postnet_fsmn.num_blocks);
  kv.set_int("postnet_fsmn_hidden", postnet_fsmn.hidden_units);
  kv.set_int("postnet_fsmn_filter", postnet_fsmn.filter_size);
  kv.set_int("postnet_fsmn_projection", postnet_fsmn.projection_dim);
  kv.set("mask_speech", mask_speech ? "true" : "false");
  return kv;
}

SendTiModel::SendTiModel(const SendTiConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng = make_rng(seed, "sendti-model");
  token_embeddings_ =
      Parameter("text.embed", glorot_init(cfg_.vocab_size + 1,
                                          cfg_.text_encoder.model_dim, rng));
  speech_encoder_ = FsmnEncoder("speech", cfg_.feature_dim, cfg_.speech_encoder,
                                cfg_.encoding_dim, rng);
  std::vector<int64_t> spk_dims;
  spk_dims.push_back(cfg_.embedding_dim);
  for (int64_t h : cfg_.speaker_encoder_hidden) spk_dims.push_back(h);
  spk_dims.push_back(cfg_.encoding_dim);
  speaker_encoder_ = Fcn("speaker", spk_dims, rng);
  text_encoder_ = TransformerEncoder("text", cfg_.text_encoder, rng);
  aligner_ = AttentionAligner("align", cfg_.text_encoder.model_dim,
                              cfg_.encoding_dim, cfg_.encoding_dim,
                              cfg_.encoding_dim, rng);
  postnet_fsmn_ = FsmnEncoder("postnet.fsmn", cfg_.capacity, cfg_.postnet_fsmn,
                              cfg_.postnet_fsmn.projection_dim, rng);
  std::vector<int64_t> dims;
  dims.push_back(cfg_.postnet_fsmn.projection_dim);
  for (int64_t h : cfg_.postnet_fcn_hidden) dims.push_back(h);
  dims.push_back(cfg_.num_word_classes());
  postnet_fcn_ = Fcn("postnet.fcn", dims, rng);
}

Var SendTiModel::logits_graph(Tape& tape, const Tensor& features,
                              const SpeakerBank& bank,
                              const TokenSequence& tokens) {
  if (tokens.tokens.empty()) {
    throw InvalidInput("sendti model: empty token sequence");
  }
  if (features.ndim() != 2 || features.dim(1) != cfg_.feature_dim) {
    throw InvalidInput("sendti model expects T x " +
                       std::to_string(cfg_.feature_dim) + " features, got " +
                       features.shape_str());
  }
  if (bank.capacity() != cfg_.capacity ||
      bank.embeddings.dim(1) != cfg_.embedding_dim) {
    throw InvalidInput("sendti model: bank shape mismatch");
  }
  for (int64_t id : tokens.tokens) {
    if (id < 0 || id > cfg_.vocab_size) {
      throw InvalidInput("sendti model: token id outside vocabulary");
    }
  }

  Var x = tape.constant(features, "features");
  Var v = tape.constant(bank.embeddings, "bank");
  Var speech = speech_encoder_.forward(tape, x);
  if (cfg_.mask_speech) speech = tape.scale(speech, 0.0);
  Var speakers = speaker_encoder_.forward(tape, v);

  Var z = tape.lookup_rows(tape.param(token_embeddings_), tokens.tokens);
  Var text = text_encoder_.encode(tape, z);
  Var aggregated = aligner_.forward(tape, text, speech);
  Var similarity =
      similarity_graph(tape, aggregated, speakers, SimilarityMetric::kSigmaDot);
  // Same post-net input scaling as the frame-level model.
  Var scaled =
      tape.scale(similarity, 1.0 / static_cast<double>(cfg_.encoding_dim));
  return postnet_fcn_.forward(tape, postnet_fsmn_.forward(tape, scaled));
}

WordPosterior SendTiModel::forward(const Tensor& features,
                                   const SpeakerBank& bank,
                                   const TokenSequence& tokens) {
  Tape tape;
  Var probs = tape.row_softmax(logits_graph(tape, features, bank, tokens));
  WordPosterior post;
  post.probs = tape.value(probs);
  post.none_class = cfg_.none_class();
  return post;
}

Var SendTiModel::loss_graph(Tape& tape, const Tensor& features,
                            const SpeakerBank& bank,
                            const TokenSequence& tokens,
                            const std::vector<int64_t>& targets) {
  Var logits = logits_graph(tape, features, bank, tokens);
  if (static_cast<int64_t>(targets.size()) != tokens.length()) {
    throw InvalidInput("sendti model: one target per token required");
  }
  return tape.softmax_cross_entropy(logits, targets);
}

std::vector<Parameter*> SendTiModel::parameters() {
  std::vector<Parameter*> out;
  out.push_back(&token_embeddings_);
  speech_encoder_.collect(out);
  speaker_encoder_.collect(out);
  text_encoder_.collect(out);
  aligner_.collect(out);
  postnet_fsmn_.collect(out);
  postnet_fcn_.collect(out);
  return out;
}

void SendTiModel::save(const std::string& path) {
  std::vector<Parameter*> params = parameters();
  save_checkpoint(path, params);
}

void SendTiModel::load(const std::string& path) {
  std::vector<Parameter*> params = parameters();
  load_checkpoint(path, params);
}

void SendTiModel::load_speech_encoders(const std::string& send_checkpoint_path) {
  std::vector<Parameter*> params;
  speech_encoder_.collect(params);
  speaker_encoder_.collect(params);
  load_checkpoint(send_checkpoint_path, params);
}

std::vector<int> decode_words(const WordPosterior& post,
                              const TokenSequence& tokens,
                              bool exclude_none) {
  if (post.probs.dim(0) != tokens.length()) {
    throw InvalidInput("decode_words: posterior rows do not match tokens");
  }
  std::vector<int> out;
  int64_t classes = exclude_none ? post.probs.dim(1) - 1 : post.probs.dim(1);
  for (int64_t l = 0; l < post.probs.dim(0); ++l) {
    if (tokens.is_separator(l)) continue;
    int best = 0;
    for (int64_t c = 1; c < classes; ++c) {
      if (post.probs.at(l, c) > post.probs.at(l, best)) {
        best = static_cast<int>(c);
      }
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace send
