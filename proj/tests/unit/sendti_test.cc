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

#include <random>

#include <doctest.h>

#include "send/common.h"
#include "support/test_util.h"

using namespace send;
using send::testing::random_tensor;

namespace {

SendTiConfig small_config() {
  SendTiConfig c;
  c.feature_dim = 8;
  c.embedding_dim = 8;
  c.encoding_dim = 8;
  c.capacity = 4;
  c.vocab_size = 20;
  c.speech_encoder = {1, 8, 3, 8};
  c.speaker_encoder_hidden = {8};
  c.text_encoder = {8, 2, 1, /*positional_encoding=*/true};
  c.postnet_fsmn = {1, 4, 3, 4};
  c.postnet_fcn_hidden = {8};
  return c;
}

SpeakerBank manual_bank(const Tensor& embeddings) {
  SpeakerBank bank;
  bank.embeddings = embeddings;
  bank.roles.assign(static_cast<size_t>(embeddings.dim(0)),
                    SlotRole::kNegative);
  return bank;
}

}  // namespace

TEST_CASE("insert_sc_separators") {
  std::vector<int64_t> words{4, 9, 2, 7};

  TokenSequence same = insert_sc_separators(
      words, std::vector<int32_t>{1, 1, 1, 1});
  CHECK(same.tokens == words);
  CHECK(same.sc_positions.empty());

  TokenSequence one = insert_sc_separators(
      words, std::vector<int32_t>{1, 1, 2, 2});
  CHECK(one.tokens == std::vector<int64_t>{4, 9, kScTokenId, 2, 7});
  CHECK(one.sc_positions == std::vector<int64_t>{2});

  TokenSequence two = insert_sc_separators(
      std::vector<int64_t>{4, 9, 2}, std::vector<int32_t>{1, 2, 1});
  CHECK(two.tokens == std::vector<int64_t>{4, kScTokenId, 9, kScTokenId, 2});
  CHECK(two.sc_positions == std::vector<int64_t>{1, 3});

  CHECK_THROWS_AS(
      insert_sc_separators(words, std::vector<int32_t>{1, 2}), InvalidInput);
}

TEST_CASE("transcript text round trip") {
  TokenSequence seq;
  seq.tokens = {3, kScTokenId, 7, 12};
  seq.sc_positions = {1};
  std::string text = render_transcript(seq);
  CHECK(text == "w3 <sc> w7 w12");
  std::vector<TokenSequence> parsed = parse_transcript_text(text + "\n", 20);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].tokens == seq.tokens);
  CHECK(parsed[0].sc_positions == seq.sc_positions);

  CHECK_THROWS_AS(parse_transcript_text("w3 banana\n", 20), InvalidInput);
  CHECK_THROWS_AS(parse_transcript_text("w99\n", 20), InvalidInput);
}

TEST_CASE("word posterior rows sum to one; one row per token") {
  SendTiModel model(small_config(), 1);
  std::mt19937_64 rng(3);
  SpeakerBank bank = manual_bank(random_tensor({4, 8}, rng));
  Tensor features = random_tensor({10, 8}, rng);
  TokenSequence tokens;
  tokens.tokens = {5, kScTokenId, 9, 11};
  tokens.sc_positions = {1};
  WordPosterior post = model.forward(features, bank, tokens);
  REQUIRE(post.probs.dim(0) == 4);
  REQUIRE(post.probs.dim(1) == 5);  // capacity + none
  for (int64_t l = 0; l < 4; ++l) {
    double sum = 0.0;
    for (int64_t c = 0; c < 5; ++c) sum += post.probs.at(l, c);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("single word and single frame degenerate cleanly") {
  SendTiModel model(small_config(), 5);
  std::mt19937_64 rng(7);
  SpeakerBank bank = manual_bank(random_tensor({4, 8}, rng));
  TokenSequence one;
  one.tokens = {3};
  WordPosterior post =
      model.forward(random_tensor({1, 8}, rng), bank, one);
  CHECK(post.probs.dim(0) == 1);

  TokenSequence empty;
  CHECK_THROWS_AS(model.forward(random_tensor({1, 8}, rng), bank, empty),
                  InvalidInput);
}

TEST_CASE("duplicated tokens with positions disabled get identical rows") {
  SendTiConfig cfg = small_config();
  cfg.text_encoder.positional_encoding = false;
  SendTiModel model(cfg, 9);
  std::mt19937_64 rng(11);
  SpeakerBank bank = manual_bank(random_tensor({4, 8}, rng));
  Tensor features = random_tensor({6, 8}, rng);
  TokenSequence tokens;
  tokens.tokens = {7, 7, 7};
  WordPosterior post = model.forward(features, bank, tokens);
  for (int64_t l = 1; l < 3; ++l) {
    for (int64_t c = 0; c < post.probs.dim(1); ++c) {
      CHECK(post.probs.at(l, c) == doctest::Approx(post.probs.at(0, c)));
    }
  }
}

TEST_CASE("masking speech makes the posterior feature-independent") {
  SendTiConfig cfg = small_config();
  cfg.mask_speech = true;
  SendTiModel model(cfg, 13);
  std::mt19937_64 rng(15);
  SpeakerBank bank = manual_bank(random_tensor({4, 8}, rng));
  TokenSequence tokens;
  tokens.tokens = {2, 4, 6};
  WordPosterior a = model.forward(random_tensor({9, 8}, rng), bank, tokens);
  WordPosterior b = model.forward(random_tensor({5, 8}, rng), bank, tokens);
  REQUIRE(a.probs.size() == b.probs.size());
  for (int64_t i = 0; i < a.probs.size(); ++i) {
    CHECK(a.probs.at(i) == doctest::Approx(b.probs.at(i)));
  }
}

TEST_CASE("decode_words: readout, ties, separators excluded") {
  TokenSequence tokens;
  tokens.tokens = {5, kScTokenId, 9};
  tokens.sc_positions = {1};
  WordPosterior post;
  post.none_class = 4;
  post.probs = Tensor({3, 5});
  post.probs.at(0, 2) = 1.0;           // word 0 -> slot 2
  post.probs.at(1, 4) = 1.0;           // separator row, dropped
  post.probs.at(2, 1) = 0.5;           // tie between slots 1 and 3
  post.probs.at(2, 3) = 0.5;
  std::vector<int> words = decode_words(post, tokens);
  CHECK(words == std::vector<int>{2, 1});  // tie toward the lower index

  // Excluding the none class restricts the argmax to speaker slots.
  WordPosterior nonely;
  nonely.none_class = 4;
  nonely.probs = Tensor({1, 5});
  nonely.probs.at(0, 4) = 0.9;
  nonely.probs.at(0, 3) = 0.1;
  TokenSequence single;
  single.tokens = {2};
  CHECK(decode_words(nonely, single) == std::vector<int>{4});
  CHECK(decode_words(nonely, single, /*exclude_none=*/true) ==
        std::vector<int>{3});
}

TEST_CASE("full sendti model passes grad_check at a random point") {
  SendTiConfig cfg = small_config();
  SendTiModel model(cfg, 17);
  std::mt19937_64 rng(19);
  SpeakerBank bank = manual_bank(random_tensor({4, 8}, rng));
  Tensor features = random_tensor({8, 8}, rng);
  TokenSequence tokens;
  tokens.tokens = {3, kScTokenId, 8, 15};
  tokens.sc_positions = {1};
  std::vector<int64_t> targets{0, 4, 2, 1};
  std::vector<Parameter*> params = model.parameters();
  double err = grad_check(
      [&](Tape& t) {
        return model.loss_graph(t, features, bank, tokens, targets);
      },
      params);
  CHECK(err < 1e-4);
}
