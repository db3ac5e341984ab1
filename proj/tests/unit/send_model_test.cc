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

#include <cmath>
#include <random>

#include <doctest.h>

#include "send/common.h"
#include "send/train.h"
#include "support/test_util.h"

using namespace send;
using send::testing::random_tensor;

namespace {

SendConfig small_config(HeadType head, PostNetKind post_net) {
  SendConfig c;
  c.feature_dim = 8;
  c.embedding_dim = 8;
  c.encoding_dim = 8;
  c.capacity = 4;
  c.max_overlap = 2;
  c.metric = SimilarityMetric::kSigmaDot;
  c.head = head;
  c.post_net = post_net;
  c.speech_encoder = {1, 8, 3, 8};
  c.speaker_encoder_hidden = {8};
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

TEST_CASE("config validation: pse without a post-net is rejected") {
  SendConfig c = small_config(HeadType::kPse, PostNetKind::kNone);
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  CHECK_NOTHROW(small_config(HeadType::kMultilabel, PostNetKind::kNone)
                    .validate());
  CHECK(small_config(HeadType::kPse, PostNetKind::kFcn).num_classes() == 11);
  CHECK(small_config(HeadType::kMultilabel, PostNetKind::kNone).num_classes() ==
        4);
}

TEST_CASE("augment_bank composition and reproducibility") {
  std::mt19937_64 rng(3);
  std::vector<std::vector<double>> positives{{1, 0, 0}, {0, 1, 0}};
  std::vector<std::vector<double>> pool;
  for (int i = 0; i < 10; ++i) pool.push_back({0.1 * i, 0.2, 0.3});

  // Positives fill all slots: no negatives, no zeros.
  std::vector<std::vector<double>> four{{1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                                        {1, 1, 0}};
  SpeakerBank full = augment_bank(four, pool, 4, rng);
  for (SlotRole r : full.roles) CHECK(r == SlotRole::kPositive);

  // Empty pool: all padding is zero slots.
  SpeakerBank no_neg = augment_bank(positives, {}, 4, rng);
  int zeros = 0;
  for (size_t s = 0; s < no_neg.roles.size(); ++s) {
    if (no_neg.roles[s] == SlotRole::kZero) {
      ++zeros;
      for (int64_t d = 0; d < 3; ++d) {
        CHECK(no_neg.embeddings.at(static_cast<int64_t>(s), d) == 0.0);
      }
    }
  }
  CHECK(zeros == 2);

  // Fixed seed: reproducible bank with 2 positives, m in {0, 1, 2} negatives.
  std::mt19937_64 ra(77), rb(77);
  SpeakerBank a = augment_bank(positives, pool, 4, ra);
  SpeakerBank b = augment_bank(positives, pool, 4, rb);
  CHECK(a.roles == b.roles);
  CHECK(a.positive_slots == b.positive_slots);
  for (int64_t i = 0; i < a.embeddings.size(); ++i) {
    CHECK(a.embeddings.at(i) == b.embeddings.at(i));
  }
  int positives_seen = 0, negatives_seen = 0;
  for (SlotRole r : a.roles) {
    positives_seen += r == SlotRole::kPositive ? 1 : 0;
    negatives_seen += r == SlotRole::kNegative ? 1 : 0;
  }
  CHECK(positives_seen == 2);
  CHECK(negatives_seen >= 0);
  CHECK(negatives_seen <= 2);
  // Positive slots point back at the positive embeddings, in input order.
  for (size_t i = 0; i < positives.size(); ++i) {
    int slot = a.positive_slots[i];
    for (int64_t d = 0; d < 3; ++d) {
      CHECK(a.embeddings.at(slot, d) == positives[i][d]);
    }
  }

  CHECK_THROWS_AS(augment_bank(four, pool, 3, rng), InvalidInput);
  CHECK_THROWS_AS(augment_bank({}, pool, 3, rng), InvalidInput);
}

TEST_CASE("cluster_centers") {
  std::vector<std::vector<double>> embeddings{{0, 0}, {2, 2}, {5, 1}};
  // One embedding per cluster: identity in first-appearance order.
  auto id = cluster_centers(embeddings, {7, 3, 9});
  CHECK(id == embeddings);

  auto same = cluster_centers({{1, 2}, {1, 2}}, {4, 4});
  CHECK(same == std::vector<std::vector<double>>{{1, 2}});

  auto mean = cluster_centers({{0, 0}, {2, 2}}, {1, 1});
  CHECK(mean == std::vector<std::vector<double>>{{1, 1}});

  CHECK_THROWS_AS(cluster_centers({}, {}), InvalidInput);
  CHECK_THROWS_AS(cluster_centers({{1}}, {1, 2}), InvalidInput);
}

TEST_CASE("zero bank with a zeroed speaker encoder gives 0.5 posteriors") {
  SendConfig cfg = small_config(HeadType::kMultilabel, PostNetKind::kNone);
  SendModel model(cfg, 1);
  for (Parameter* p : model.parameters()) {
    if (p->name.rfind("speaker", 0) == 0) p->value.fill(0.0);
  }
  std::mt19937_64 rng(5);
  SpeakerBank bank = manual_bank(Tensor({4, 8}));  // all-zero embeddings
  Tensor features = random_tensor({6, 8}, rng);
  DiarizationPosterior post = model.forward(features, bank);
  for (int64_t i = 0; i < post.probs.size(); ++i) {
    CHECK(post.probs.at(i) == doctest::Approx(0.5));
  }
}

TEST_CASE("pse posterior rows sum to one") {
  SendConfig cfg = small_config(HeadType::kPse, PostNetKind::kFsmnFcn);
  SendModel model(cfg, 2);
  std::mt19937_64 rng(7);
  SpeakerBank bank = manual_bank(random_tensor({4, 8}, rng));
  DiarizationPosterior post = model.forward(random_tensor({5, 8}, rng), bank);
  REQUIRE(post.probs.dim(1) == 11);
  for (int64_t t = 0; t < post.probs.dim(0); ++t) {
    double sum = 0.0;
    for (int64_t c = 0; c < post.probs.dim(1); ++c) sum += post.probs.at(t, c);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("multilabel head without post-net is permutation-equivariant") {
  SendConfig cfg = small_config(HeadType::kMultilabel, PostNetKind::kNone);
  SendModel model(cfg, 3);
  std::mt19937_64 rng(9);
  Tensor embeddings = random_tensor({4, 8}, rng);
  Tensor features = random_tensor({6, 8}, rng);
  DiarizationPosterior base =
      model.forward(features, manual_bank(embeddings));

  std::vector<int64_t> perm{2, 0, 3, 1};
  Tensor permuted({4, 8});
  for (int64_t r = 0; r < 4; ++r) {
    for (int64_t d = 0; d < 8; ++d) permuted.at(r, d) = embeddings.at(perm[r], d);
  }
  DiarizationPosterior shuffled =
      model.forward(features, manual_bank(permuted));
  for (int64_t t = 0; t < 6; ++t) {
    for (int64_t n = 0; n < 4; ++n) {
      CHECK(shuffled.probs.at(t, n) ==
            doctest::Approx(base.probs.at(t, perm[n])));
    }
  }
}

TEST_CASE("posteriors for identical frames are identical (frame factorization)") {
  SendConfig cfg = small_config(HeadType::kPse, PostNetKind::kFcn);
  // Frame-local head and filter_size 1 keep frames fully independent.
  cfg.speech_encoder = {1, 8, 1, 8};
  SendModel model(cfg, 11);
  std::mt19937_64 rng(13);
  SpeakerBank bank = manual_bank(random_tensor({4, 8}, rng));
  Tensor features({4, 8});
  Tensor row = random_tensor({1, 8}, rng);
  for (int64_t t = 0; t < 4; ++t) {
    for (int64_t d = 0; d < 8; ++d) features.at(t, d) = row.at(0, d);
  }
  DiarizationPosterior post = model.forward(features, bank);
  for (int64_t t = 1; t < 4; ++t) {
    for (int64_t c = 0; c < post.probs.dim(1); ++c) {
      CHECK(post.probs.at(t, c) == doctest::Approx(post.probs.at(0, c)));
    }
  }
}

TEST_CASE("decode_frames: pse argmax, ties, and overlap cap") {
  ValidLabelTable table = build_valid_table(2, 4);
  DiarizationPosterior post;
  post.head = HeadType::kPse;
  post.probs = Tensor({3, 11});
  post.probs.at(0, 0) = 1.0;               // silence
  post.probs.at(1, 0) = 0.4;               // exact tie class 0 vs 1
  post.probs.at(1, 1) = 0.4;
  post.probs.at(2, 10) = 1.0;              // largest code
  FrameLabels labels = decode_frames(post, table);
  CHECK(labels.active_count(0) == 0);
  CHECK(labels.active_count(1) == 0);  // tie went to the lower class
  CHECK(labels.active_count(2) == 2);

  // Randomized posteriors never decode to more than max_overlap speakers.
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    DiarizationPosterior p;
    p.head = HeadType::kPse;
    p.probs = Tensor({5, 11});
    for (int64_t i = 0; i < p.probs.size(); ++i) p.probs.at(i) = unit(rng);
    FrameLabels out = decode_frames(p, table);
    for (int64_t t = 0; t < 5; ++t) CHECK(out.active_count(t) <= 2);
  }

  CHECK_THROWS_AS(decode_frames(post, table, 0.5), InvalidInput);

  DiarizationPosterior ml;
  ml.head = HeadType::kMultilabel;
  ml.probs = Tensor::from_values({1, 2}, {0.6, 0.4});
  FrameLabels decoded = decode_frames(ml, table, 0.5);
  CHECK(decoded.active(0, 0));
  CHECK(!decoded.active(0, 1));
  CHECK_THROWS_AS(decode_frames(ml, table), InvalidInput);
}

TEST_CASE("send_loss examples") {
  ValidLabelTable table = build_valid_table(2, 4);
  DiarizationPosterior perfect;
  perfect.head = HeadType::kPse;
  perfect.probs = Tensor({2, 11});
  perfect.probs.at(0, 3) = 1.0;
  perfect.probs.at(1, 0) = 1.0;
  CHECK(send_loss(perfect, PseClassSequence{3, 0}) == doctest::Approx(0.0));

  DiarizationPosterior uniform;
  uniform.head = HeadType::kPse;
  uniform.probs = Tensor::full({4, 11}, 1.0 / 11.0);
  CHECK(send_loss(uniform, PseClassSequence{0, 5, 9, 2}) ==
        doctest::Approx(std::log(11.0)));

  DiarizationPosterior half;
  half.head = HeadType::kMultilabel;
  half.probs = Tensor::full({3, 4}, 0.5);
  FrameLabels targets(3, 4);
  targets.set(0, 1, true);
  targets.set(2, 3, true);
  CHECK(send_loss(half, targets) == doctest::Approx(std::log(2.0)));

  CHECK_THROWS_AS(send_loss(perfect, PseClassSequence{1}), InvalidInput);
}

TEST_CASE("full send model passes grad_check at a random point") {
  for (HeadType head : {HeadType::kPse, HeadType::kMultilabel}) {
    SendConfig cfg = small_config(head, PostNetKind::kFsmnFcn);
    SendModel model(cfg, 17);
    std::mt19937_64 rng(19);
    SpeakerBank bank = manual_bank(random_tensor({4, 8}, rng));
    Tensor features = random_tensor({6, 8}, rng);
    PseClassSequence class_targets{0, 3, 7, 1, 0, 5};
    FrameLabels label_targets(6, 4);
    label_targets.set(1, 2, true);
    label_targets.set(4, 0, true);
    std::vector<Parameter*> params = model.parameters();
    double err = grad_check(
        [&](Tape& t) {
          if (head == HeadType::kPse) {
            return model.loss_graph(t, features, bank, class_targets);
          }
          return model.loss_graph(t, features, bank, label_targets);
        },
        params);
    INFO("head ", to_string(head));
    CHECK(err < 1e-4);
  }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  SimConfig sim;
  sim.num_samples = 3;
  sim.min_speakers = 2;
  sim.max_speakers = 2;
  sim.num_pool_speakers = 4;
  sim.min_turns = 2;
  sim.max_turns = 3;
  sim.min_turn_frames = 8;
  sim.max_turn_frames = 15;
  sim.feature_dim = 8;
  sim.embedding_dim = 8;
  sim.seed = 5;
  Dataset data = simulate_dataset(sim);

  SendConfig cfg = small_config(HeadType::kPse, PostNetKind::kFcn);
  SendModel model(cfg, 23);
  std::vector<Tensor> before;
  for (Parameter* p : model.parameters()) before.push_back(p->value);

  TrainConfig tc;
  tc.epochs = 2;
  tc.adam.peak_lr = 0.0;
  tc.seed = 1;
  train_send(model, data, data, tc);

  std::vector<Parameter*> params = model.parameters();
  for (size_t i = 0; i < params.size(); ++i) {
    for (int64_t j = 0; j < params[i]->value.size(); ++j) {
      CHECK(params[i]->value.at(j) == before[i].at(j));
    }
  }
}

TEST_CASE("training overfits a single sample") {
  SimConfig sim;
  sim.num_samples = 1;
  sim.min_speakers = 2;
  sim.max_speakers = 2;
  sim.num_pool_speakers = 4;
  sim.min_turns = 3;
  sim.max_turns = 4;
  sim.min_turn_frames = 10;
  sim.max_turn_frames = 20;
  sim.feature_dim = 8;
  sim.embedding_dim = 8;
  sim.overlap_ratio = 0.2;
  sim.seed = 7;
  Dataset data = simulate_dataset(sim);

  SendConfig cfg = small_config(HeadType::kPse, PostNetKind::kFsmnFcn);
  SendModel model(cfg, 29);
  TrainConfig tc;
  tc.epochs = 600;
  tc.adam.peak_lr = 6e-3;
  tc.adam.warmup_steps = 50;
  tc.seed = 2;
  tc.bank_augmentation = false;  // fixed banks for the pure overfit check
  TrainReport report = train_send(model, data, data, tc);
  CHECK(report.epochs.back().mean_loss < 0.01);
  CHECK(report.epochs.back().mean_loss < report.epochs.front().mean_loss);
}

TEST_CASE("model save and load reproduce the posterior exactly") {
  SendConfig cfg = small_config(HeadType::kPse, PostNetKind::kFsmnFcn);
  SendModel model(cfg, 31);
  std::mt19937_64 rng(33);
  SpeakerBank bank = manual_bank(random_tensor({4, 8}, rng));
  Tensor features = random_tensor({5, 8}, rng);
  DiarizationPosterior before = model.forward(features, bank);

  std::string path = "/tmp/send_test_model_ckpt.bin";
  model.save(path);
  SendModel reloaded(cfg, 999);  // different init, then overwritten by load
  reloaded.load(path);
  DiarizationPosterior after = reloaded.forward(features, bank);
  for (int64_t i = 0; i < before.probs.size(); ++i) {
    CHECK(after.probs.at(i) == before.probs.at(i));
  }
  std::remove(path.c_str());
  std::remove((path + ".manifest").c_str());
}
