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

#include "send/autodiff.h"

#include <cmath>
#include <cstdio>
#include <random>

#include <doctest.h>

#include "send/checkpoint.h"
#include "send/common.h"
#include "support/test_util.h"

using namespace send;
using send::testing::random_tensor;

namespace {

Parameter make_param(const std::string& name, std::vector<int64_t> shape,
                     std::mt19937_64& rng, double scale = 0.8) {
  return Parameter(name, random_tensor(std::move(shape), rng, scale));
}

}  // namespace

TEST_CASE("sum of squares gradient is 2x") {
  Parameter p("p", Tensor::from_values({1}, {3.0}));
  Tape tape;
  Var loss = tape.sum(tape.mul(tape.param(p), tape.param(p)));
  double value = forward_backward(tape, loss);
  CHECK(value == doctest::Approx(9.0));
  CHECK(p.grad.at(0) == doctest::Approx(6.0));
}

TEST_CASE("constant loss leaves all gradients zero") {
  Parameter p("p", Tensor::from_values({3}, {1.0, -2.0, 0.5}));
  Tape tape;
  tape.param(p);  // on the tape but unused by the loss
  Var loss = tape.sum(tape.constant(Tensor::scalar(5.0)));
  forward_backward(tape, loss);
  for (int i = 0; i < 3; ++i) CHECK(p.grad.at(i) == 0.0);
}

TEST_CASE("tanh gradient at zero is one") {
  Parameter p("p", Tensor::from_values({1}, {0.0}));
  Tape tape;
  Var loss = tape.sum(tape.tanh(tape.param(p)));
  forward_backward(tape, loss);
  CHECK(p.grad.at(0) == doctest::Approx(1.0));
}

TEST_CASE("backward rejects non-scalar loss and names shape offenders") {
  Parameter p("weights", Tensor({2, 2}));
  Tape tape;
  Var w = tape.param(p);
  CHECK_THROWS_AS(tape.backward(w), InvalidInput);

  Tape tape2;
  Var a = tape2.constant(Tensor({2, 3}), "lhs");
  Var b = tape2.constant(Tensor({4, 5}), "rhs");
  try {
    tape2.matmul(a, b);
    FAIL("expected a shape error");
  } catch (const InvalidInput& e) {
    std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("lhs") != std::string::npos);
    CHECK(msg.find("rhs") != std::string::npos);
  }
}

TEST_CASE("grad_check: quadratic is exact under central differences") {
  std::mt19937_64 rng(7);
  Parameter p = make_param("p", {4}, rng);
  Parameter q = make_param("q", {4}, rng);
  std::vector<Parameter*> params{&p, &q};
  // quadratic in the parameters -> error is pure roundoff
  double err = grad_check(
      [&](Tape& t) {
        return t.sum(t.mul(t.add(t.param(p), t.param(q)),
                           t.add(t.param(p), t.param(q))));
      },
      params);
  CHECK(err < 1e-6);
}

TEST_CASE("grad_check: zero-parameter graph returns 0") {
  double err = grad_check(
      [](Tape& t) { return t.sum(t.constant(Tensor::scalar(3.0))); }, {});
  CHECK(err == 0.0);
}

TEST_CASE("every primitive passes grad_check at random points") {
  // 100 random points spread across the primitive set (spec invariant).
  int points = 0;
  for (uint64_t seed = 0; seed < 9; ++seed) {
    std::mt19937_64 rng(seed * 1299721 + 17);
    Parameter x = make_param("x", {4, 3}, rng);
    Parameter y = make_param("y", {4, 3}, rng);
    Parameter w = make_param("w", {3, 5}, rng);
    Parameter row = make_param("row", {3}, rng);
    Parameter taps = make_param("taps", {3, 3}, rng);
    Parameter gain = make_param("gain", {3}, rng, 0.4);
    Parameter bias = make_param("bias", {3}, rng, 0.4);
    Parameter table = make_param("table", {6, 3}, rng);

    struct Case {
      const char* name;
      std::function<Var(Tape&)> build;
      std::vector<Parameter*> params;
    };
    std::vector<Case> cases;
    cases.push_back({"matmul",
                     [&](Tape& t) {
                       return t.sum(t.tanh(t.matmul(t.param(x), t.param(w))));
                     },
                     {&x, &w}});
    cases.push_back({"matmul_tt",
                     [&](Tape& t) {
                       return t.sum(t.tanh(
                           t.matmul(t.param(w), t.param(x), true, true)));
                     },
                     {&x, &w}});
    cases.push_back({"add_mul",
                     [&](Tape& t) {
                       return t.mean(t.mul(t.add(t.param(x), t.param(y)),
                                           t.param(y)));
                     },
                     {&x, &y}});
    cases.push_back({"add_row_broadcast",
                     [&](Tape& t) {
                       return t.sum(t.tanh(
                           t.add_row_broadcast(t.param(x), t.param(row))));
                     },
                     {&x, &row}});
    cases.push_back({"scale_sigmoid",
                     [&](Tape& t) {
                       return t.sum(t.sigmoid(t.scale(t.param(x), 1.7)));
                     },
                     {&x}});
    cases.push_back({"row_softmax",
                     [&](Tape& t) {
                       return t.sum(
                           t.mul(t.row_softmax(t.param(x)), t.param(y)));
                     },
                     {&x, &y}});
    cases.push_back({"row_l2_normalize",
                     [&](Tape& t) {
                       return t.sum(
                           t.mul(t.row_l2_normalize(t.param(x)), t.param(y)));
                     },
                     {&x, &y}});
    cases.push_back({"seq_conv1d",
                     [&](Tape& t) {
                       return t.sum(
                           t.tanh(t.seq_conv1d(t.param(x), t.param(taps))));
                     },
                     {&x, &taps}});
    cases.push_back(
        {"layer_norm",
         [&](Tape& t) {
           return t.sum(t.mul(
               t.layer_norm(t.param(x), t.param(gain), t.param(bias)),
               t.param(y)));
         },
         {&x, &gain, &bias, &y}});
    cases.push_back({"lookup_rows",
                     [&](Tape& t) {
                       return t.sum(t.tanh(
                           t.lookup_rows(t.param(table), {0, 3, 5, 3})));
                     },
                     {&table}});
    cases.push_back({"concat_cols",
                     [&](Tape& t) {
                       return t.sum(t.tanh(t.concat_cols(
                           {t.param(x), t.mul(t.param(x), t.param(y))})));
                     },
                     {&x, &y}});
    cases.push_back({"softmax_cross_entropy",
                     [&](Tape& t) {
                       return t.softmax_cross_entropy(
                           t.matmul(t.param(x), t.param(w)), {0, 2, 4, 1});
                     },
                     {&x, &w}});
    cases.push_back({"sigmoid_binary_cross_entropy",
                     [&](Tape& t) {
                       Tensor targets({4, 3});
                       for (int64_t i = 0; i < targets.size(); ++i) {
                         targets.at(i) = (i % 2 == 0) ? 1.0 : 0.0;
                       }
                       return t.sigmoid_binary_cross_entropy(
                           t.add(t.param(x), t.param(y)), targets);
                     },
                     {&x, &y}});

    for (const Case& c : cases) {
      double err = grad_check(c.build, c.params);
      INFO("primitive ", c.name, " seed ", seed);
      CHECK(err < 1e-4);
      ++points;
    }
  }
  CHECK(points >= 100);
}

TEST_CASE("forward_backward is deterministic for identical inputs") {
  auto run = [] {
    std::mt19937_64 rng(99);
    Parameter x = make_param("x", {5, 4}, rng);
    Parameter w = make_param("w", {4, 3}, rng);
    Tape tape;
    Var loss = tape.softmax_cross_entropy(
        tape.matmul(tape.tanh(tape.param(x)), tape.param(w)),
        {0, 1, 2, 0, 1});
    tape.backward(loss);
    std::vector<double> out(w.grad.values().begin(), w.grad.values().end());
    out.push_back(tape.value(loss).at(0));
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("softmax: uniform, saturation, shift invariance, simplex") {
  std::vector<double> u = softmax(std::vector<double>{0, 0, 0, 0});
  for (double v : u) CHECK(v == doctest::Approx(0.25));

  std::vector<double> s = softmax(std::vector<double>{1000.0, 0.0});
  CHECK(s[0] == doctest::Approx(1.0));
  CHECK(s[1] == doctest::Approx(0.0));

  std::vector<double> a = softmax(std::vector<double>{0.3, -1.2, 2.0});
  std::vector<double> b = softmax(std::vector<double>{0.3 + 7.5, -1.2 + 7.5,
                                                      2.0 + 7.5});
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> wild(-500.0, 500.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> logits(5);
    for (double& v : logits) v = wild(rng);
    std::vector<double> p = softmax(logits);
    double total = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("cross_entropy examples") {
  CHECK(cross_entropy(std::vector<double>{0.0, 1.0, 0.0}, 1) ==
        doctest::Approx(0.0));
  CHECK(cross_entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}, 2) ==
        doctest::Approx(std::log(4.0)));
  CHECK(cross_entropy(std::vector<double>{0.5, 0.5}, 0) ==
        doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(cross_entropy(std::vector<double>{0.5, 0.5}, 2),
                  InvalidInput);
  CHECK_THROWS_AS(cross_entropy(std::vector<double>{0.5, 0.5}, -1),
                  InvalidInput);
}

TEST_CASE("fused softmax cross-entropy is stable at saturated logits") {
  Parameter p("p", Tensor::from_values({1, 2}, {1000.0, -1000.0}));
  Tape tape;
  Var loss = tape.softmax_cross_entropy(tape.param(p), {0});
  double value = tape.backward(loss);
  CHECK(std::isfinite(value));
  CHECK(value == doctest::Approx(0.0));
  CHECK(std::isfinite(p.grad.at(0)));
}

TEST_CASE("checkpoint round trip and error paths") {
  std::mt19937_64 rng(21);
  Parameter a = make_param("enc.w", {3, 4}, rng);
  Parameter b = make_param("enc.b", {4}, rng);
  std::string path = "/tmp/send_test_checkpoint.bin";
  {
    std::vector<Parameter*> params{&a, &b};
    save_checkpoint(path, params);
  }
  Parameter a2("enc.w", Tensor({3, 4}));
  Parameter b2("enc.b", Tensor({4}));
  {
    std::vector<Parameter*> params{&a2, &b2};
    load_checkpoint(path, params);
  }
  for (int64_t i = 0; i < a.value.size(); ++i) {
    CHECK(a2.value.at(i) == a.value.at(i));  // bit-exact round trip
  }
  for (int64_t i = 0; i < b.value.size(); ++i) {
    CHECK(b2.value.at(i) == b.value.at(i));
  }

  Parameter missing("enc.other", Tensor({2}));
  std::vector<Parameter*> bad{&missing};
  CHECK_THROWS_AS(load_checkpoint(path, bad), InvalidInput);

  Parameter wrong_shape("enc.w", Tensor({4, 3}));
  std::vector<Parameter*> bad2{&wrong_shape};
  CHECK_THROWS_AS(load_checkpoint(path, bad2), InvalidInput);
  std::remove(path.c_str());
  std::remove((path + ".manifest").c_str());
}
