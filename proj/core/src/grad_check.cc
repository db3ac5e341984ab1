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

#include <algorithm>
#include <cmath>

#include "send/autodiff.h"
#include "send/common.h"

namespace send {

namespace {

double eval_loss(const std::function<Var(Tape&)>& build_loss) {
  Tape tape;
  Var loss = build_loss(tape);
  const Tensor& v = tape.value(loss);
  if (v.size() != 1) {
    throw InvalidInput("grad_check: loss builder did not return a scalar");
  }
  return v.at(0);
}

}  // namespace

double grad_check(const std::function<Var(Tape&)>& build_loss,
                  std::span<Parameter* const> params, double epsilon) {
  if (epsilon <= 0.0) {
    throw InvalidInput("grad_check: epsilon must be positive");
  }
  if (params.empty()) return 0.0;

  for (Parameter* p : params) p->zero_grad();
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  {
    Tape tape;
    Var loss = build_loss(tape);
    tape.backward(loss);
    for (Parameter* p : params) analytic.push_back(p->grad);
  }

  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Parameter* p = params[pi];
    for (int64_t i = 0; i < p->value.size(); ++i) {
      double saved = p->value.at(i);
      p->value.at(i) = saved + epsilon;
      double up = eval_loss(build_loss);
      p->value.at(i) = saved - epsilon;
      double down = eval_loss(build_loss);
      p->value.at(i) = saved;
      double central = (up - down) / (2.0 * epsilon);
      double a = analytic[pi].at(i);
      double rel = std::abs(a - central) /
                   std::max({std::abs(a), std::abs(central), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace send
