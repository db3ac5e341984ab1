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

#include "send/tensor.h"

#include <cmath>
#include <sstream>

#include "send/common.h"

namespace send {

namespace {

int64_t checked_numel(const std::vector<int64_t>& shape) {
  if (shape.empty()) {
    throw InvalidInput("tensor shape must have at least one dimension");
  }
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) {
      throw InvalidInput("tensor dimensions must be positive");
    }
    n *= d;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int64_t> shape) {
  int64_t n = checked_numel(shape);
  shape_ = std::move(shape);
  data_.assign(static_cast<size_t>(n), 0.0);
}

Tensor Tensor::from_values(std::vector<int64_t> shape,
                           std::vector<double> values) {
  int64_t n = checked_numel(shape);
  if (n != static_cast<int64_t>(values.size())) {
    std::ostringstream os;
    os << "tensor value count " << values.size()
       << " does not match shape product " << n;
    throw InvalidInput(os.str());
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw InvalidInput("tensor values must be finite");
    }
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::full(std::vector<int64_t> shape, double value) {
  if (!std::isfinite(value)) {
    throw InvalidInput("tensor fill value must be finite");
  }
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::row_vector(std::vector<double> values) {
  return from_values({static_cast<int64_t>(values.size())}, std::move(values));
}

Tensor Tensor::scalar(double value) { return from_values({1}, {value}); }

std::string Tensor::shape_str() const {
  std::ostringstream os;
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  return os.str();
}

int64_t Tensor::rows() const { return ndim() >= 2 ? shape_[0] : 1; }

int64_t Tensor::cols() const {
  return ndim() >= 2 ? shape_[shape_.size() - 1] : shape_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

}  // namespace send
