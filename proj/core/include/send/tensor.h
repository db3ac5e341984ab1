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

#ifndef SEND_TENSOR_H_
#define SEND_TENSOR_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace send {

// Dense row-major tensor of 64-bit reals. Rank is arbitrary but everything in
// this codebase is rank 1 (vectors) or rank 2 (sequences, matrices).
// Dimensions must be positive; zero-sized tensors do not exist.
class Tensor {
 public:
  Tensor() = default;
  // Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<int64_t> shape);

  // Constructors for values arriving from outside the math core. These reject
  // NaN/Inf; internal graph ops write through data() without re-checking.
  static Tensor from_values(std::vector<int64_t> shape,
                            std::vector<double> values);
  static Tensor full(std::vector<int64_t> shape, double value);
  static Tensor row_vector(std::vector<double> values);
  static Tensor scalar(double value);

  int64_t ndim() const { return static_cast<int64_t>(shape_.size()); }
  int64_t dim(int64_t i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  const std::vector<int64_t>& shape() const { return shape_; }
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool empty() const { return data_.empty(); }
  std::string shape_str() const;  // e.g. "8x16"

  // Rows/cols of a rank-2 tensor; a rank-1 tensor counts as one row.
  int64_t rows() const;
  int64_t cols() const;

  double at(int64_t i) const { return data_[static_cast<size_t>(i)]; }
  double& at(int64_t i) { return data_[static_cast<size_t>(i)]; }
  double at(int64_t r, int64_t c) const {
    return data_[static_cast<size_t>(r * cols() + c)];
  }
  double& at(int64_t r, int64_t c) {
    return data_[static_cast<size_t>(r * cols() + c)];
  }
  std::span<const double> row(int64_t r) const {
    return {data_.data() + r * cols(), static_cast<size_t>(cols())};
  }
  std::span<double> row(int64_t r) {
    return {data_.data() + r * cols(), static_cast<size_t>(cols())};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<const double> values() const { return {data_.data(), data_.size()}; }

  bool all_finite() const;
  void fill(double v);

 private:
  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

}  // namespace send

#endif  // SEND_TENSOR_H_
