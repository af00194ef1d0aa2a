// Copyright 2026 The UNCM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UNCM_TENSOR_H_
#define UNCM_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uncm::nn {

// Dense row-major array of doubles. Every op in the library works on rank-1
// or rank-2 arrays; a rank-1 array of length n behaves as a 1 x n row.
class Tensor {
 public:
  Tensor() = default;
  // Zero-filled array of the given shape.
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor Zeros(std::size_t rows, std::size_t cols);
  static Tensor Filled(std::size_t rows, std::size_t cols, double value);
  static Tensor Scalar(double value);
  static Tensor Row(std::vector<double> values);
  static Tensor Matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Requires rank <= 2.
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols(), cols());
  }

  bool SameShape(const Tensor& other) const;
  // Throws NonFiniteError naming `what` when any element is NaN or Inf.
  void CheckFinite(std::string_view what) const;
  void Fill(double value);

  std::string ShapeString() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string ShapeString(const std::vector<std::size_t>& shape);

double L2Norm(std::span<const double> v);

}  // namespace uncm::nn

#endif  // UNCM_TENSOR_H_
