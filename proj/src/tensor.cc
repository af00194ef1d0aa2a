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

#include "uncm/tensor.h"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <utility>

#include "uncm/errors.h"

namespace uncm::nn {

namespace {

std::size_t Product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void CheckShape(const std::vector<std::size_t>& shape) {
  for (std::size_t d : shape) {
    if (d == 0) {
      throw ShapeError("tensor dimensions must be positive, got " +
                       nn::ShapeString(shape));
    }
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  CheckShape(shape_);
  data_.assign(Product(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  CheckShape(shape_);
  if (Product(shape_) != data_.size()) {
    throw ShapeError("tensor shape " + nn::ShapeString(shape_) + " needs " +
                     std::to_string(Product(shape_)) + " values, got " +
                     std::to_string(data_.size()));
  }
}

Tensor Tensor::Zeros(std::size_t rows, std::size_t cols) {
  return Tensor({rows, cols});
}

Tensor Tensor::Filled(std::size_t rows, std::size_t cols, double value) {
  Tensor t({rows, cols});
  t.Fill(value);
  return t;
}

Tensor Tensor::Scalar(double value) { return Tensor({1, 1}, {value}); }

Tensor Tensor::Row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::Matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  if (shape_.size() == 2) return shape_[0];
  throw ShapeError("rows() requires rank <= 2, got " + nn::ShapeString(shape_));
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 1) return shape_[0];
  if (shape_.size() == 2) return shape_[1];
  throw ShapeError("cols() requires rank <= 2, got " + nn::ShapeString(shape_));
}

bool Tensor::SameShape(const Tensor& other) const {
  if (shape_ == other.shape_) return true;
  if (shape_.size() <= 2 && other.shape_.size() <= 2 && !empty() &&
      !other.empty()) {
    return rows() == other.rows() && cols() == other.cols();
  }
  return false;
}

void Tensor::CheckFinite(std::string_view what) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      std::ostringstream os;
      os << "non-finite value " << data_[i] << " at index " << i << " of "
         << what << " " << nn::ShapeString(shape_);
      throw NonFiniteError(os.str());
    }
  }
}

void Tensor::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

std::string Tensor::ShapeString() const { return nn::ShapeString(shape_); }

std::string ShapeString(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

double L2Norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

}  // namespace uncm::nn
