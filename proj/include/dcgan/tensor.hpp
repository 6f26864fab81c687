// Copyright 2026 The lesion-dcgan Authors
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

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcgan/error.hpp"

namespace dcgan {

/// Ordered list of positive extents. Images are [height, width, channels].
class Shape {
 public:
  Shape() : dims_{1} {}
  Shape(std::initializer_list<std::size_t> dims) : dims_(dims) { validate(); }
  explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    validate();
  }

  std::size_t rank() const { return dims_.size(); }
  std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
  const std::vector<std::size_t>& dims() const { return dims_; }

  std::size_t element_count() const {
    std::size_t count = 1;
    for (auto d : dims_) count *= d;
    return count;
  }

  std::string to_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(dims_[i]);
    }
    return s + "]";
  }

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  void validate() const {
    if (dims_.empty()) throw ShapeError("shape must have at least one dim");
    for (auto d : dims_) {
      if (d == 0) throw ShapeError("shape " + to_string() + " has a zero dim");
    }
  }

  std::vector<std::size_t> dims_;
};

/// Dense row-major array of doubles.
///
/// Operations below allocate fresh outputs; a tensor is only mutated through
/// `mutable_data()` while it is being built.
class Tensor {
 public:
  Tensor() : data_(1, 0.0) {}

  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.element_count()) {
      throw ShapeError("tensor of shape " + shape_.to_string() + " expects " +
                       std::to_string(shape_.element_count()) +
                       " elements, got " + std::to_string(data_.size()));
    }
  }

  static Tensor zeros(Shape shape) { return filled(std::move(shape), 0.0); }

  static Tensor filled(Shape shape, double value) {
    const auto n = shape.element_count();
    return Tensor(std::move(shape), std::vector<double>(n, value));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.rank(); }
  std::size_t dim(std::size_t axis) const { return shape_[axis]; }
  std::size_t size() const { return data_.size(); }

  // Spans into a temporary would dangle, so these are lvalue-only.
  std::span<const double> data() const& { return data_; }
  std::span<const double> data() const&& = delete;
  std::span<double> mutable_data() & { return data_; }
  const std::vector<double>& values() const& { return data_; }
  std::vector<double> values() && { return std::move(data_); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  /// Multi-index access, row-major.
  double at(std::initializer_list<std::size_t> index) const {
    return data_[offset(index)];
  }
  double& at(std::initializer_list<std::size_t> index) {
    return data_[offset(index)];
  }

  /// Bitwise equality of shape and payload.
  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape_.rank()) {
      throw ShapeError("index rank " + std::to_string(index.size()) +
                       " does not match shape " + shape_.to_string());
    }
    std::size_t off = 0;
    std::size_t axis = 0;
    for (auto i : index) {
      if (i >= shape_[axis]) {
        throw ShapeError("index out of range for shape " + shape_.to_string());
      }
      off = off * shape_[axis] + i;
      ++axis;
    }
    return off;
  }

  Shape shape_;
  std::vector<double> data_;
};

inline Tensor tensor_new(Shape shape, std::span<const double> data) {
  return Tensor(std::move(shape), std::vector<double>(data.begin(), data.end()));
}

inline Tensor reshape(const Tensor& t, Shape new_shape) {
  if (new_shape.element_count() != t.size()) {
    throw ShapeError("cannot reshape " + t.shape().to_string() + " to " +
                     new_shape.to_string());
  }
  return Tensor(std::move(new_shape), t.values());
}

inline Tensor elementwise(const Tensor& t, const std::function<double(double)>& f) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(t[i]);
  return Tensor(t.shape(), std::move(out));
}

inline void require_same_shape(const Tensor& a, const Tensor& b,
                               const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     a.shape().to_string() + " vs " + b.shape().to_string());
  }
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return Tensor(a.shape(), std::move(out));
}

inline Tensor subtract(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "subtract");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return Tensor(a.shape(), std::move(out));
}

inline Tensor multiply(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "multiply");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return Tensor(a.shape(), std::move(out));
}

inline Tensor scale(const Tensor& t, double c) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t[i] * c;
  return Tensor(t.shape(), std::move(out));
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + a.shape().to_string() +
                     " and " + b.shape().to_string());
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b.data().data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return Tensor(Shape{m, n}, std::move(out));
}

inline double reduce_sum(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s;
}

inline double reduce_mean(const Tensor& t) {
  // Constant tensors return the constant exactly.
  const double first = t[0];
  bool constant = true;
  for (double v : t.data()) constant = constant && v == first;
  if (constant) return first;
  return reduce_sum(t) / static_cast<double>(t.size());
}

inline double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace dcgan
