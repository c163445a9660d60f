// Copyright (c) 2025 The memo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "memo/errors.hpp"

namespace memo {

using Index = std::int64_t;

// Dense row-major matrix. Rows are positions, columns are vector
// components, throughout the library.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(Index rows, Index cols)
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows * cols), T{}) {
    if (rows < 0 || cols < 0) throw ParameterError("negative matrix dims");
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index size() const { return rows_ * cols_; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator()(Index r, Index c) { return data_[idx(r, c)]; }
  const T& operator()(Index r, Index c) const { return data_[idx(r, c)]; }

  std::span<T> row(Index r) {
    return {data_.data() + r * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<const T> row(Index r) const {
    return {data_.data() + r * cols_, static_cast<std::size_t>(cols_)};
  }

  // Reinterprets the buffer with new dims; element count must not change.
  void reshape(Index rows, Index cols) {
    if (rows * cols != rows_ * cols_)
      throw ShapeError("reshape changes element count");
    rows_ = rows;
    cols_ = cols;
  }

  void fill(T v) { data_.assign(data_.size(), v); }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t idx(Index r, Index c) const {
    return static_cast<std::size_t>(r * cols_ + c);
  }

  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<T> data_;
};

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;

}  // namespace memo
