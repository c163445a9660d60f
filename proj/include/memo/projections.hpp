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

#include <cmath>
#include <cstdint>
#include <vector>

#include "memo/errors.hpp"
#include "memo/kernels.hpp"
#include "memo/matrix.hpp"
#include "memo/rng.hpp"

namespace memo {

// Reshapes k x w into (k/h) x (w*h): output row r is the concatenation of
// input rows r*h .. r*h+h-1. Row-major storage makes this a pure
// reinterpretation of the same buffer.
template <class T>
Matrix<T> flat_h(Matrix<T> m, Index h) {
  if (h < 1) throw ParameterError("flat_h: h must be >= 1");
  if (m.rows() % h != 0)
    throw ShapeError("flat_h: row count " + std::to_string(m.rows()) +
                     " not divisible by h=" + std::to_string(h));
  m.reshape(m.rows() / h, m.cols() * h);
  return m;
}

// Inverse of flat_h.
template <class T>
Matrix<T> split_h(Matrix<T> m, Index h) {
  if (m.cols() % h != 0) throw ShapeError("split_h: width not divisible");
  m.reshape(m.rows() * h, m.cols() / h);
  return m;
}

// Per-layer random projections: W_V reduces token/code vectors to the d/h
// per-head space, Prj encodes a flattened h-tuple back into d dimensions.
// Variances are picked so that unit inputs keep their scale: W_V entries
// are N(0, 1/d), giving E||W_V^T x||^2 = 1/h per head, and Prj entries are
// N(0, 1/(h d)), giving unit-norm sequence codes from h concatenated
// unit vectors.
template <class T>
class ProjectionSet {
 public:
  ProjectionSet(Index h, Index l, Index d, std::uint64_t seed)
      : h_(h), l_(l), d_(d), seed_(seed) {
    if (h < 1) throw ParameterError("projections: h must be >= 1");
    if (l < 1) throw ParameterError("projections: l must be >= 1");
    if (d < 2 || d % h != 0)
      throw ParameterError("projections: d must be >= 2 and divisible by h");
    wv_.reserve(l);
    prj_.reserve(l);
    for (Index i = 0; i < l; ++i) {
      wv_.push_back(make_wv(h, d, seed, i));
      prj_.push_back(make_prj(h, d, seed, i));
    }
  }

  // d x (d/h), layer-indexed stream so layers are independent.
  static Matrix<T> make_wv(Index h, Index d, std::uint64_t seed,
                           Index layer) {
    Matrix<T> w(d, d / h);
    RandomStream rng(seed,
                     streams::kWv + static_cast<std::uint32_t>(layer));
    rng.fill_gaussian(std::span<T>(w.data(), w.size()),
                      1.0 / std::sqrt(static_cast<double>(d)));
    return w;
  }

  // (h*d) x d.
  static Matrix<T> make_prj(Index h, Index d, std::uint64_t seed,
                            Index layer) {
    Matrix<T> p(h * d, d);
    RandomStream rng(seed,
                     streams::kPrj + static_cast<std::uint32_t>(layer));
    rng.fill_gaussian(std::span<T>(p.data(), p.size()),
                      1.0 / std::sqrt(static_cast<double>(h * d)));
    return p;
  }

  Index heads() const { return h_; }
  Index layer_count() const { return l_; }
  Index dim() const { return d_; }
  std::uint64_t seed() const { return seed_; }

  const Matrix<T>& wv(Index layer) const { return wv_.at(layer); }
  const Matrix<T>& prj(Index layer) const { return prj_.at(layer); }

  // batch (k x d) -> (k x d/h).
  Matrix<T> apply_wv(const Matrix<T>& batch, Index layer) const {
    if (batch.cols() != d_)
      throw ShapeError("apply_wv: batch width " +
                       std::to_string(batch.cols()) + " != d");
    return kernels::gemm(batch, wv_.at(layer));
  }

  // flattened batch (k x h*d) -> (k x d).
  Matrix<T> apply_prj(const Matrix<T>& flat, Index layer) const {
    if (flat.cols() != h_ * d_)
      throw ShapeError("apply_prj: width " + std::to_string(flat.cols()) +
                       " != h*d");
    return kernels::gemm(flat, prj_.at(layer));
  }

 private:
  Index h_;
  Index l_;
  Index d_;
  std::uint64_t seed_;
  std::vector<Matrix<T>> wv_;
  std::vector<Matrix<T>> prj_;
};

// From a window batch of m+1 token vectors, selects the vector following
// each aligned chunk of length h^level: output row k is input row
// (k+1)*h^level. These are the next-token targets paired with level-`level`
// sequence keys.
template <class T>
Matrix<T> sel_next(const Matrix<T>& tokens, Index level, Index h) {
  if (level < 1) throw ParameterError("sel_next: level must be >= 1");
  Index step = 1;
  for (Index i = 0; i < level; ++i) step *= h;
  const Index m = tokens.rows() - 1;
  if (m < step)
    throw ShapeError("sel_next: need at least h^level + 1 rows");
  const Index out_rows = m / step;
  Matrix<T> out(out_rows, tokens.cols());
  for (Index k = 0; k < out_rows; ++k) {
    auto src = tokens.row((k + 1) * step);
    auto dst = out.row(k);
    for (Index j = 0; j < tokens.cols(); ++j) dst[j] = src[j];
  }
  return out;
}

}  // namespace memo
