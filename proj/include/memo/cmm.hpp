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

namespace memo {

// Diagonal of per-row store multipliers (the Phi gate). Entries are 0, 1,
// or 1/f for integer f >= 1.
template <class T>
struct GateDiagonal {
  std::vector<T> entries;

  GateDiagonal& operator*=(const GateDiagonal& o) {
    if (entries.size() != o.entries.size())
      throw ShapeError("gate sizes differ");
    for (std::size_t i = 0; i < entries.size(); ++i)
      entries[i] *= o.entries[i];
    return *this;
  }
};

// Correlation matrix memory: a dk x dv accumulator of key-value outer
// products. Querying with a key whose stored twin is near-orthogonal to
// everything else returns roughly the stored value.
//
// store/forget are exclusive-writer; retrieve is const and may run
// concurrently with other retrieves.
template <class T>
class CorrelationMemory {
 public:
  CorrelationMemory(Index dk, Index dv) : dk_(dk), dv_(dv), mat_(dk, dv) {
    if (dk < 1 || dv < 1) throw ParameterError("memory dims must be >= 1");
  }

  Index key_dim() const { return dk_; }
  Index value_dim() const { return dv_; }
  const Matrix<T>& mat() const { return mat_; }
  Matrix<T>& mat() { return mat_; }
  std::int64_t stored_count() const { return stored_count_; }

  // mat += sum_r gate_r * key_r (x) value_r. Rows gated to exactly zero
  // leave the matrix bit-untouched.
  void store(const Matrix<T>& keys, const Matrix<T>& values,
             const GateDiagonal<T>* gate = nullptr) {
    check_pair(keys, values);
    if (gate && static_cast<Index>(gate->entries.size()) != keys.rows())
      throw ShapeError("gate length != row count");
    kernels::outer_accum(keys.data(), values.data(), keys.rows(), dk_, dv_,
                         gate ? gate->entries.data() : nullptr, T{1},
                         mat_.data());
    for (Index r = 0; r < keys.rows(); ++r)
      if (!gate || gate->entries[static_cast<std::size_t>(r)] != T{})
        ++stored_count_;
  }

  // mat -= sum_r key_r (x) value_r; exact inverse of an ungated store.
  void forget(const Matrix<T>& keys, const Matrix<T>& values) {
    check_pair(keys, values);
    kernels::outer_accum(keys.data(), values.data(), keys.rows(), dk_, dv_,
                         static_cast<const T*>(nullptr), T{-1}, mat_.data());
    stored_count_ -= keys.rows();
  }

  // out row r = key_r * mat.
  Matrix<T> retrieve(const Matrix<T>& keys) const {
    if (keys.cols() != dk_) throw ShapeError("retrieve: key width != dk");
    Matrix<T> out(keys.rows(), dv_);
    kernels::gemm_accum(keys.data(), keys.rows(), dk_, mat_.data(), dv_,
                        out.data(), false);
    return out;
  }

  // Distiller gate: entry r is 1 when key r's pattern is absent from the
  // memory, 0 when it is already stored (and its code is in the incoming
  // batch). round() is half-away-from-zero and the result is clamped to
  // {0,1} to absorb cross-talk.
  GateDiagonal<T> distiller(const Matrix<T>& keys,
                            const Matrix<T>& new_codes) const {
    if (keys.cols() != dk_) throw ShapeError("distiller: key width != dk");
    if (new_codes.cols() != dv_)
      throw ShapeError("distiller: code width != dv");
    if (keys.rows() != new_codes.rows())
      throw ShapeError("distiller: row counts differ");
    std::vector<T> xbar(static_cast<std::size_t>(dv_));
    kernels::sum_rows(new_codes.data(), new_codes.rows(), dv_, xbar.data());
    // key_r * (mat * xbar), associated right so the work is two matvecs.
    std::vector<T> mx(static_cast<std::size_t>(dk_));
    kernels::matvec(mat_.data(), dk_, dv_, xbar.data(), mx.data());
    GateDiagonal<T> g;
    g.entries.resize(static_cast<std::size_t>(keys.rows()));
    for (Index r = 0; r < keys.rows(); ++r) {
      const double v = kernels::dot(keys.row(r).data(), mx.data(), dk_);
      const double seen = std::min(1.0, std::max(0.0, std::round(v)));
      g.entries[static_cast<std::size_t>(r)] = static_cast<T>(1.0 - seen);
    }
    return g;
  }

  // Inverse-frequency gate: entry r is 1/f where f is the (rounded)
  // multiplicity of code r inside the batch, clamped to >= 1 so absent or
  // noise-cancelled patterns cannot divide by zero.
  static GateDiagonal<T> inv_frequency(const Matrix<T>& new_codes) {
    if (new_codes.rows() < 1)
      throw ParameterError("inv_frequency: empty batch");
    std::vector<T> xbar(static_cast<std::size_t>(new_codes.cols()));
    kernels::sum_rows(new_codes.data(), new_codes.rows(), new_codes.cols(),
                      xbar.data());
    GateDiagonal<T> g;
    g.entries.resize(static_cast<std::size_t>(new_codes.rows()));
    for (Index r = 0; r < new_codes.rows(); ++r) {
      const double f = std::round(
          kernels::dot(new_codes.row(r).data(), xbar.data(),
                       new_codes.cols()));
      g.entries[static_cast<std::size_t>(r)] =
          static_cast<T>(1.0 / std::max(1.0, f));
    }
    return g;
  }

 private:
  void check_pair(const Matrix<T>& keys, const Matrix<T>& values) const {
    if (keys.cols() != dk_) throw ShapeError("key width != dk");
    if (values.cols() != dv_) throw ShapeError("value width != dv");
    if (keys.rows() != values.rows())
      throw ShapeError("key/value row counts differ");
  }

  Index dk_;
  Index dv_;
  Matrix<T> mat_;
  std::int64_t stored_count_ = 0;  // bookkeeping only, not part of formulas
};

}  // namespace memo
