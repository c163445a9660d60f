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

// Dense kernels behind every memory operation. Each kernel exists twice:
// kernels::serial is the plain-loop reference, kernels::par adds OpenMP
// over independent output elements. Every output element is accumulated in
// a fixed order that does not depend on the partitioning, so par results
// are bit-identical to serial at any thread count. Reductions go through
// dot()/hsum16(), which fix the lane structure instead of leaving it to
// the autovectorizer.

#include <cstdlib>
#include <limits>
#include <vector>

#include <omp.h>

#include "memo/matrix.hpp"

namespace memo::kernels {

namespace detail {
inline int& thread_override() {
  static int v = -1;  // -1: not overridden
  return v;
}
inline int env_threads() {
  static int v = [] {
    const char* s = std::getenv("MEMO_THREADS");
    if (!s) return 0;
    const long n = std::strtol(s, nullptr, 10);
    return n > 0 ? static_cast<int>(n) : 0;
  }();
  return v;
}
}  // namespace detail

// Worker cap: MEMO_THREADS env (0 = auto), overridable in-process for
// tests and benchmarks.
inline int threads() {
  if (detail::thread_override() >= 1) return detail::thread_override();
  const int env = detail::env_threads();
  if (env >= 1) return env;
  return omp_get_max_threads();
}
inline void set_threads(int n) { detail::thread_override() = n >= 1 ? n : -1; }

// Fixed 16-lane dot product; the lane layout (not the caller, not the
// thread count) decides the summation order.
template <class T>
inline T dot(const T* a, const T* b, Index n) {
  constexpr Index kLanes = 16;
  T acc[kLanes] = {};
  Index i = 0;
  for (; i + kLanes <= n; i += kLanes)
    for (Index l = 0; l < kLanes; ++l) acc[l] += a[i + l] * b[i + l];
  for (Index w = kLanes / 2; w > 0; w /= 2)
    for (Index l = 0; l < w; ++l) acc[l] += acc[l + w];
  T s = acc[0];
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

namespace serial {

// C (+)= A(m x k) * B(k x n); ikj order, C rows accumulated in k order.
template <class T>
inline void gemm_accum(const T* a, Index m, Index k, const T* b, Index n,
                       T* c, bool accumulate) {
  for (Index i = 0; i < m; ++i) {
    T* crow = c + i * n;
    if (!accumulate)
      for (Index j = 0; j < n; ++j) crow[j] = T{};
    const T* arow = a + i * k;
    for (Index p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T{}) continue;
      const T* brow = b + p * n;
      for (Index j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C += sign * sum_r gate_r * K[r]^T V[r]; per C-row, rows are consumed in
// batch order. gate may be null (all ones). Rows with a zero coefficient
// are skipped in every variant, so gating with 0 leaves C untouched.
template <class T>
inline void outer_accum(const T* keys, const T* values, Index rows, Index dk,
                        Index dv, const T* gate, T sign, T* c) {
  for (Index i = 0; i < dk; ++i) {
    T* crow = c + i * dv;
    for (Index r = 0; r < rows; ++r) {
      T coef = keys[r * dk + i] * sign;
      if (gate) coef *= gate[r];
      if (coef == T{}) continue;
      const T* vrow = values + r * dv;
      for (Index j = 0; j < dv; ++j) crow[j] += coef * vrow[j];
    }
  }
}

// y[j] = sum_r x[r] * A[r][j], accumulated in r order.
template <class T>
inline void vecmat(const T* x, const T* a, Index m, Index n, T* y) {
  for (Index j = 0; j < n; ++j) y[j] = T{};
  for (Index r = 0; r < m; ++r) {
    const T xv = x[r];
    if (xv == T{}) continue;
    const T* arow = a + r * n;
    for (Index j = 0; j < n; ++j) y[j] += xv * arow[j];
  }
}

// y[i] = dot(A_i, x).
template <class T>
inline void matvec(const T* a, Index m, Index n, const T* x, T* y) {
  for (Index i = 0; i < m; ++i) y[i] = dot(a + i * n, x, n);
}

// C[i][j] = dot(A_i, B_j) for row-major A(q x k), B(n x k).
template <class T>
inline void gemm_abt(const T* a, Index q, Index k, const T* b, Index n,
                     T* c) {
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < n; ++j) c[i * n + j] = dot(a + i * k, b + j * k, k);
}

// col[j] = sum_r A[r][j].
template <class T>
inline void sum_rows(const T* a, Index m, Index n, T* out) {
  for (Index j = 0; j < n; ++j) out[j] = T{};
  for (Index r = 0; r < m; ++r) {
    const T* arow = a + r * n;
    for (Index j = 0; j < n; ++j) out[j] += arow[j];
  }
}

}  // namespace serial

namespace par {

template <class T>
inline void gemm_accum(const T* a, Index m, Index k, const T* b, Index n,
                       T* c, bool accumulate) {
  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (Index i = 0; i < m; ++i) {
    T* crow = c + i * n;
    if (!accumulate)
      for (Index j = 0; j < n; ++j) crow[j] = T{};
    const T* arow = a + i * k;
    for (Index p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T{}) continue;
      const T* brow = b + p * n;
      for (Index j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <class T>
inline void outer_accum(const T* keys, const T* values, Index rows, Index dk,
                        Index dv, const T* gate, T sign, T* c) {
  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (Index i = 0; i < dk; ++i) {
    T* crow = c + i * dv;
    for (Index r = 0; r < rows; ++r) {
      T coef = keys[r * dk + i] * sign;
      if (gate) coef *= gate[r];
      if (coef == T{}) continue;
      const T* vrow = values + r * dv;
      for (Index j = 0; j < dv; ++j) crow[j] += coef * vrow[j];
    }
  }
}

template <class T>
inline void vecmat(const T* x, const T* a, Index m, Index n, T* y) {
  const int nt = threads();
#pragma omp parallel num_threads(nt)
  {
    const int tid = omp_get_thread_num();
    const int tc = omp_get_num_threads();
    const Index j0 = n * tid / tc;
    const Index j1 = n * (tid + 1) / tc;
    for (Index j = j0; j < j1; ++j) y[j] = T{};
    for (Index r = 0; r < m; ++r) {
      const T xv = x[r];
      if (xv == T{}) continue;
      const T* arow = a + r * n;
      for (Index j = j0; j < j1; ++j) y[j] += xv * arow[j];
    }
  }
}

template <class T>
inline void matvec(const T* a, Index m, Index n, const T* x, T* y) {
  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (Index i = 0; i < m; ++i) y[i] = dot(a + i * n, x, n);
}

template <class T>
inline void gemm_abt(const T* a, Index q, Index k, const T* b, Index n,
                     T* c) {
  const int nt = threads();
  if (q >= nt) {
#pragma omp parallel for schedule(static) num_threads(nt)
    for (Index i = 0; i < q; ++i)
      for (Index j = 0; j < n; ++j)
        c[i * n + j] = dot(a + i * k, b + j * k, k);
  } else {
#pragma omp parallel for schedule(static) num_threads(nt)
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < q; ++i)
        c[i * n + j] = dot(a + i * k, b + j * k, k);
  }
}

template <class T>
inline void sum_rows(const T* a, Index m, Index n, T* out) {
  const int nt = threads();
#pragma omp parallel num_threads(nt)
  {
    const int tid = omp_get_thread_num();
    const int tc = omp_get_num_threads();
    const Index j0 = n * tid / tc;
    const Index j1 = n * (tid + 1) / tc;
    for (Index j = j0; j < j1; ++j) out[j] = T{};
    for (Index r = 0; r < m; ++r) {
      const T* arow = a + r * n;
      for (Index j = j0; j < j1; ++j) out[j] += arow[j];
    }
  }
}

}  // namespace par

// Dispatchers: serial when capped at one worker, OpenMP otherwise.

template <class T>
inline void gemm_accum(const T* a, Index m, Index k, const T* b, Index n,
                       T* c, bool accumulate) {
  if (m == 1 && !accumulate) {
    // A single output row parallelizes over columns, not rows; the
    // per-element accumulation order is the same either way.
    if (threads() <= 1) serial::vecmat(a, b, k, n, c);
    else par::vecmat(a, b, k, n, c);
    return;
  }
  if (threads() <= 1) serial::gemm_accum(a, m, k, b, n, c, accumulate);
  else par::gemm_accum(a, m, k, b, n, c, accumulate);
}

template <class T>
inline Matrix<T> gemm(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) throw ShapeError("gemm: inner dims differ");
  Matrix<T> c(a.rows(), b.cols());
  gemm_accum(a.data(), a.rows(), a.cols(), b.data(), b.cols(), c.data(),
             false);
  return c;
}

template <class T>
inline void outer_accum(const T* keys, const T* values, Index rows, Index dk,
                        Index dv, const T* gate, T sign, T* c) {
  if (threads() <= 1)
    serial::outer_accum(keys, values, rows, dk, dv, gate, sign, c);
  else
    par::outer_accum(keys, values, rows, dk, dv, gate, sign, c);
}

template <class T>
inline void vecmat(const T* x, const T* a, Index m, Index n, T* y) {
  if (threads() <= 1) serial::vecmat(x, a, m, n, y);
  else par::vecmat(x, a, m, n, y);
}

template <class T>
inline void matvec(const T* a, Index m, Index n, const T* x, T* y) {
  if (threads() <= 1) serial::matvec(a, m, n, x, y);
  else par::matvec(a, m, n, x, y);
}

template <class T>
inline void gemm_abt(const T* a, Index q, Index k, const T* b, Index n,
                     T* c) {
  if (threads() <= 1) serial::gemm_abt(a, q, k, b, n, c);
  else par::gemm_abt(a, q, k, b, n, c);
}

template <class T>
inline void sum_rows(const T* a, Index m, Index n, T* out) {
  if (threads() <= 1) serial::sum_rows(a, m, n, out);
  else par::sum_rows(a, m, n, out);
}

// Row-wise argmax of R(q x d) * E(n x d)^T without materializing the score
// matrix. Ties break toward the lowest row index of E. Vocab rows are
// scanned in blocks; per-block winners are merged in block order, so the
// result is independent of the thread count.
template <class T>
struct ArgmaxRows {
  std::vector<Index> index;
  std::vector<T> score;
};

template <class T>
inline ArgmaxRows<T> argmax_rows(const T* r, Index q, Index d, const T* e,
                                 Index n) {
  constexpr Index kBlock = 512;
  constexpr Index kQChunk = 16;
  const Index nblocks = (n + kBlock - 1) / kBlock;
  std::vector<T> bscore(static_cast<std::size_t>(nblocks * q),
                        -std::numeric_limits<T>::infinity());
  std::vector<Index> bindex(static_cast<std::size_t>(nblocks * q), -1);

  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (Index b = 0; b < nblocks; ++b) {
    const Index t0 = b * kBlock;
    const Index t1 = t0 + kBlock < n ? t0 + kBlock : n;
    T* bs = bscore.data() + b * q;
    Index* bi = bindex.data() + b * q;
    for (Index q0 = 0; q0 < q; q0 += kQChunk) {
      const Index q1 = q0 + kQChunk < q ? q0 + kQChunk : q;
      for (Index t = t0; t < t1; ++t) {
        const T* erow = e + t * d;
        for (Index i = q0; i < q1; ++i) {
          const T s = dot(r + i * d, erow, d);
          if (s > bs[i]) {
            bs[i] = s;
            bi[i] = t;
          }
        }
      }
    }
  }

  ArgmaxRows<T> out;
  out.index.assign(q, -1);
  out.score.assign(q, -std::numeric_limits<T>::infinity());
  for (Index i = 0; i < q; ++i) {
    for (Index b = 0; b < nblocks; ++b) {
      const T s = bscore[b * q + i];
      if (s > out.score[i]) {
        out.score[i] = s;
        out.index[i] = bindex[b * q + i];
      }
    }
  }
  return out;
}

}  // namespace memo::kernels
