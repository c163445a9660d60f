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
#include <limits>
#include <span>

#include "memo/errors.hpp"
#include "memo/kernels.hpp"
#include "memo/matrix.hpp"
#include "memo/rng.hpp"

namespace memo {

using TokenId = std::uint32_t;

// Seeded table of near-orthogonal unit token vectors. Entries are drawn
// i.i.d. N(0, 1/d) and each row is then normalized to exactly unit L2
// norm. Regenerating with the same (n, d, seed) is bit-identical; tables
// are immutable after construction.
template <class T>
class EmbeddingTable {
 public:
  EmbeddingTable(Index n, Index d, std::uint64_t seed,
                 std::uint32_t stream = streams::kEmbedding)
      : n_(n), d_(d), seed_(seed), rows_(n, d) {
    if (n < 1) throw ParameterError("embedding table needs n >= 1");
    if (d < 2) throw ParameterError("embedding table needs d >= 2");
    RandomStream rng(seed, stream);
    const double sigma = 1.0 / std::sqrt(static_cast<double>(d));
    // Sequential fill: construction is single-threaded by contract so the
    // result cannot depend on available parallelism.
    rng.fill_gaussian(std::span<T>(rows_.data(), rows_.size()), sigma);
    for (Index r = 0; r < n_; ++r) {
      auto row = rows_.row(r);
      const T norm = std::sqrt(kernels::dot(row.data(), row.data(), d_));
      for (auto& v : row) v /= norm;
    }
  }

  Index size() const { return n_; }
  Index dim() const { return d_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const T> row(TokenId t) const {
    if (static_cast<Index>(t) >= n_)
      throw VocabularyError("token id " + std::to_string(t) +
                            " outside vocabulary of " + std::to_string(n_));
    return rows_.row(static_cast<Index>(t));
  }

  const Matrix<T>& rows() const { return rows_; }

  // Gathers the rows for a token sequence into a batch matrix.
  Matrix<T> gather(std::span<const TokenId> ids) const {
    Matrix<T> out(static_cast<Index>(ids.size()), d_);
    for (Index i = 0; i < out.rows(); ++i) {
      auto src = row(ids[static_cast<std::size_t>(i)]);
      auto dst = out.row(i);
      for (Index j = 0; j < d_; ++j) dst[j] = src[j];
    }
    return out;
  }

 private:
  Index n_;
  Index d_;
  std::uint64_t seed_;
  Matrix<T> rows_;
};

// a^T t_B where t_B is the sum of the bag's vectors; approximately the
// multiplicity of `query` in the bag. Summed term-by-term in bag order so
// that splitting a bag splits the sum exactly.
template <class T>
T bag_count(const EmbeddingTable<T>& table, std::span<const TokenId> bag,
            TokenId query) {
  auto q = table.row(query);
  T acc{};
  for (TokenId t : bag) {
    auto r = table.row(t);
    acc += kernels::dot(q.data(), r.data(), table.dim());
  }
  return acc;
}

// Smallest d with d >= 4 (eps^2/2 - eps^3/3)^-1 ln m.
inline Index jll_min_dimension(double epsilon, std::uint64_t m) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ParameterError("jll_min_dimension: epsilon must be in (0,1)");
  if (m < 2) throw ParameterError("jll_min_dimension: m must be >= 2");
  const double denom =
      epsilon * epsilon / 2.0 - epsilon * epsilon * epsilon / 3.0;
  const double bound = 4.0 * std::log(static_cast<double>(m)) / denom;
  return static_cast<Index>(std::ceil(bound));
}

// floor(e^{8 (eps^2 - 4/3 eps^3) d}), saturated at the maximum
// representable count.
inline std::uint64_t nov_capacity(double epsilon, Index d) {
  if (d < 1) throw ParameterError("nov_capacity: d must be >= 1");
  const double coeff =
      epsilon * epsilon - 4.0 / 3.0 * epsilon * epsilon * epsilon;
  if (!(epsilon > 0.0) || coeff <= 0.0)
    throw ParameterError("nov_capacity: epsilon must be in (0, 3/4)");
  const double expo = 8.0 * coeff * static_cast<double>(d);
  constexpr double kMax = 18446744073709549568.0;  // largest double < 2^64
  const double val = std::exp(expo);
  if (!(val < kMax)) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::floor(val));
}

struct NovCheckReport {
  Index m = 0;                      // vectors in the table
  double epsilon = 0.0;             // |dot| tolerance tested
  std::uint64_t pairs_tested = 0;
  double violation_fraction = 0.0;  // fraction of pairs with |dot| >= eps
  double theta_bound = 0.0;         // 2/m^2 - 1/m^4
  bool with_replacement = false;
};

// Empirical near-orthogonality check over sampled distinct pairs. When the
// table has no more than `sample_pairs` distinct pairs they are all
// enumerated; otherwise pairs are sampled with replacement.
template <class T>
NovCheckReport nov_check(const EmbeddingTable<T>& table, double epsilon,
                         std::uint64_t sample_pairs, std::uint64_t seed) {
  const Index n = table.size();
  if (n < 2) throw ParameterError("nov_check: table needs n >= 2");
  if (sample_pairs < 1) throw ParameterError("nov_check: sample_pairs >= 1");

  NovCheckReport rep;
  rep.m = n;
  rep.epsilon = epsilon;
  const double md = static_cast<double>(n);
  rep.theta_bound = 2.0 / (md * md) - 1.0 / (md * md * md * md);

  const double total_pairs = md * (md - 1.0) / 2.0;
  std::uint64_t violations = 0;
  if (total_pairs <= static_cast<double>(sample_pairs)) {
    rep.with_replacement = false;
    for (Index i = 0; i < n; ++i) {
      auto a = table.row(static_cast<TokenId>(i));
      for (Index j = i + 1; j < n; ++j) {
        auto b = table.row(static_cast<TokenId>(j));
        const double dp = kernels::dot(a.data(), b.data(), table.dim());
        if (std::abs(dp) >= epsilon) ++violations;
        ++rep.pairs_tested;
      }
    }
  } else {
    rep.with_replacement = true;
    RandomStream rng(seed, streams::kNovCheck);
    for (std::uint64_t k = 0; k < sample_pairs; ++k) {
      const auto i = static_cast<Index>(rng.next_below(n));
      Index j = i;
      while (j == i) j = static_cast<Index>(rng.next_below(n));
      auto a = table.row(static_cast<TokenId>(i));
      auto b = table.row(static_cast<TokenId>(j));
      const double dp = kernels::dot(a.data(), b.data(), table.dim());
      if (std::abs(dp) >= epsilon) ++violations;
      ++rep.pairs_tested;
    }
  }
  rep.violation_fraction =
      static_cast<double>(violations) / static_cast<double>(rep.pairs_tested);
  return rep;
}

}  // namespace memo
