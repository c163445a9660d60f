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

#include <doctest.h>

#include <cmath>
#include <vector>

#include "memo/embeddings.hpp"

using namespace memo;

TEST_CASE("tables regenerate bit-identically and reject bad params") {
  EmbeddingTable<double> a(50, 64, 7);
  EmbeddingTable<double> b(50, 64, 7);
  CHECK(a.rows() == b.rows());
  EmbeddingTable<double> c(50, 64, 8);
  CHECK_FALSE(a.rows() == c.rows());
  CHECK_THROWS_AS(EmbeddingTable<double>(0, 64, 1), ParameterError);
  CHECK_THROWS_AS(EmbeddingTable<double>(4, 1, 1), ParameterError);
}

TEST_CASE("rows have exactly unit norm") {
  EmbeddingTable<double> t(200, 97, 3);
  for (TokenId i = 0; i < 200; ++i) {
    auto r = t.row(i);
    const double n2 = kernels::dot(r.data(), r.data(), t.dim());
    CHECK(std::abs(std::sqrt(n2) - 1.0) < 1e-12);
  }
  // Single row, tiny table: norm is forced to 1 by construction.
  EmbeddingTable<double> one(1, 8, 0);
  auto r = one.row(0);
  CHECK(std::sqrt(kernels::dot(r.data(), r.data(), 8)) ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("distinct rows are nearly orthogonal") {
  EmbeddingTable<double> t(2, 1024, 7);
  auto a = t.row(0);
  auto b = t.row(1);
  CHECK(std::abs(kernels::dot(a.data(), b.data(), 1024)) < 0.1);
}

TEST_CASE("large-table pair sampling stays under the violation budget") {
  // 1e5 sampled pairs at |dot| >= 0.15 in d=1024: far out in the tail.
  EmbeddingTable<double> t(10000, 1024, 7);
  auto rep = nov_check(t, 0.15, 100000, 7);
  CHECK(rep.with_replacement);
  CHECK(rep.pairs_tested == 100000);
  CHECK(rep.violation_fraction < 0.01);
}

TEST_CASE("bag_count behaves like a multiplicity counter") {
  EmbeddingTable<double> t(64, 1024, 11);
  SUBCASE("empty bag is exactly zero") {
    CHECK(bag_count<double>(t, {}, 5) == 0.0);
  }
  SUBCASE("triple occurrence counts to about three") {
    std::vector<TokenId> bag{9, 9, 9};
    CHECK(bag_count<double>(t, bag, 9) == doctest::Approx(3.0).epsilon(0.1));
  }
  SUBCASE("absent token counts to about zero") {
    std::vector<TokenId> bag{1, 2};
    CHECK(std::abs(bag_count<double>(t, bag, 3)) < 0.2);
  }
  SUBCASE("splitting a bag splits the count exactly") {
    std::vector<TokenId> b1{4, 8, 15, 16};
    std::vector<TokenId> b2{23, 42, 4};
    std::vector<TokenId> joined;
    joined.insert(joined.end(), b1.begin(), b1.end());
    joined.insert(joined.end(), b2.begin(), b2.end());
    const double whole = bag_count<double>(t, joined, 15);
    const double split =
        bag_count<double>(t, b1, 15) + bag_count<double>(t, b2, 15);
    CHECK(whole == split);  // bitwise: summation is in bag order
  }
  SUBCASE("unknown token id") {
    CHECK_THROWS_AS(bag_count<double>(t, {}, 64), VocabularyError);
  }
}

TEST_CASE("jll_min_dimension closed form") {
  CHECK(jll_min_dimension(0.1, 100000) == 9869);
  CHECK(jll_min_dimension(0.5, 2) == 34);
  CHECK(jll_min_dimension(0.1, 1000000) > jll_min_dimension(0.1, 100000));
  CHECK_THROWS_AS(jll_min_dimension(0.0, 10), ParameterError);
  CHECK_THROWS_AS(jll_min_dimension(1.0, 10), ParameterError);
  CHECK_THROWS_AS(jll_min_dimension(0.1, 1), ParameterError);
}

TEST_CASE("nov_capacity closed form") {
  // e^(104/15) = 1025.9078..., so the floor is 1025.
  CHECK(nov_capacity(0.1, 100) == 1025);
  CHECK_THROWS_AS(nov_capacity(0.1, 0), ParameterError);
  CHECK_THROWS_AS(nov_capacity(0.75, 10), ParameterError);
  CHECK_THROWS_AS(nov_capacity(-0.1, 10), ParameterError);

  SUBCASE("doubling d squares the bound, up to truncation") {
    // floor(e^c) = a implies floor(e^{2c}) lies in [a^2, (a+1)^2).
    for (double eps : {0.05, 0.1}) {
      for (Index d : {50, 100, 150}) {
        const double a = static_cast<double>(nov_capacity(eps, d));
        const double b = static_cast<double>(nov_capacity(eps, 2 * d));
        CHECK(b >= a * a);
        CHECK(b < (a + 1) * (a + 1));
      }
    }
  }
  SUBCASE("saturates instead of overflowing") {
    CHECK(nov_capacity(0.5, 100000) ==
          std::numeric_limits<std::uint64_t>::max());
  }
}

TEST_CASE("nov_check enumerates all pairs when they fit the budget") {
  EmbeddingTable<double> t(40, 256, 5);
  auto rep = nov_check(t, 0.3, 100000, 1);
  CHECK_FALSE(rep.with_replacement);
  CHECK(rep.pairs_tested == 40 * 39 / 2);  // self-pairs excluded
  CHECK(rep.m == 40);
  const double md = 40.0;
  CHECK(rep.theta_bound ==
        doctest::Approx(2.0 / (md * md) - 1.0 / (md * md * md * md)));
  CHECK_THROWS_AS(nov_check(EmbeddingTable<double>(1, 16, 0), 0.1, 10, 0),
                  ParameterError);
}

TEST_CASE("theta formula at m=1000") {
  EmbeddingTable<double> t(1000, 32, 2);
  auto rep = nov_check(t, 0.9, 1, 0);
  CHECK(rep.theta_bound == doctest::Approx(2e-6 - 1e-12).epsilon(1e-12));
}

TEST_CASE("orthogonality property at a JLL-sized dimension") {
  // d >= jll_min_dimension(eps, n) keeps the empirical violation fraction
  // at tolerance 2*eps under 5*theta (slack for Monte-Carlo noise).
  const double eps = 0.3;
  const Index n = 50;
  const Index d = jll_min_dimension(eps, n);
  EmbeddingTable<double> t(n, d, 13);
  auto rep = nov_check(t, 2 * eps, 20000, 13);
  CHECK(rep.violation_fraction <= 5.0 * rep.theta_bound);
}

TEST_CASE("nov_check is deterministic given the seed") {
  EmbeddingTable<double> t(500, 128, 21);
  auto a = nov_check(t, 0.2, 5000, 77);
  auto b = nov_check(t, 0.2, 5000, 77);
  CHECK(a.violation_fraction == b.violation_fraction);
  CHECK(a.pairs_tested == b.pairs_tested);
}
