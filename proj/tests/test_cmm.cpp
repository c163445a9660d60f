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

#include "memo/cmm.hpp"
#include "memo/embeddings.hpp"

using namespace memo;

namespace {

Matrix<double> rows_of(const EmbeddingTable<double>& t,
                       std::vector<TokenId> ids) {
  return t.gather(ids);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<Index>(a.size());
  const double num = kernels::dot(a.data(), b.data(), n);
  const double na = std::sqrt(kernels::dot(a.data(), a.data(), n));
  const double nb = std::sqrt(kernels::dot(b.data(), b.data(), n));
  return num / (na * nb);
}

double max_abs_diff(const Matrix<double>& a, const Matrix<double>& b) {
  double m = 0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

}  // namespace

TEST_CASE("store then retrieve recovers the value") {
  const Index d = 1024;
  EmbeddingTable<double> t(16, d, 1);
  CorrelationMemory<double> mem(d, d);
  mem.store(rows_of(t, {0}), rows_of(t, {1}));
  CHECK(mem.stored_count() == 1);

  Matrix<double> got = mem.retrieve(rows_of(t, {0}));
  CHECK(cosine(got.row(0), t.row(1)) >= 0.99);

  SUBCASE("second pair adds bounded cross-talk") {
    mem.store(rows_of(t, {2}), rows_of(t, {3}));
    Matrix<double> r = mem.retrieve(rows_of(t, {0}));
    // noise component along the other value stays small
    const double along_other =
        kernels::dot(r.row(0).data(), t.row(3).data(), d) -
        kernels::dot(t.row(1).data(), t.row(3).data(), d);
    CHECK(std::abs(along_other) <= 0.1);
  }
  SUBCASE("query scaling scales the answer") {
    Matrix<double> half(1, d);
    for (Index j = 0; j < d; ++j) half(0, j) = 0.5 * t.row(0)[j];
    Matrix<double> r = mem.retrieve(half);
    CHECK(kernels::dot(r.row(0).data(), t.row(1).data(), d) ==
          doctest::Approx(0.5).epsilon(0.1));
  }
  SUBCASE("double store doubles the weight") {
    mem.store(rows_of(t, {0}), rows_of(t, {1}));
    Matrix<double> r = mem.retrieve(rows_of(t, {0}));
    CHECK(kernels::dot(r.row(0).data(), t.row(1).data(), d) ==
          doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("empty memory retrieves zeros") {
  CorrelationMemory<double> mem(32, 48);
  Matrix<double> keys(3, 32);
  keys(0, 0) = 1.0;
  Matrix<double> out = mem.retrieve(keys);
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) CHECK(out(i, j) == 0.0);
}

TEST_CASE("shape errors") {
  CorrelationMemory<double> mem(8, 8);
  Matrix<double> k(2, 8), v(3, 8), wide(2, 9);
  CHECK_THROWS_AS(mem.store(k, v), ShapeError);
  CHECK_THROWS_AS(mem.store(wide, wide), ShapeError);
  CHECK_THROWS_AS(mem.retrieve(wide), ShapeError);
}

TEST_CASE("zero gate leaves the matrix bit-identical") {
  const Index d = 64;
  EmbeddingTable<double> t(8, d, 2);
  CorrelationMemory<double> mem(d, d);
  mem.store(rows_of(t, {0, 1}), rows_of(t, {2, 3}));
  Matrix<double> before = mem.mat();

  GateDiagonal<double> gate;
  gate.entries = {0.0, 1.0};
  mem.store(rows_of(t, {4, 5}), rows_of(t, {6, 7}), &gate);
  // row 0 contributed nothing at all; row 1 did
  Matrix<double> delta = mem.mat();
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) delta(i, j) -= before(i, j);
  double along4 = 0, along5 = 0;
  std::vector<double> probe(static_cast<std::size_t>(d));
  kernels::vecmat(t.row(4).data(), delta.data(), d, d, probe.data());
  along4 = kernels::dot(probe.data(), t.row(6).data(), d);
  kernels::vecmat(t.row(5).data(), delta.data(), d, d, probe.data());
  along5 = kernels::dot(probe.data(), t.row(7).data(), d);
  CHECK(std::abs(along4) < 0.3);  // gated out: only cross-talk with row 5
  CHECK(along5 == doctest::Approx(1.0).epsilon(0.25));
}

TEST_CASE("forget is the exact inverse of store") {
  const Index d = 256;
  EmbeddingTable<double> t(32, d, 3);
  CorrelationMemory<double> mem(d, d);
  mem.store(rows_of(t, {0, 1, 2}), rows_of(t, {3, 4, 5}));
  Matrix<double> snapshot = mem.mat();

  mem.store(rows_of(t, {6, 7}), rows_of(t, {8, 9}));
  mem.forget(rows_of(t, {6, 7}), rows_of(t, {8, 9}));
  CHECK(max_abs_diff(mem.mat(), snapshot) <= 1e-9);

  SUBCASE("forgetting something never stored leaves a negative imprint") {
    CorrelationMemory<double> fresh(d, d);
    fresh.forget(rows_of(t, {10}), rows_of(t, {11}));
    Matrix<double> r = fresh.retrieve(rows_of(t, {10}));
    CHECK(kernels::dot(r.row(0).data(), t.row(11).data(), d) ==
          doctest::Approx(-1.0).epsilon(0.05));
  }
  SUBCASE("store twice, forget once leaves weight one") {
    CorrelationMemory<double> m2(d, d);
    m2.store(rows_of(t, {12}), rows_of(t, {13}));
    m2.store(rows_of(t, {12}), rows_of(t, {13}));
    m2.forget(rows_of(t, {12}), rows_of(t, {13}));
    Matrix<double> r = m2.retrieve(rows_of(t, {12}));
    CHECK(kernels::dot(r.row(0).data(), t.row(13).data(), d) ==
          doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("batch splitting does not change the accumulated matrix") {
  const Index d = 128;
  EmbeddingTable<double> t(16, d, 4);
  CorrelationMemory<double> one(d, d), two(d, d);
  one.store(rows_of(t, {0, 1, 2, 3}), rows_of(t, {4, 5, 6, 7}));
  two.store(rows_of(t, {0, 1}), rows_of(t, {4, 5}));
  two.store(rows_of(t, {2, 3}), rows_of(t, {6, 7}));
  CHECK(one.mat() == two.mat());  // same per-element accumulation order
}

TEST_CASE("distiller flags stored patterns") {
  const Index d = 1024;
  EmbeddingTable<double> keys(8, d, 5);
  EmbeddingTable<double> codes(8, d, 6);
  CorrelationMemory<double> mem(d, d);

  SUBCASE("empty memory passes everything") {
    auto g = mem.distiller(keys.gather(std::vector<TokenId>{0, 1, 2}),
                           codes.gather(std::vector<TokenId>{0, 1, 2}));
    for (double e : g.entries) CHECK(e == 1.0);
  }

  mem.store(keys.gather(std::vector<TokenId>{0}),
            codes.gather(std::vector<TokenId>{0}));

  SUBCASE("stored pattern with its code in the batch gates to 0") {
    auto g = mem.distiller(keys.gather(std::vector<TokenId>{0, 1}),
                           codes.gather(std::vector<TokenId>{0, 1}));
    CHECK(g.entries[0] == 0.0);
    CHECK(g.entries[1] == 1.0);
  }
  SUBCASE("stored pattern whose code is absent from the batch passes") {
    // three-pattern instance: memory holds (k0,c0); the batch stores
    // (k0 -> c1) style novelty, xbar has no c0 component
    auto g = mem.distiller(keys.gather(std::vector<TokenId>{0, 2}),
                           codes.gather(std::vector<TokenId>{1, 2}));
    CHECK(g.entries[0] == 1.0);
    CHECK(g.entries[1] == 1.0);
  }
}

TEST_CASE("inverse frequency gate") {
  const Index d = 1024;
  EmbeddingTable<double> codes(8, d, 7);

  SUBCASE("all-distinct codes gate to 1") {
    auto g = CorrelationMemory<double>::inv_frequency(
        codes.gather(std::vector<TokenId>{0, 1, 2, 3}));
    for (double e : g.entries) CHECK(e == 1.0);
  }
  SUBCASE("a code repeated three times gates to 1/3") {
    auto g = CorrelationMemory<double>::inv_frequency(
        codes.gather(std::vector<TokenId>{4, 4, 4, 5}));
    CHECK(g.entries[0] == doctest::Approx(1.0 / 3));
    CHECK(g.entries[1] == doctest::Approx(1.0 / 3));
    CHECK(g.entries[2] == doctest::Approx(1.0 / 3));
    CHECK(g.entries[3] == 1.0);
  }
  SUBCASE("single row gates to 1") {
    auto g = CorrelationMemory<double>::inv_frequency(
        codes.gather(std::vector<TokenId>{6}));
    CHECK(g.entries[0] == 1.0);
  }
}

TEST_CASE("gated idempotence and dedup") {
  const Index d = 1024;
  EmbeddingTable<double> keys(8, d, 8);
  EmbeddingTable<double> codes(8, d, 9);
  CorrelationMemory<double> mem(d, d);

  auto k = keys.gather(std::vector<TokenId>{0, 1, 2});
  auto c = codes.gather(std::vector<TokenId>{0, 1, 2});
  auto store_gated = [&] {
    GateDiagonal<double> g = mem.distiller(k, c);
    g *= CorrelationMemory<double>::inv_frequency(c);
    mem.store(k, c, &g);
  };
  store_gated();
  Matrix<double> first = mem.mat();
  store_gated();
  CHECK(max_abs_diff(mem.mat(), first) <= 1e-6);

  SUBCASE("f copies of a pattern store with total weight 1") {
    CorrelationMemory<double> m2(d, d);
    auto kk = keys.gather(std::vector<TokenId>{5, 5, 5});
    auto cc = codes.gather(std::vector<TokenId>{5, 5, 5});
    GateDiagonal<double> g = m2.distiller(kk, cc);
    g *= CorrelationMemory<double>::inv_frequency(cc);
    m2.store(kk, cc, &g);
    Matrix<double> r = m2.retrieve(keys.gather(std::vector<TokenId>{5}));
    CHECK(kernels::dot(r.row(0).data(), codes.row(5).data(), d) ==
          doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("one-hot oracle: retrieval is exact table lookup") {
  // With exactly orthonormal keys and values the CMM is a lookup table;
  // after rounding the match is bit-exact.
  const Index n = 8;
  Matrix<double> keys(n, n), values(n, n);
  for (Index i = 0; i < n; ++i) {
    keys(i, i) = 1.0;
    values(i, (i + 3) % n) = 1.0;
  }
  CorrelationMemory<double> mem(n, n);
  mem.store(keys, values);
  Matrix<double> got = mem.retrieve(keys);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      CHECK(std::round(got(i, j)) == values(i, j));
}
