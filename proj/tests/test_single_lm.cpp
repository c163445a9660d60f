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

#include <string>
#include <vector>

#include "memo/corpus.hpp"
#include "memo/single_lm.hpp"

using namespace memo;

namespace {

// The ten-word example sentence plus the out-of-sentence word "or" used
// in partial-match queries.
struct ExampleLM {
  Vocabulary vocab;
  SingleLayerLM<double> lm;

  explicit ExampleLM(Index d = 1024, std::uint64_t seed = 42)
      : vocab(Vocabulary::from_corpus_text(
            "He enrolled in the mathematics and physics teaching diploma "
            "program or")),
        lm(vocab.size(), d, 4, seed) {
    const auto ids = tokenize(
        vocab,
        "He enrolled in the mathematics and physics teaching diploma "
        "program");
    for (std::size_t i = 0; i + 4 < ids.size(); ++i)
      lm.memorize_pair(std::span<const TokenId>(ids.data() + i, 4),
                       ids[i + 4]);
  }

  std::vector<TokenId> toks(const std::string& s) const {
    return tokenize(vocab, s);
  }
};

}  // namespace

TEST_CASE("encoding is deterministic and length-checked") {
  SingleLayerLM<double> lm(32, 256, 4, 1);
  std::vector<TokenId> seq{1, 2, 3, 4};
  CHECK(lm.encode_sequence(seq) == lm.encode_sequence(seq));
  std::vector<TokenId> sh{1, 2, 3};
  CHECK_THROWS_AS(lm.encode_sequence(sh), InputError);
  std::vector<TokenId> bad{1, 2, 3, 99};
  CHECK_THROWS_AS(lm.encode_sequence(bad), VocabularyError);
}

TEST_CASE("sequences sharing k of h tokens have key dot k/h") {
  SingleLayerLM<double> lm(64, 1024, 4, 7);
  auto key = [&](std::vector<TokenId> s) { return lm.encode_sequence(s); };
  auto a = key({1, 2, 3, 4});
  auto b = key({1, 2, 3, 4});
  auto c = key({1, 2, 3, 9});
  auto e = key({5, 6, 7, 8});
  CHECK(kernels::dot(a.data(), b.data(), 1024) ==
        doctest::Approx(1.0).epsilon(0.1));
  CHECK(kernels::dot(a.data(), c.data(), 1024) ==
        doctest::Approx(0.75).epsilon(0.15));
  CHECK(std::abs(kernels::dot(a.data(), e.data(), 1024)) <= 0.1);
}

TEST_CASE("running example: recall and partial-match generalization") {
  ExampleLM ex;

  SUBCASE("exact recall of a stored window") {
    auto p = ex.lm.predict(ex.toks("in the mathematics and"));
    CHECK(ex.vocab.token(p.best) == "physics");
    CHECK(p.best_score == doctest::Approx(1.0).epsilon(0.15));
  }
  SUBCASE("three of four positions score 0.75") {
    auto p = ex.lm.predict(ex.toks("in the mathematics or"));
    const double physics_score =
        p.scores[ex.vocab.id("physics")];
    CHECK(physics_score == doctest::Approx(0.75).epsilon(0.15));
  }
  SUBCASE("duplicate store doubles the score") {
    ExampleLM twice;
    const auto ctx = twice.toks("in the mathematics and");
    twice.lm.memorize_pair(ctx, twice.vocab.id("physics"));
    auto p = twice.lm.predict(ctx);
    CHECK(p.scores[twice.vocab.id("physics")] ==
          doctest::Approx(2.0).epsilon(0.15));
  }
}

TEST_CASE("untouched model emits only noise") {
  SingleLayerLM<double> lm(128, 1024, 4, 3);
  std::vector<TokenId> ctx{5, 6, 7, 8};
  auto p = lm.predict(ctx);
  CHECK(std::abs(p.best_score) <= 0.1);
}

TEST_CASE("accuracy: exact recall far under capacity, chance off-sample") {
  const Index d = 512, h = 4;
  SingleLayerLM<double> lm(2000, d, h, 11);
  UniformPairStream stream(2000, h, 11);
  auto stored = stream.next_batch(50);
  for (const auto& p : stored) lm.memorize_pair(p.tokens, p.next);
  CHECK(lm.accuracy(stored) == 1.0);

  auto fresh = stream.next_batch(200);
  CHECK(lm.accuracy(fresh) <= 0.05);

  std::vector<SequencePair> none;
  CHECK_THROWS_AS(lm.accuracy(none), ParameterError);

  SUBCASE("the stopping statistic is the mean of two accuracies") {
    const double stat = (lm.accuracy(stored) + lm.accuracy(fresh)) / 2.0;
    CHECK(stat >= 0.5);
    CHECK(stat <= 0.55);
  }
}

TEST_CASE("argmax is invariant under positive scaling of the memory") {
  ExampleLM ex(512);
  const auto ctx = ex.toks("enrolled in the mathematics");
  const TokenId before = ex.lm.predict(ctx).best;
  auto& mat = ex.lm.memory().mat();
  for (Index i = 0; i < mat.rows(); ++i)
    for (Index j = 0; j < mat.cols(); ++j) mat(i, j) *= 7.5;
  CHECK(ex.lm.predict(ctx).best == before);
}

TEST_CASE("prediction score is nondecreasing in matching positions") {
  SingleLayerLM<double> lm(64, 1024, 4, 19);
  std::vector<TokenId> stored{1, 2, 3, 4};
  lm.memorize_pair(stored, 60);
  double prev = -1.0;
  std::vector<std::vector<TokenId>> queries{
      {9, 10, 11, 12}, {1, 10, 11, 12}, {1, 2, 11, 12},
      {1, 2, 3, 12}, {1, 2, 3, 4}};
  for (const auto& q : queries) {
    const double s = lm.predict(q).scores[60];
    CHECK(s >= prev - 0.08);  // monotone up to cross-talk noise
    prev = s;
  }
}
