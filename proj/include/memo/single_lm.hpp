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

#include "memo/cmm.hpp"
#include "memo/embeddings.hpp"
#include "memo/kernels.hpp"
#include "memo/lm_common.hpp"
#include "memo/projections.hpp"

namespace memo {

// Language model over one correlation matrix memory: fixed windows of h
// tokens are encoded as the concatenation of their W_V-projected vectors
// and associated with the embedding of the following token. Scores behave
// like approximate occurrence counts; partially matching windows
// contribute k/h of a full match.
//
// W_V is the layer-0 matrix of a one-layer ProjectionSet built from the
// same seed, so this is exactly the one-layer special case of the stacked
// model.
template <class T>
class SingleLayerLM {
 public:
  SingleLayerLM(Index n, Index d, Index h, std::uint64_t seed)
      : h_(h),
        table_(n, d, seed),
        wv_(ProjectionSet<T>::make_wv(h, d, seed, 0)),
        mem_(d, d) {
    if (h < 1) throw ParameterError("window length h must be >= 1");
    if (d % h != 0) throw ParameterError("d must be divisible by h");
  }

  Index window() const { return h_; }
  Index dim() const { return table_.dim(); }
  Index vocab_size() const { return table_.size(); }
  const EmbeddingTable<T>& table() const { return table_; }
  const Matrix<T>& wv() const { return wv_; }
  const CorrelationMemory<T>& memory() const { return mem_; }
  CorrelationMemory<T>& memory() { return mem_; }

  // Concatenation of the h projected token vectors; near-unit norm.
  std::vector<T> encode_sequence(std::span<const TokenId> tokens) const {
    Matrix<T> key = encode_batch_keys(tokens, 1);
    return std::vector<T>(key.data(), key.data() + key.size());
  }

  void memorize_pair(std::span<const TokenId> tokens, TokenId next) {
    Matrix<T> key = encode_batch_keys(tokens, 1);
    Matrix<T> value = table_.gather(std::span<const TokenId>(&next, 1));
    mem_.store(key, value);
  }

  Prediction<T> predict(std::span<const TokenId> tokens) const {
    Matrix<T> key = encode_batch_keys(tokens, 1);
    std::vector<T> out(static_cast<std::size_t>(dim()));
    kernels::vecmat(key.data(), mem_.mat().data(), dim(), dim(), out.data());
    Prediction<T> p;
    p.scores.resize(static_cast<std::size_t>(vocab_size()));
    kernels::matvec(table_.rows().data(), vocab_size(), dim(), out.data(),
                    p.scores.data());
    p.best = argmax_skip_pad(p.scores);
    p.best_score = p.scores[p.best];
    return p;
  }

  // Fraction of pairs whose greedy prediction matches. Evaluated in one
  // batched pass.
  double accuracy(std::span<const SequencePair> batch) const {
    if (batch.empty()) throw ParameterError("accuracy: empty batch");
    std::vector<TokenId> flat;
    flat.reserve(batch.size() * static_cast<std::size_t>(h_));
    for (const auto& p : batch) {
      if (static_cast<Index>(p.tokens.size()) != h_)
        throw InputError("accuracy: sequence length != h");
      flat.insert(flat.end(), p.tokens.begin(), p.tokens.end());
    }
    Matrix<T> keys =
        encode_batch_keys(flat, static_cast<Index>(batch.size()));
    Matrix<T> r = mem_.retrieve(keys);
    auto am = kernels::argmax_rows(r.data(), r.rows(), dim(),
                                   table_.rows().row(1).data(),
                                   vocab_size() - 1);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < batch.size(); ++i)
      if (am.index[i] + 1 == static_cast<Index>(batch[i].next)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(batch.size());
  }

  // count sequences of h tokens each, flattened; returns count x d keys.
  Matrix<T> encode_batch_keys(std::span<const TokenId> flat_tokens,
                              Index count) const {
    if (static_cast<Index>(flat_tokens.size()) != count * h_)
      throw InputError("encode: expected exactly h tokens per sequence");
    Matrix<T> x = table_.gather(flat_tokens);
    Matrix<T> proj = kernels::gemm(x, wv_);
    return flat_h(std::move(proj), h_);
  }

 private:
  Index h_;
  EmbeddingTable<T> table_;
  Matrix<T> wv_;
  CorrelationMemory<T> mem_;
};

}  // namespace memo
