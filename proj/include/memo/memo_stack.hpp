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
#include <map>
#include <span>
#include <vector>

#include "memo/cmm.hpp"
#include "memo/embeddings.hpp"
#include "memo/kernels.hpp"
#include "memo/lm_common.hpp"
#include "memo/projections.hpp"

namespace memo {

inline constexpr TokenId kPadId = 0;

// Per-level batches produced while memorizing one window; kept for
// inspection.
template <class T>
struct WindowTrace {
  std::vector<Matrix<T>> keys;          // I per level, 1..l
  std::vector<Matrix<T>> codes;         // X^(i+1) per level, 1..l-1
  std::vector<GateDiagonal<T>> gates;   // gates applied to C^(i) stores
};

// Stacked correlation matrix memories over windows of m = h^l tokens.
// Level i pairs keys of h^i-token chunks with (a) their sequence codes in
// the level memory C^(i) (deduplicated by the distiller/inverse-frequency
// gate) and (b) the following token in the shared last memory. Prediction
// sums the rightmost chunk key of every level and decodes the last
// memory's response against the embedding table.
//
// memorize/forget/ingest are exclusive-writer; predict/generate/accuracy
// are const and safe to run concurrently with each other.
template <class T>
class MemoModel {
 public:
  MemoModel(Index n, Index d, Index h, Index l, std::uint64_t seed)
      : n_(n), d_(d), h_(h), l_(l), seed_(seed),
        table_(n, d, seed),
        proj_(h, l, d, seed),
        last_(d, d) {
    if (h < 1) throw ParameterError("h must be >= 1");
    if (l < 1) throw ParameterError("l must be >= 1");
    m_ = 1;
    for (Index i = 0; i < l; ++i) {
      m_ *= h;
      if (m_ > (Index{1} << 24)) throw ParameterError("window m = h^l too large");
    }
    layers_.reserve(l);
    for (Index i = 0; i < l; ++i) layers_.emplace_back(d, d);
  }

  Index vocab_size() const { return n_; }
  Index dim() const { return d_; }
  Index heads() const { return h_; }
  Index layer_count() const { return l_; }
  Index window() const { return m_; }
  std::uint64_t seed() const { return seed_; }

  const EmbeddingTable<T>& table() const { return table_; }
  const ProjectionSet<T>& projections() const { return proj_; }
  const CorrelationMemory<T>& layer_memory(Index i) const {
    return layers_.at(i);
  }
  CorrelationMemory<T>& layer_memory(Index i) { return layers_.at(i); }
  const CorrelationMemory<T>& last_memory() const { return last_; }
  CorrelationMemory<T>& last_memory() { return last_; }

  void memorize_window(std::span<const TokenId> window) {
    run_window(window, /*sign=*/T{1}, nullptr);
  }

  WindowTrace<T> memorize_window_traced(std::span<const TokenId> window) {
    WindowTrace<T> trace;
    run_window(window, T{1}, &trace);
    return trace;
  }

  // Exact inverse of memorize_window on the last memory; level memories
  // keep their sequence codes, which retrieval only uses to rebuild keys.
  void forget_window(std::span<const TokenId> window) {
    run_window(window, T{-1}, nullptr);
  }

  Prediction<T> predict_next(std::span<const TokenId> context) const {
    Matrix<T> r = query_batch(context, 1);
    Prediction<T> p;
    p.scores.resize(static_cast<std::size_t>(n_));
    kernels::matvec(table_.rows().data(), n_, d_, r.row(0).data(),
                    p.scores.data());
    p.best = argmax_skip_pad(p.scores);
    p.best_score = p.scores[p.best];
    return p;
  }

  // Greedy argmax for `count` contexts of m tokens each (flattened,
  // already padded); one batched pass through the stack. PAD (row 0) is
  // never emitted.
  std::vector<TokenId> predict_argmax_batch(
      std::span<const TokenId> flat_contexts, Index count) const {
    Matrix<T> r = query_batch(flat_contexts, count);
    auto am = kernels::argmax_rows(r.data(), count, d_,
                                   table_.rows().row(1).data(), n_ - 1);
    std::vector<TokenId> out(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i)
      out[static_cast<std::size_t>(i)] =
          static_cast<TokenId>(am.index[i] + 1);
    return out;
  }

  double accuracy(std::span<const SequencePair> batch) const {
    if (batch.empty()) throw ParameterError("accuracy: empty batch");
    std::vector<TokenId> flat;
    flat.reserve(batch.size() * static_cast<std::size_t>(m_));
    for (const auto& p : batch) append_padded(flat, p.tokens);
    auto best = predict_argmax_batch(flat, static_cast<Index>(batch.size()));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < batch.size(); ++i)
      if (best[i] == batch[i].next) ++hits;
    return static_cast<double>(hits) / static_cast<double>(batch.size());
  }

  // Appends `steps` greedy tokens, sliding the m-token context window.
  std::vector<TokenId> generate(std::span<const TokenId> prompt,
                                Index steps) const {
    if (steps < 1) throw ParameterError("generate: steps must be >= 1");
    if (prompt.empty()) throw InputError("generate: empty prompt");
    std::vector<TokenId> ctx(
        prompt.end() - std::min<std::size_t>(prompt.size(),
                                             static_cast<std::size_t>(m_)),
        prompt.end());
    std::vector<TokenId> out;
    out.reserve(static_cast<std::size_t>(steps));
    for (Index s = 0; s < steps; ++s) {
      const TokenId t = predict_next(ctx).best;
      out.push_back(t);
      ctx.push_back(t);
      if (static_cast<Index>(ctx.size()) > m_) ctx.erase(ctx.begin());
    }
    return out;
  }

  // Slides a length-(m+1) window over the text with the given stride
  // (default h), memorizing each; the first windows are left-padded with
  // PAD. Returns the number of windows memorized.
  Index ingest_text(std::span<const TokenId> tokens, Index stride = 0);

  // Next-token positions of the unpadded windows of a text, in ingestion
  // order (position p means: context tokens [p-m, p), next token at p).
  std::vector<Index> unpadded_window_positions(Index text_len,
                                               Index stride) const {
    std::vector<Index> out;
    for (Index p = m_; p <= text_len - 1; p += stride) out.push_back(p);
    return out;
  }
  std::vector<Index> padded_window_positions(Index text_len,
                                             Index stride) const {
    std::vector<Index> out;
    for (Index p = stride; p < m_ && p <= text_len - 1; p += stride)
      out.push_back(p);
    return out;
  }

  void append_padded(std::vector<TokenId>& flat,
                     std::span<const TokenId> context) const {
    if (context.empty()) throw InputError("empty context");
    if (static_cast<Index>(context.size()) > m_)
      throw InputError("context longer than window m");
    flat.insert(flat.end(),
                static_cast<std::size_t>(m_) - context.size(), kPadId);
    flat.insert(flat.end(), context.begin(), context.end());
  }

 private:
  // Shared memorize/forget pipeline. sign +1 stores (gated level updates,
  // ungated last update); sign -1 recomputes the same keys and subtracts
  // from the last memory only.
  void run_window(std::span<const TokenId> window, T sign,
                  WindowTrace<T>* trace) {
    if (static_cast<Index>(window.size()) != m_ + 1)
      throw InputError("window must hold exactly m+1 = " +
                       std::to_string(m_ + 1) + " tokens");
    Matrix<T> all = table_.gather(window);
    Matrix<T> x = table_.gather(window.first(static_cast<std::size_t>(m_)));

    std::vector<Matrix<T>> level_keys;
    std::vector<Matrix<T>> level_targets;
    Index total_rows = 0;
    for (Index level = 1; level <= l_; ++level) {
      const Index idx = level - 1;
      Matrix<T> keys = flat_h(kernels::gemm(x, proj_.wv(idx)), h_);
      Matrix<T> targets = sel_next(all, level, h_);
      total_rows += keys.rows();
      if (level < l_) {
        Matrix<T> codes = proj_.apply_prj(flat_h(x, h_), idx);
        if (sign > T{}) {
          GateDiagonal<T> gate = layers_[idx].distiller(keys, codes);
          gate *= CorrelationMemory<T>::inv_frequency(codes);
          layers_[idx].store(keys, codes, &gate);
          if (trace) trace->gates.push_back(gate);
        }
        if (trace) trace->codes.push_back(codes);
        x = std::move(codes);
      }
      if (trace) trace->keys.push_back(keys);
      level_keys.push_back(std::move(keys));
      level_targets.push_back(std::move(targets));
    }

    // All levels write (chunk key -> next token) into the one last
    // memory; a single concatenated pass keeps the accumulation order of
    // per-level stores.
    Matrix<T> keys(total_rows, d_);
    Matrix<T> targets(total_rows, d_);
    Index at = 0;
    for (std::size_t i = 0; i < level_keys.size(); ++i) {
      for (Index r = 0; r < level_keys[i].rows(); ++r, ++at) {
        auto ks = level_keys[i].row(r);
        auto ts = level_targets[i].row(r);
        auto kd = keys.row(at);
        auto td = targets.row(at);
        for (Index j = 0; j < d_; ++j) {
          kd[j] = ks[j];
          td[j] = ts[j];
        }
      }
    }
    if (sign > T{}) last_.store(keys, targets);
    else last_.forget(keys, targets);
  }

  // Batched retrieval: returns count x d rows, each the summed rightmost
  // chunk key of every level multiplied by the last memory.
  Matrix<T> query_batch(std::span<const TokenId> flat_contexts,
                        Index count) const {
    std::span<const TokenId> padded = flat_contexts;
    std::vector<TokenId> scratch;
    if (count == 1 &&
        static_cast<Index>(flat_contexts.size()) != m_) {
      append_padded(scratch, flat_contexts);
      padded = scratch;
    }
    if (static_cast<Index>(padded.size()) != count * m_)
      throw InputError("query batch: expected m tokens per context");

    Matrix<T> x = table_.gather(padded);  // (count*m) x d
    Matrix<T> key_sum(count, d_);
    Index rows_per_ctx = m_;
    for (Index level = 1; level <= l_; ++level) {
      const Index idx = level - 1;
      Matrix<T> keys = flat_h(kernels::gemm(x, proj_.wv(idx)), h_);
      rows_per_ctx /= h_;
      for (Index c = 0; c < count; ++c) {
        auto src = keys.row(c * rows_per_ctx + rows_per_ctx - 1);
        auto dst = key_sum.row(c);
        for (Index j = 0; j < d_; ++j) dst[j] += src[j];
      }
      if (level < l_) x = layers_[idx].retrieve(keys);
    }
    return last_.retrieve(key_sum);
  }

  template <class U>
  friend class TextIngestion;

  Index n_, d_, h_, l_;
  Index m_ = 0;
  std::uint64_t seed_;
  EmbeddingTable<T> table_;
  ProjectionSet<T> proj_;
  std::vector<CorrelationMemory<T>> layers_;
  CorrelationMemory<T> last_;
};

// Incremental text ingestion with per-position reuse of chunk codes and
// projections. Sliding windows share almost all their aligned chunks, so
// each cached row is computed once; assembled batches match what
// memorize_window builds bit for bit (verified in tests). Evicted as the
// window moves forward.
template <class T>
class TextIngestion {
 public:
  TextIngestion(MemoModel<T>& model, std::span<const TokenId> tokens,
                Index stride)
      : model_(model), tokens_(tokens.begin(), tokens.end()),
        stride_(stride > 0 ? stride : model.heads()) {
    if (tokens_.empty()) throw InputError("ingest: empty text");
    for (TokenId t : tokens_)
      if (static_cast<Index>(t) >= model.vocab_size())
        throw VocabularyError("ingest: token id out of range");
    const Index len = static_cast<Index>(tokens_.size());
    padded_ = model.padded_window_positions(len, stride_);
    unpadded_ = model.unpadded_window_positions(len, stride_);
    wvproj_.resize(static_cast<std::size_t>(model.layer_count()));
    codes_.resize(static_cast<std::size_t>(model.layer_count()));
  }

  Index total_windows() const {
    return static_cast<Index>(padded_.size() + unpadded_.size());
  }
  Index done() const { return done_; }
  Index unpadded_done() const { return unpadded_done_; }

  // Memorizes the next window; returns false when the text is exhausted.
  bool step() {
    if (done_ < static_cast<Index>(padded_.size())) {
      const Index p = padded_[static_cast<std::size_t>(done_)];
      std::vector<TokenId> win;
      model_.append_padded(win, std::span<const TokenId>(tokens_.data(),
                                                         static_cast<std::size_t>(p)));
      win.push_back(tokens_[static_cast<std::size_t>(p)]);
      model_.memorize_window(win);
      ++done_;
      return true;
    }
    const Index u = done_ - static_cast<Index>(padded_.size());
    if (u >= static_cast<Index>(unpadded_.size())) return false;
    memorize_cached(unpadded_[static_cast<std::size_t>(u)]);
    ++done_;
    ++unpadded_done_;
    return true;
  }

 private:
  using Vec = std::vector<T>;

  // W_V^(level)-projection (d/h wide) of the level-(level-1) object
  // starting at text position q.
  const Vec& wvproj(Index level, Index q) {
    auto& cache = wvproj_[static_cast<std::size_t>(level - 1)];
    auto it = cache.find(q);
    if (it != cache.end()) return it->second;
    const Index d = model_.dim();
    const Index dh = d / model_.heads();
    const T* src = object(level - 1, q);
    Vec out(static_cast<std::size_t>(dh));
    kernels::gemm_accum(src, Index{1}, d, model_.proj_.wv(level - 1).data(),
                        dh, out.data(), false);
    return cache.emplace(q, std::move(out)).first->second;
  }

  // Sequence code (d wide) of the h^level-gram at position q.
  const Vec& code(Index level, Index q) {
    auto& cache = codes_[static_cast<std::size_t>(level)];
    auto it = cache.find(q);
    if (it != cache.end()) return it->second;
    const Index d = model_.dim();
    const Index h = model_.heads();
    Index sub = 1;
    for (Index i = 1; i < level; ++i) sub *= h;
    Vec flat(static_cast<std::size_t>(h * d));
    for (Index b = 0; b < h; ++b) {
      const T* src = object(level - 1, q + b * sub);
      for (Index j = 0; j < d; ++j)
        flat[static_cast<std::size_t>(b * d + j)] = src[j];
    }
    Vec out(static_cast<std::size_t>(d));
    kernels::gemm_accum(flat.data(), Index{1}, h * d,
                        model_.proj_.prj(level - 1).data(), d, out.data(),
                        false);
    return cache.emplace(q, std::move(out)).first->second;
  }

  // Level-0 objects are token embeddings; level >= 1 are cached codes.
  const T* object(Index level, Index q) {
    if (level == 0)
      return model_.table_.row(tokens_[static_cast<std::size_t>(q)]).data();
    return code(level, q).data();
  }

  void memorize_cached(Index p) {
    MemoModel<T>& mm = model_;
    const Index h = mm.heads();
    const Index d = mm.dim();
    const Index m = mm.window();
    const Index s = p - m;

    Index total_rows = 0;
    Index step = 1;
    for (Index level = 1; level <= mm.layer_count(); ++level) {
      step *= h;
      total_rows += m / step;
    }
    Matrix<T> all_keys(total_rows, d);
    Matrix<T> all_targets(total_rows, d);
    Index at = 0;

    Index chunk = 1;  // h^(level-1)
    for (Index level = 1; level <= mm.layer_count(); ++level) {
      const Index rows = m / (chunk * h);
      Matrix<T> keys(rows, d);
      for (Index r = 0; r < rows; ++r) {
        auto dst = keys.row(r);
        for (Index b = 0; b < h; ++b) {
          const Vec& blk = wvproj(level, s + (r * h + b) * chunk);
          const Index off = b * (d / h);
          for (Index j = 0; j < d / h; ++j) dst[off + j] = blk[j];
        }
      }
      for (Index r = 0; r < rows; ++r) {
        const TokenId next =
            tokens_[static_cast<std::size_t>(s + (r + 1) * chunk * h)];
        auto src = mm.table_.row(next);
        auto kd = all_keys.row(at + r);
        auto td = all_targets.row(at + r);
        auto ks = keys.row(r);
        for (Index j = 0; j < d; ++j) {
          kd[j] = ks[j];
          td[j] = src[j];
        }
      }
      at += rows;

      if (level < mm.layer_count()) {
        Matrix<T> codes_batch(rows, d);
        for (Index r = 0; r < rows; ++r) {
          const Vec& c = code(level, s + r * chunk * h);
          auto dst = codes_batch.row(r);
          for (Index j = 0; j < d; ++j) dst[j] = c[j];
        }
        GateDiagonal<T> gate =
            mm.layers_[level - 1].distiller(keys, codes_batch);
        gate *= CorrelationMemory<T>::inv_frequency(codes_batch);
        mm.layers_[level - 1].store(keys, codes_batch, &gate);
      }
      chunk *= h;
    }
    mm.last_.store(all_keys, all_targets);

    // Entries behind the window start are never needed again.
    for (auto& cache : wvproj_) cache.erase(cache.begin(), cache.lower_bound(s));
    for (auto& cache : codes_) cache.erase(cache.begin(), cache.lower_bound(s));
  }

  MemoModel<T>& model_;
  std::vector<TokenId> tokens_;
  Index stride_;
  std::vector<Index> padded_;
  std::vector<Index> unpadded_;
  Index done_ = 0;
  Index unpadded_done_ = 0;
  // per level: position -> cached vector
  std::vector<std::map<Index, Vec>> wvproj_;
  std::vector<std::map<Index, Vec>> codes_;
};

template <class T>
Index MemoModel<T>::ingest_text(std::span<const TokenId> tokens,
                                Index stride) {
  TextIngestion<T> session(*this, tokens, stride);
  while (session.step()) {
  }
  return session.done();
}

}  // namespace memo
