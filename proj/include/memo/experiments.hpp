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
#include <ostream>
#include <string>
#include <vector>

#include "memo/cmm.hpp"
#include "memo/corpus.hpp"
#include "memo/embeddings.hpp"
#include "memo/memo_stack.hpp"

namespace memo {

// splitmix64 step; derives independent per-configuration seeds.
inline std::uint64_t mix_seed(std::uint64_t seed,
                              std::initializer_list<std::uint64_t> parts) {
  std::uint64_t x = seed;
  for (std::uint64_t p : parts) {
    x ^= p + 0x9E3779B97F4A7C15ull + (x << 6) + (x >> 2);
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    x = z ^ (z >> 31);
  }
  return x;
}

// ---------------------------------------------------------------------
// Experiment 1: capacity of one rectangular CMM. Keys are h token vectors
// of width d_h concatenated; values are token vectors of width d; NoP =
// h * d_h * d. Batches of pairs are stored until the running statistic
// (Acc(B_0) + Acc(B_i)) / 2 drops to the threshold.
// ---------------------------------------------------------------------

struct Exp1Config {
  std::vector<Index> h_list{2, 4, 8};
  std::vector<Index> dh_list{16, 32, 64};
  std::vector<Index> d_list{512};
  Index batch_size = 1000;
  double threshold = 0.9;
  Index max_batches = 50;
  std::uint64_t vocab_size = 100000;
  std::uint64_t seed = 42;
  double memory_budget_gb = 6.0;
};

struct Exp1Row {
  Index h = 0, dh = 0, d = 0;
  std::uint64_t nop = 0;
  std::uint64_t capacity_pairs = 0;
  // (pairs stored, (Acc(B0)+Acc(Bi))/2) after each batch
  std::vector<std::pair<std::uint64_t, double>> trajectory;
};

inline void exp1_csv_header(std::ostream& os) { os << "h,d_h,d,nop,capacity\n"; }
inline void exp1_csv_row(std::ostream& os, const Exp1Row& r) {
  os << r.h << ',' << r.dh << ',' << r.d << ',' << r.nop << ','
     << r.capacity_pairs << '\n';
}

template <class T>
std::vector<Exp1Row> run_exp1(const Exp1Config& cfg, std::ostream* csv) {
  if (cfg.batch_size < 1 || cfg.max_batches < 1)
    throw ParameterError("exp1: batch_size and max_batches must be >= 1");
  if (csv) exp1_csv_header(*csv);
  std::vector<Exp1Row> rows;
  for (Index h : cfg.h_list) {
    for (Index dh : cfg.dh_list) {
      for (Index d : cfg.d_list) {
        const double bytes =
            (static_cast<double>(h) * dh * d +
             static_cast<double>(cfg.vocab_size) * (dh + d) +
             3.0 * cfg.batch_size * (h * dh + d)) *
            sizeof(T);
        if (bytes > cfg.memory_budget_gb * (1ull << 30))
          throw ParameterError(
              "exp1: config h=" + std::to_string(h) + " d_h=" +
              std::to_string(dh) + " d=" + std::to_string(d) +
              " needs about " + std::to_string(bytes / (1ull << 30)) +
              " GiB, over the " + std::to_string(cfg.memory_budget_gb) +
              " GiB budget");

        const std::uint64_t cfg_seed = mix_seed(
            cfg.seed, {static_cast<std::uint64_t>(h),
                       static_cast<std::uint64_t>(dh),
                       static_cast<std::uint64_t>(d)});
        EmbeddingTable<T> in_table(static_cast<Index>(cfg.vocab_size), dh,
                                   cfg_seed ^ 0x11);
        EmbeddingTable<T> out_table(static_cast<Index>(cfg.vocab_size), d,
                                    cfg_seed ^ 0x22);
        UniformPairStream stream(cfg.vocab_size, h, cfg_seed);
        CorrelationMemory<T> mem(h * dh, d);

        auto build_keys = [&](const std::vector<SequencePair>& batch) {
          Matrix<T> keys(static_cast<Index>(batch.size()), h * dh);
          for (Index r = 0; r < keys.rows(); ++r) {
            auto dst = keys.row(r);
            const auto& toks = batch[static_cast<std::size_t>(r)].tokens;
            for (Index b = 0; b < h; ++b) {
              auto src = in_table.row(toks[static_cast<std::size_t>(b)]);
              for (Index j = 0; j < dh; ++j) dst[b * dh + j] = src[j];
            }
          }
          return keys;
        };
        auto acc_of = [&](const Matrix<T>& keys,
                          const std::vector<SequencePair>& batch) {
          Matrix<T> r = mem.retrieve(keys);
          auto am = kernels::argmax_rows(r.data(), r.rows(), d,
                                         out_table.rows().data(),
                                         out_table.size());
          std::size_t hits = 0;
          for (std::size_t i = 0; i < batch.size(); ++i)
            if (am.index[i] == static_cast<Index>(batch[i].next)) ++hits;
          return static_cast<double>(hits) / static_cast<double>(batch.size());
        };

        Exp1Row row;
        row.h = h;
        row.dh = dh;
        row.d = d;
        row.nop = static_cast<std::uint64_t>(h) * dh * d;

        std::vector<SequencePair> b0;
        Matrix<T> b0_keys;
        for (Index i = 0; i < cfg.max_batches; ++i) {
          auto batch = stream.next_batch(cfg.batch_size);
          Matrix<T> keys = build_keys(batch);
          Matrix<T> values(static_cast<Index>(batch.size()), d);
          for (Index r = 0; r < values.rows(); ++r) {
            auto src = out_table.row(batch[static_cast<std::size_t>(r)].next);
            auto dst = values.row(r);
            for (Index j = 0; j < d; ++j) dst[j] = src[j];
          }
          mem.store(keys, values);
          if (i == 0) {
            b0 = batch;
            b0_keys = keys;
          }
          const double acc_i = acc_of(keys, batch);
          const double acc_0 = i == 0 ? acc_i : acc_of(b0_keys, b0);
          const double stat = (acc_0 + acc_i) / 2.0;
          const auto stored =
              static_cast<std::uint64_t>(i + 1) * cfg.batch_size;
          row.trajectory.emplace_back(stored, stat);
          if (stat > cfg.threshold) row.capacity_pairs = stored;
          else break;
        }
        if (csv) exp1_csv_row(*csv, row);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------
// Experiment 2: text memorization with decoys. For each (d, layers,
// decoys) a decoy text is ingested window by window; stored-window
// next-token accuracy is sampled along the way.
// ---------------------------------------------------------------------

struct Exp2Config {
  Index h = 4;
  std::vector<Index> layers{1, 2, 3};
  std::vector<Index> d_list{1024};
  std::vector<Index> decoys{0, 20, 40};
  Index windows = 10000;          // unpadded windows ingested per run
  Index stride = 0;               // 0 -> h
  std::uint64_t vocab_size = 100000;
  Index sample_every = 500;       // unpadded windows between eval points
  Index eval_sample = 200;        // stored windows scored per eval point
  std::uint64_t seed = 42;
  double memory_budget_gb = 6.0;
  Index decoy_min_gap = 12;
  Index decoy_gap_spread = 8;
  Index decoy_contexts = 8;
};

struct Exp2Row {
  Index d = 0, layers = 0, decoys = 0;
  // (unpadded windows ingested, stored-window accuracy)
  std::vector<std::pair<Index, double>> samples;
  double final_accuracy = 0.0;
};

inline void exp2_csv_header(std::ostream& os) {
  os << "d,layers,decoys,windows,accuracy\n";
}

template <class T>
std::vector<Exp2Row> run_exp2(const Exp2Config& cfg, std::ostream* csv) {
  if (cfg.windows < 1) throw ParameterError("exp2: windows must be >= 1");
  const Index stride = cfg.stride > 0 ? cfg.stride : cfg.h;
  if (csv) exp2_csv_header(*csv);
  std::vector<Exp2Row> rows;
  for (Index d : cfg.d_list) {
    for (Index dec : cfg.decoys) {
      // One text per decoy setting, shared by every layer count: the
      // largest window length decides its size.
      Index m_max = 1;
      for (Index l : cfg.layers) {
        Index m = 1;
        for (Index i = 0; i < l; ++i) m *= cfg.h;
        if (m > m_max) m_max = m;
      }
      DecoyTextSpec tspec;
      tspec.vocab_size = cfg.vocab_size;
      tspec.text_length = m_max + (cfg.windows - 1) * stride + 1;
      tspec.decoy_count = dec;
      tspec.decoy_length = cfg.h;
      tspec.seed = mix_seed(cfg.seed, {0xDEC0Dull,
                                       static_cast<std::uint64_t>(dec)});
      tspec.min_gap = cfg.decoy_min_gap;
      tspec.gap_spread = cfg.decoy_gap_spread;
      tspec.contexts_per_decoy = cfg.decoy_contexts;
      const std::vector<TokenId> text = gen_decoy_text(tspec);

      for (Index l : cfg.layers) {
        Index m = 1;
        for (Index i = 0; i < l; ++i) m *= cfg.h;
        const double bytes =
            (static_cast<double>(l + 1) * d * d +
             static_cast<double>(l) * (cfg.h + 1) * d * d +
             static_cast<double>(cfg.vocab_size) * d) *
            sizeof(T);
        if (bytes > cfg.memory_budget_gb * (1ull << 30))
          throw ParameterError(
              "exp2: config d=" + std::to_string(d) + " layers=" +
              std::to_string(l) + " needs about " +
              std::to_string(bytes / (1ull << 30)) + " GiB, over the " +
              std::to_string(cfg.memory_budget_gb) + " GiB budget");

        const std::uint64_t cfg_seed = mix_seed(
            cfg.seed, {static_cast<std::uint64_t>(d),
                       static_cast<std::uint64_t>(l),
                       static_cast<std::uint64_t>(dec)});
        MemoModel<T> model(static_cast<Index>(cfg.vocab_size), d, cfg.h, l,
                           cfg_seed);

        // Trim the shared text so exactly cfg.windows unpadded windows fit.
        const Index len = std::min<Index>(
            static_cast<Index>(text.size()),
            m + (cfg.windows - 1) * stride + 1);
        std::span<const TokenId> slice(text.data(),
                                       static_cast<std::size_t>(len));
        TextIngestion<T> session(model, slice, stride);

        Exp2Row row;
        row.d = d;
        row.layers = l;
        row.decoys = dec;

        const auto positions = model.unpadded_window_positions(len, stride);
        auto eval = [&](Index tick) {
          const Index seen = session.unpadded_done();
          RandomStream pick(cfg_seed,
                            streams::kEvalSample +
                                static_cast<std::uint32_t>(tick));
          std::vector<SequencePair> batch;
          const Index want = std::min(cfg.eval_sample, seen);
          batch.reserve(static_cast<std::size_t>(want));
          for (Index i = 0; i < want; ++i) {
            const Index p = positions[static_cast<std::size_t>(
                pick.next_below(static_cast<std::uint64_t>(seen)))];
            SequencePair sp;
            sp.tokens.assign(text.begin() + (p - m), text.begin() + p);
            sp.next = text[static_cast<std::size_t>(p)];
            batch.push_back(std::move(sp));
          }
          const double acc = model.accuracy(batch);
          row.samples.emplace_back(seen, acc);
          if (csv)
            *csv << d << ',' << l << ',' << dec << ',' << seen << ','
                 << acc << '\n';
          return acc;
        };

        Index tick = 0;
        while (session.step()) {
          if (session.unpadded_done() > 0 &&
              session.unpadded_done() % cfg.sample_every == 0 &&
              session.unpadded_done() < cfg.windows)
            eval(tick++);
          if (session.unpadded_done() >= cfg.windows) break;
        }
        row.final_accuracy = eval(tick);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace memo
