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

#include "memo/corpus.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <limits>

#include "memo/errors.hpp"

namespace memo {

const std::string& Vocabulary::pad_token() {
  static const std::string pad = "<pad>";
  return pad;
}

Vocabulary::Vocabulary() {
  tokens_.push_back(pad_token());
  ids_.emplace(pad_token(), kPad);
}

Vocabulary Vocabulary::from_corpus_text(const std::string& text) {
  Vocabulary v;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    std::size_t j = i;
    while (j < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[j])))
      ++j;
    if (j > i) v.add(text.substr(i, j - i));
    i = j;
  }
  return v;
}

Vocabulary Vocabulary::from_raw_tokens(std::vector<std::string> tokens) {
  if (tokens.empty() || tokens[0] != pad_token())
    throw FormatError("vocabulary block must start with the PAD token");
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.ids_.clear();
  for (std::size_t i = 0; i < v.tokens_.size(); ++i)
    v.ids_.emplace(v.tokens_[i], static_cast<TokenId>(i));
  if (v.ids_.size() != v.tokens_.size())
    throw FormatError("vocabulary block contains duplicate tokens");
  return v;
}

TokenId Vocabulary::add(const std::string& word) {
  auto it = ids_.find(word);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(word);
  ids_.emplace(word, id);
  return id;
}

TokenId Vocabulary::id(const std::string& word) const {
  auto it = ids_.find(word);
  if (it == ids_.end())
    throw VocabularyError("unknown word: \"" + word + "\"");
  return it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size())
    throw VocabularyError("token id " + std::to_string(id) +
                          " outside vocabulary");
  return tokens_[id];
}

bool Vocabulary::contains(const std::string& word) const {
  return ids_.count(word) != 0;
}

std::vector<TokenId> tokenize(const Vocabulary& vocab,
                              const std::string& text) {
  std::vector<TokenId> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    std::size_t j = i;
    while (j < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[j])))
      ++j;
    if (j > i) {
      const std::string word = text.substr(i, j - i);
      if (word == Vocabulary::pad_token())
        throw VocabularyError("\"" + word + "\" is reserved");
      out.push_back(vocab.id(word));
    }
    i = j;
  }
  return out;
}

namespace {

std::string pack_ids(const std::vector<TokenId>& ids) {
  std::string key(ids.size() * sizeof(TokenId), '\0');
  std::memcpy(key.data(), ids.data(), key.size());
  return key;
}

}  // namespace

UniformPairStream::UniformPairStream(std::uint64_t vocab_size, Index h,
                                     std::uint64_t seed)
    : vocab_size_(vocab_size), h_(h),
      rng_(seed, streams::kUniformPairs) {
  if (vocab_size < 2)
    throw ParameterError("pair stream: vocab_size must be >= 2");
  if (h < 1) throw ParameterError("pair stream: h must be >= 1");
  // id 0 is reserved for PAD across the library and never drawn
  space_ = std::pow(static_cast<double>(vocab_size - 1),
                    static_cast<double>(h));
  if (!std::isfinite(space_)) space_ = std::numeric_limits<double>::max();
}

std::vector<SequencePair> UniformPairStream::next_batch(Index count) {
  if (count < 1) throw ParameterError("pair stream: empty batch");
  if (static_cast<double>(drawn_) + static_cast<double>(count) > space_)
    throw ParameterError(
        "pair stream exhausted: only " + std::to_string(space_) +
        " distinct sequences exist");
  std::vector<SequencePair> batch;
  batch.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    SequencePair p;
    p.tokens.resize(static_cast<std::size_t>(h_));
    while (true) {
      for (auto& t : p.tokens)
        t = static_cast<TokenId>(1 + rng_.next_below(vocab_size_ - 1));
      auto [it, fresh] = seen_.insert(pack_ids(p.tokens));
      if (fresh) break;
    }
    p.next = static_cast<TokenId>(1 + rng_.next_below(vocab_size_ - 1));
    ++drawn_;
    batch.push_back(std::move(p));
  }
  return batch;
}

namespace {

Index align_up(Index x, Index a) { return (x + a - 1) / a * a; }

TokenId filler(RandomStream& rng, std::uint64_t vocab) {
  return static_cast<TokenId>(1 + rng.next_below(vocab - 1));
}

}  // namespace

DecoyText gen_decoy_text_full(const DecoyTextSpec& spec) {
  if (spec.vocab_size < 2)
    throw ParameterError("decoy text: vocab_size must be >= 2");
  if (spec.text_length < 1)
    throw ParameterError("decoy text: text_length must be >= 1");
  if (spec.decoy_count < 0 || spec.decoy_length < 1)
    throw ParameterError("decoy text: bad decoy spec");
  if (spec.decoy_count > 0) {
    if (spec.text_length <= spec.decoy_length)
      throw ParameterError("decoy text: text too short for decoys");
    if (spec.contexts_per_decoy < 2)
      throw ParameterError("decoy text: need at least two contexts");
    if (spec.vocab_size < 16)
      throw ParameterError("decoy text: vocabulary too small for decoys");
  }

  RandomStream rng(spec.seed, streams::kDecoyText);
  DecoyText out;
  out.tokens.reserve(static_cast<std::size_t>(spec.text_length));

  const Index h = spec.decoy_length;
  const Index lead = h * h - h;  // lead-in long enough for an h^2 window

  // Decoy lexicon, distinct as tuples.
  std::unordered_set<std::string> used;
  for (Index w = 0; w < spec.decoy_count; ++w) {
    std::vector<TokenId> word(static_cast<std::size_t>(h));
    do {
      for (auto& t : word) t = filler(rng, spec.vocab_size);
    } while (!used.insert(pack_ids(word)).second);
    out.decoy_words.push_back(std::move(word));
  }

  // Fixed lead-ins and their bound successors, per decoy. The successor
  // after an occurrence is a function of the lead-in alone.
  std::vector<std::vector<std::vector<TokenId>>> leadins(
      static_cast<std::size_t>(spec.decoy_count));
  std::vector<std::vector<TokenId>> successors(
      static_cast<std::size_t>(spec.decoy_count));
  for (Index w = 0; w < spec.decoy_count; ++w) {
    std::unordered_set<TokenId> used_succ;
    for (Index c = 0; c < spec.contexts_per_decoy; ++c) {
      std::vector<TokenId> li(static_cast<std::size_t>(lead));
      for (auto& t : li) t = filler(rng, spec.vocab_size);
      leadins[static_cast<std::size_t>(w)].push_back(std::move(li));
      TokenId y = filler(rng, spec.vocab_size);
      while (!used_succ.insert(y).second) y = filler(rng, spec.vocab_size);
      successors[static_cast<std::size_t>(w)].push_back(y);
    }
  }
  std::vector<Index> occ_count(static_cast<std::size_t>(spec.decoy_count), 0);

  const Index unit_len = lead + h;
  Index next_event =
      spec.decoy_count > 0
          ? align_up(spec.min_gap +
                         static_cast<Index>(rng.next_below(
                             static_cast<std::uint64_t>(spec.gap_spread + 1))),
                     h)
          : spec.text_length;  // never
  Index word_rr = 0;

  while (static_cast<Index>(out.tokens.size()) < spec.text_length) {
    const Index pos = static_cast<Index>(out.tokens.size());
    if (spec.decoy_count > 0 && pos >= next_event) {
      if (pos + unit_len + 1 <= spec.text_length) {
        const Index w = word_rr++ % spec.decoy_count;
        const Index c = occ_count[static_cast<std::size_t>(w)]++ %
                        spec.contexts_per_decoy;
        DecoyOccurrence occ;
        occ.position = pos;
        occ.length = unit_len;
        occ.decoy = w;
        occ.next = successors[static_cast<std::size_t>(w)]
                             [static_cast<std::size_t>(c)];
        for (TokenId t :
             leadins[static_cast<std::size_t>(w)][static_cast<std::size_t>(c)])
          out.tokens.push_back(t);
        for (TokenId t : out.decoy_words[static_cast<std::size_t>(w)])
          out.tokens.push_back(t);
        out.tokens.push_back(occ.next);
        out.occurrences.push_back(occ);
        next_event = align_up(
            static_cast<Index>(out.tokens.size()) + spec.min_gap +
                static_cast<Index>(rng.next_below(
                    static_cast<std::uint64_t>(spec.gap_spread + 1))),
            h);
        continue;
      }
      // Not enough room left for a full unit; fall through to filler.
      next_event = spec.text_length;
    }
    out.tokens.push_back(filler(rng, spec.vocab_size));
  }
  return out;
}

std::vector<TokenId> gen_decoy_text(const DecoyTextSpec& spec) {
  return gen_decoy_text_full(spec).tokens;
}

}  // namespace memo
