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
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "memo/lm_common.hpp"
#include "memo/rng.hpp"

namespace memo {

// Bijective token-string <-> id map. Id 0 is the reserved PAD token, which
// tokenization of input text never produces.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static const std::string& pad_token();

  Vocabulary();

  // Whitespace-splits the text and adds unseen words in appearance order.
  static Vocabulary from_corpus_text(const std::string& text);
  // Trusts a complete id-ordered token list (model loading); element 0
  // must be the PAD token.
  static Vocabulary from_raw_tokens(std::vector<std::string> tokens);

  TokenId add(const std::string& word);     // existing word returns its id
  TokenId id(const std::string& word) const;
  const std::string& token(TokenId id) const;
  bool contains(const std::string& word) const;
  Index size() const { return static_cast<Index>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Whitespace tokenization against a fixed vocabulary. Unknown words are
// hard errors: silently merging tokens would corrupt memorized content.
std::vector<TokenId> tokenize(const Vocabulary& vocab,
                              const std::string& text);

// Deterministic stream of (h-token sequence, next token) pairs drawn
// uniformly from [0, vocab_size); sequences are distinct within and across
// batches of one stream.
class UniformPairStream {
 public:
  UniformPairStream(std::uint64_t vocab_size, Index h, std::uint64_t seed);

  std::vector<SequencePair> next_batch(Index count);

  std::uint64_t drawn() const { return drawn_; }

 private:
  std::uint64_t vocab_size_;
  Index h_;
  RandomStream rng_;
  std::uint64_t drawn_ = 0;
  double space_;  // vocab_size^h, saturated
  std::unordered_set<std::string> seen_;
};

// Random token stream with repeated h-token decoy words whose successor
// depends on the tokens preceding the decoy, so a window-h memorizer
// cannot recall all of them. Each decoy has contexts_per_decoy fixed
// (h^2 - h)-token lead-ins, each bound to its own successor; occurrences
// cycle through them, so the successor is determined by the h^2-token
// context but looks k-way ambiguous to an h-token window. All filler
// tokens are uniform over [1, vocab_size); PAD (0) is never emitted.
struct DecoyTextSpec {
  std::uint64_t vocab_size = 100000;
  Index text_length = 0;
  Index decoy_count = 0;      // distinct decoy words
  Index decoy_length = 4;     // h
  std::uint64_t seed = 0;
  // Placement: units start at decoy_length-aligned positions separated by
  // at least min_gap filler tokens plus jitter in [0, gap_spread].
  Index min_gap = 12;
  Index gap_spread = 8;
  Index contexts_per_decoy = 8;  // lead-ins (and successors) per decoy
};

struct DecoyOccurrence {
  Index position;   // start of the lead-in
  Index length;     // lead-in + decoy word, in tokens
  Index decoy;      // decoy word index
  TokenId next;     // the successor token right after the unit
};

struct DecoyText {
  std::vector<TokenId> tokens;
  std::vector<std::vector<TokenId>> decoy_words;
  std::vector<DecoyOccurrence> occurrences;
};

DecoyText gen_decoy_text_full(const DecoyTextSpec& spec);
std::vector<TokenId> gen_decoy_text(const DecoyTextSpec& spec);

}  // namespace memo
