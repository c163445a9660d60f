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

#include <vector>

#include "memo/embeddings.hpp"

namespace memo {

// One training/query item: a fixed-length context and the token after it.
struct SequencePair {
  std::vector<TokenId> tokens;
  TokenId next = 0;
};

// Raw count-like scores over the vocabulary plus the greedy pick. Scores
// are not normalized; ties break toward the lowest token id.
template <class T>
struct Prediction {
  std::vector<T> scores;
  TokenId best = 0;
  T best_score{};
};

template <class T>
inline TokenId argmax_lowest(const std::vector<T>& scores) {
  TokenId best = 0;
  T bs = scores.empty() ? T{} : scores[0];
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > bs) {
      bs = scores[i];
      best = static_cast<TokenId>(i);
    }
  }
  return best;
}

// Greedy pick over the real vocabulary: row 0 is the reserved PAD filler,
// which no tokenized text can contain, so it is never emitted. Padded
// prefix windows do store PAD-heavy pairs, and without this exclusion
// their accumulated weight can hijack the argmax on long-context models.
template <class T>
inline TokenId argmax_skip_pad(const std::vector<T>& scores) {
  if (scores.size() < 2) return 0;
  TokenId best = 1;
  T bs = scores[1];
  for (std::size_t i = 2; i < scores.size(); ++i) {
    if (scores[i] > bs) {
      bs = scores[i];
      best = static_cast<TokenId>(i);
    }
  }
  return best;
}

}  // namespace memo
