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

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

namespace memo {

// Identifies the generator wired into persisted models: Philox4x32-10
// counter blocks, (x+0.5)*2^-32 unit floats, Box-Muller pairs. Bump if any
// of that changes.
inline constexpr std::uint64_t kRngAlgoId = 1;

// Philox4x32-10 as documented in "Parallel random numbers: as easy as
// 1, 2, 3" (Salmon, Moraes, Dror, Shaw; SC'11). Counter-based: block i of
// stream s under seed k is a pure function of (i, s, k), so every table can
// be regenerated bit-identically on any platform and any thread count.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::uint64_t index,
                                            std::uint32_t stream,
                                            std::uint64_t seed) {
    std::uint32_t c0 = static_cast<std::uint32_t>(index);
    std::uint32_t c1 = static_cast<std::uint32_t>(index >> 32);
    std::uint32_t c2 = stream;
    std::uint32_t c3 = 0;
    std::uint32_t k0 = static_cast<std::uint32_t>(seed);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      c0 = hi1 ^ c1 ^ k0;
      c1 = lo1;
      c2 = hi0 ^ c3 ^ k1;
      c3 = lo0;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return {c0, c1, c2, c3};
  }
};

// Stream ids keep independently consumed lanes from colliding under one
// model seed. Layer-indexed matrices get kStreamX + layer.
namespace streams {
inline constexpr std::uint32_t kEmbedding = 0x0001;
inline constexpr std::uint32_t kWv = 0x0100;        // + layer index
inline constexpr std::uint32_t kPrj = 0x0200;       // + layer index
inline constexpr std::uint32_t kNovCheck = 0x0400;
inline constexpr std::uint32_t kUniformPairs = 0x0500;
inline constexpr std::uint32_t kDecoyText = 0x0600;
inline constexpr std::uint32_t kEvalSample = 0x0700;
}  // namespace streams

// Sequential view over one Philox stream.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint32_t stream)
      : seed_(seed), stream_(stream) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      buf_ = Philox4x32::block(block_index_++, stream_, seed_);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform in the open interval (0,1); never returns an endpoint, so it is
  // safe under log().
  double next_unit() {
    return (static_cast<double>(next_u32()) + 0.5) * 0x1p-32;
  }

  // Standard normal via Box-Muller; consumes two uniforms per pair.
  double next_gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  // Unbiased uniform draw from [0, bound) by rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t lim = (-bound) % bound;  // 2^64 mod bound
    std::uint64_t r = next_u64();
    while (r < lim) r = next_u64();
    return r % bound;
  }

  template <class T>
  void fill_gaussian(std::span<T> out, double stddev) {
    for (auto& v : out) v = static_cast<T>(stddev * next_gaussian());
  }

 private:
  std::uint64_t seed_;
  std::uint32_t stream_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace memo
