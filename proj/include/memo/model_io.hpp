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

// Model file layout (little-endian):
//   "MEMO"                       4 bytes
//   version                      u8  (1)
//   dtype flag                   u8  (4 = f32, 8 = f64)
//   n, d, h, l, seed, rng_algo   u64 x 6
//   C^(1..l), C^(last)           l+1 matrices, d*d entries row-major
//   vocab: count u64, then per token u32 length + UTF-8 bytes
// Embeddings and projections are regenerated from the seed, not stored.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "memo/corpus.hpp"
#include "memo/errors.hpp"
#include "memo/memo_stack.hpp"

namespace memo {

inline constexpr std::uint8_t kModelFormatVersion = 1;

template <class T>
constexpr std::uint8_t dtype_flag();
template <>
constexpr std::uint8_t dtype_flag<float>() { return 4; }
template <>
constexpr std::uint8_t dtype_flag<double>() { return 8; }

namespace io_detail {

inline void put_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open model file: " + path);
  }

  void read_exact(void* dst, std::size_t n) {
    in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw CorruptionError("model file truncated",
                            offset_ + static_cast<std::uint64_t>(in_.gcount()));
    offset_ += n;
  }

  std::uint8_t u8() {
    std::uint8_t v;
    read_exact(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    read_exact(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    read_exact(&v, 8);
    return v;
  }

  std::uint64_t offset() const { return offset_; }

  void expect_eof() {
    in_.peek();
    if (!in_.eof())
      throw CorruptionError("trailing bytes after vocabulary block", offset_);
  }

 private:
  std::ifstream in_;
  std::uint64_t offset_ = 0;
};

}  // namespace io_detail

template <class T>
void save_model(const MemoModel<T>& model, const Vocabulary& vocab,
                const std::string& path) {
  if (vocab.size() != model.vocab_size())
    throw ParameterError("vocabulary size does not match the model");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model file: " + path);
  out.write("MEMO", 4);
  const std::uint8_t version = kModelFormatVersion;
  const std::uint8_t dtype = dtype_flag<T>();
  out.write(reinterpret_cast<const char*>(&version), 1);
  out.write(reinterpret_cast<const char*>(&dtype), 1);
  io_detail::put_u64(out, static_cast<std::uint64_t>(model.vocab_size()));
  io_detail::put_u64(out, static_cast<std::uint64_t>(model.dim()));
  io_detail::put_u64(out, static_cast<std::uint64_t>(model.heads()));
  io_detail::put_u64(out, static_cast<std::uint64_t>(model.layer_count()));
  io_detail::put_u64(out, model.seed());
  io_detail::put_u64(out, kRngAlgoId);
  for (Index i = 0; i < model.layer_count(); ++i) {
    const auto& m = model.layer_memory(i).mat();
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(T)));
  }
  const auto& last = model.last_memory().mat();
  out.write(reinterpret_cast<const char*>(last.data()),
            static_cast<std::streamsize>(last.size() * sizeof(T)));
  io_detail::put_u64(out, static_cast<std::uint64_t>(vocab.size()));
  for (const auto& tok : vocab.tokens()) {
    io_detail::put_u32(out, static_cast<std::uint32_t>(tok.size()));
    out.write(tok.data(), static_cast<std::streamsize>(tok.size()));
  }
  if (!out) throw IoError("write failed: " + path);
}

struct LoadedModel {
  std::uint8_t dtype;
  std::variant<MemoModel<float>, MemoModel<double>> model;
  Vocabulary vocab;
};

namespace io_detail {

template <class T>
MemoModel<T> load_body(Reader& in, std::uint64_t n, std::uint64_t d,
                       std::uint64_t h, std::uint64_t l,
                       std::uint64_t seed) {
  MemoModel<T> model(static_cast<Index>(n), static_cast<Index>(d),
                     static_cast<Index>(h), static_cast<Index>(l), seed);
  for (Index i = 0; i < model.layer_count(); ++i) {
    auto& m = model.layer_memory(i).mat();
    in.read_exact(m.data(), static_cast<std::size_t>(m.size()) * sizeof(T));
  }
  auto& last = model.last_memory().mat();
  in.read_exact(last.data(),
                static_cast<std::size_t>(last.size()) * sizeof(T));
  return model;
}

}  // namespace io_detail

inline LoadedModel load_model(const std::string& path) {
  io_detail::Reader in(path);
  char magic[4];
  in.read_exact(magic, 4);
  if (std::memcmp(magic, "MEMO", 4) != 0)
    throw FormatError("not a model file (bad magic)");
  const std::uint8_t version = in.u8();
  if (version != kModelFormatVersion)
    throw FormatError("unsupported model version " + std::to_string(version));
  const std::uint8_t dtype = in.u8();
  if (dtype != 4 && dtype != 8)
    throw FormatError("unsupported dtype flag " + std::to_string(dtype));
  const std::uint64_t n = in.u64();
  const std::uint64_t d = in.u64();
  const std::uint64_t h = in.u64();
  const std::uint64_t l = in.u64();
  const std::uint64_t seed = in.u64();
  const std::uint64_t algo = in.u64();
  if (algo != kRngAlgoId)
    throw FormatError("model written with unknown rng algorithm " +
                      std::to_string(algo));
  if (n < 1 || d < 2 || h < 1 || l < 1 || l > 16 || h > (1u << 20) ||
      d % h != 0)
    throw FormatError("implausible model header");

  auto finish = [&](auto model) -> LoadedModel {
    const std::uint64_t count = in.u64();
    if (count != n)
      throw CorruptionError("vocabulary count does not match header",
                            in.offset());
    std::vector<std::string> tokens;
    tokens.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      const std::uint32_t len = in.u32();
      if (len > (1u << 20))
        throw CorruptionError("implausible token length", in.offset());
      std::string tok(len, '\0');
      if (len) in.read_exact(tok.data(), len);
      tokens.push_back(std::move(tok));
    }
    in.expect_eof();
    return LoadedModel{dtype_flag<typename decltype(model)::value_type>(),
                       std::move(model.value),
                       Vocabulary::from_raw_tokens(std::move(tokens))};
  };

  if (dtype == 4) {
    struct Wrap {
      using value_type = float;
      MemoModel<float> value;
    };
    return finish(Wrap{io_detail::load_body<float>(in, n, d, h, l, seed)});
  }
  struct Wrap {
    using value_type = double;
    MemoModel<double> value;
  };
  return finish(Wrap{io_detail::load_body<double>(in, n, d, h, l, seed)});
}

}  // namespace memo
