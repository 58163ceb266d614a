//
// Copyright 2026 The modgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "modgame/errors.hpp"

namespace modgame {

// Ordered sequence of bits, packed most-significant-bit first into 64-bit
// words. size() is the exact communication cost in bits.
class BitString {
 public:
  BitString() = default;

  static BitString from_string(std::string_view text) {
    BitString out;
    for (char c : text) {
      if (c != '0' && c != '1') {
        throw MalformedCode("bit string contains a character other than 0/1");
      }
      out.push_back(c == '1');
    }
    return out;
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool operator[](std::size_t i) const {
    return (words_[i >> 6] >> (63 - (i & 63))) & 1u;
  }

  void push_back(bool bit) {
    if ((size_ & 63) == 0) words_.push_back(0);
    if (bit) words_.back() |= std::uint64_t{1} << (63 - (size_ & 63));
    ++size_;
  }

  // Appends the low `width` bits of `value`, most significant first.
  void append_bits(std::uint64_t value, unsigned width) {
    for (unsigned b = width; b-- > 0;) push_back((value >> b) & 1u);
  }

  void append(const BitString& other) {
    for (std::size_t i = 0; i < other.size_; ++i) push_back(other[i]);
  }

  void clear() {
    words_.clear();
    size_ = 0;
  }

  std::string to_string() const {
    std::string out;
    out.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) out.push_back((*this)[i] ? '1' : '0');
    return out;
  }

  friend BitString operator+(BitString a, const BitString& b) {
    a.append(b);
    return a;
  }

  friend bool operator==(const BitString& a, const BitString& b) {
    if (a.size_ != b.size_) return false;
    for (std::size_t i = 0; i < a.size_; ++i) {
      if (a[i] != b[i]) return false;
    }
    return true;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

// Sequential reader over a BitString.
class BitReader {
 public:
  explicit BitReader(const BitString& bits, std::size_t pos = 0)
      : bits_(&bits), pos_(pos) {}

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bits_->size() - pos_; }
  bool exhausted() const { return pos_ >= bits_->size(); }

  bool read_bit() {
    if (exhausted()) throw MalformedCode("bit stream exhausted mid code word");
    return (*bits_)[pos_++];
  }

  std::uint64_t read_bits(unsigned width) {
    if (remaining() < width) {
      throw MalformedCode("bit stream exhausted mid code word");
    }
    std::uint64_t v = 0;
    for (unsigned b = 0; b < width; ++b) v = (v << 1) | (*bits_)[pos_++];
    return v;
  }

 private:
  const BitString* bits_;
  std::size_t pos_;
};

namespace detail {

inline unsigned bit_length(std::uint64_t v) {
  return static_cast<unsigned>(std::bit_width(v));
}

}  // namespace detail

// Localization code g. Writes the code word of `x` onto `out`:
//   0        -> "0"
//   x > 0    -> "1", k zeros, binary(x)         (k = bit length of x)
//   x < 0    -> "11", k-1 zeros, binary(-x)     (k = bit length of -x)
inline void append_g(BitString& out, std::int64_t x) {
  if (x == 0) {
    out.push_back(false);
    return;
  }
  // Magnitude in unsigned arithmetic so INT64_MIN is representable.
  const std::uint64_t mag = x > 0 ? static_cast<std::uint64_t>(x)
                                  : ~static_cast<std::uint64_t>(x) + 1;
  const unsigned k = detail::bit_length(mag);
  out.push_back(true);
  unsigned zeros = k;
  if (x < 0) {
    out.push_back(true);
    zeros = k - 1;
  }
  for (unsigned i = 0; i < zeros; ++i) out.push_back(false);
  out.append_bits(mag, k);
}

inline BitString encode_g(std::int64_t x) {
  BitString out;
  append_g(out, x);
  return out;
}

// Code length of g(x) without materializing the word: 1 for zero and
// 2k + 1 otherwise.
inline std::size_t g_length(std::int64_t x) {
  if (x == 0) return 1;
  const std::uint64_t mag = x > 0 ? static_cast<std::uint64_t>(x)
                                  : ~static_cast<std::uint64_t>(x) + 1;
  return 2 * detail::bit_length(mag) + 1;
}

// Reads one g code word from the reader.
inline std::int64_t read_g(BitReader& in) {
  if (!in.read_bit()) return 0;
  const bool negative = in.read_bit();
  // Positive: the bit just read is the first of k zeros. Negative: it is the
  // second leading one and k-1 zeros follow.
  unsigned zeros = negative ? 0 : 1;
  while (!in.read_bit()) {
    ++zeros;
    if (zeros > 64) throw MalformedCode("g code word longer than 64-bit range");
  }
  const unsigned k = negative ? zeros + 1 : zeros;
  if (k > 64) throw MalformedCode("g code word longer than 64-bit range");
  // The leading 1 of binary(|x|) has already been consumed.
  const std::uint64_t mag =
      (k == 1 ? 0 : in.read_bits(k - 1)) | (std::uint64_t{1} << (k - 1));
  if (!negative) {
    if (mag > static_cast<std::uint64_t>(INT64_MAX)) {
      throw MalformedCode("g code word exceeds int64 range");
    }
    return static_cast<std::int64_t>(mag);
  }
  if (mag > static_cast<std::uint64_t>(INT64_MAX) + 1) {
    throw MalformedCode("g code word exceeds int64 range");
  }
  return static_cast<std::int64_t>(~mag + 1);
}

struct Decoded {
  std::int64_t value;
  std::size_t consumed;
};

// Decodes the code word at the start of `stream`.
inline Decoded decode_g(const BitString& stream) {
  BitReader in(stream);
  const std::int64_t v = read_g(in);
  return {v, in.position()};
}

// Fixed-width three-bit word for refinement residues in [0, 8).
inline void append_fixed3(BitString& out, std::int64_t r) {
  if (r < 0 || r > 7) throw OutOfRange("refinement residue outside [0, 8)");
  out.append_bits(static_cast<std::uint64_t>(r), 3);
}

inline BitString encode_fixed3(std::int64_t r) {
  BitString out;
  append_fixed3(out, r);
  return out;
}

inline std::int64_t read_fixed3(BitReader& in) {
  return static_cast<std::int64_t>(in.read_bits(3));
}

// Splits a concatenation of g code words back into integers. Throws
// MalformedCode if the final word is incomplete.
inline std::vector<std::int64_t> decode_g_stream(const BitString& stream) {
  std::vector<std::int64_t> out;
  BitReader in(stream);
  while (!in.exhausted()) out.push_back(read_g(in));
  return out;
}

}  // namespace modgame
