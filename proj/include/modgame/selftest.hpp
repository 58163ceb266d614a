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

// Built-in self checks behind the `codec-selftest` and `dwt-selftest`
// subcommands.

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>

#include "modgame/bitcodec.hpp"
#include "modgame/simmodel.hpp"

namespace modgame {

struct SelftestCounts {
  std::size_t passed = 0;
  std::size_t failed = 0;
  void record(bool ok) { ok ? ++passed : ++failed; }
};

struct CodecSelftest {
  SelftestCounts golden, round_trip, prefix_free, length_bound;
};

// Golden codewords, exhaustive round trip, prefix-freeness and the length
// bound |g(x)| <= 2 log2(|x| + 1) + 3 for |x| <= limit.
inline CodecSelftest codec_selftest(std::int64_t limit = 4096) {
  CodecSelftest r;
  const std::pair<std::int64_t, const char*> golden[] = {
      {0, "0"}, {1, "101"}, {8, "100001000"}, {-1, "111"}, {-8, "110001000"}};
  for (const auto& [x, word] : golden) r.golden.record(encode_g(x).to_string() == word);

  std::unordered_set<std::string> words;
  for (std::int64_t x = -limit; x <= limit; ++x) {
    const BitString w = encode_g(x);
    const Decoded d = decode_g(w);
    r.round_trip.record(d.value == x && d.consumed == w.size());
    r.length_bound.record(static_cast<double>(w.size()) <=
                          2.0 * std::log2(static_cast<double>(std::abs(x)) + 1.0) + 3.0);
    words.insert(w.to_string());
  }
  for (const auto& w : words) {
    bool ok = true;
    for (std::size_t len = 1; len < w.size() && ok; ++len) {
      ok = words.count(w.substr(0, len)) == 0;
    }
    r.prefix_free.record(ok);
  }
  return r;
}

struct DwtSelftest {
  SelftestCounts parseval, round_trip;
  double worst_parseval = 0.0;    // relative
  double worst_round_trip = 0.0;  // max abs
};

// Parseval and round trip for f1, f2, f3 under both wavelet families.
inline DwtSelftest dwt_selftest(int j_total = 10, double tol = 1e-9) {
  DwtSelftest r;
  for (auto fam : {WaveletFamily::kHaar, WaveletFamily::kDaubechies4}) {
    for (auto id : {FunctionId::kF1, FunctionId::kF2, FunctionId::kF3}) {
      const FunctionSpec f = sample_function(id, j_total);
      const CoeffSeq theta = dwt_forward(f, fam);
      double e_f = 0.0, e_c = 0.0;
      for (double v : f.samples) e_f += v * v;
      e_f /= static_cast<double>(f.samples.size());
      for (double v : theta.flat()) e_c += v * v;
      const double rel = std::abs(e_f - e_c) / e_f;
      r.worst_parseval = std::max(r.worst_parseval, rel);
      r.parseval.record(rel <= tol);

      const FunctionSpec back = dwt_inverse(theta, fam);
      double err = 0.0;
      for (std::size_t i = 0; i < f.samples.size(); ++i) {
        err = std::max(err, std::abs(back.samples[i] - f.samples[i]));
      }
      r.worst_round_trip = std::max(r.worst_round_trip, err);
      r.round_trip.record(err <= tol);
    }
  }
  return r;
}

}  // namespace modgame
