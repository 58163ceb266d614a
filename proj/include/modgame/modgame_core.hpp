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

// Three-stage coordinate decoder shared by the minimax and adaptive
// protocols:
//   1. crude localization: an integer window I_a of width W around the
//      first machine's floor(X/sigma);
//   2. finer localization: the mode of the floor(X/sigma) mod W residues
//      picks the unique x_b in I_a with that residue;
//   3. refinement: the fraction p_h of floor(X/sigma) mod 8 residues equal
//      to (x_b - 2) mod 8 is inverted through the wrapped-Gaussian window
//      mass h(y), which is strictly decreasing on [x_b - 1, x_b + 1].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "modgame/errors.hpp"

namespace modgame {

// Mathematical floor division and nonnegative remainder.
inline std::int64_t floor_mod(std::int64_t a, std::int64_t n) {
  const std::int64_t r = a % n;
  return r < 0 ? r + n : r;
}

// floor(x / step) as an integer; rejects values that do not fit.
inline std::int64_t floor_index(double x, double step) {
  const double v = std::floor(x / step);
  if (!(std::abs(v) < 9.0e18)) throw DomainError("quantized value out of int64 range");
  return static_cast<std::int64_t>(v);
}

// Standard normal CDF.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

// Phi(b) - Phi(a) for a <= b, evaluated on the tail that avoids
// cancellation.
inline double normal_mass(double a, double b) {
  constexpr double kInvSqrt2 = std::numbers::sqrt2 / 2.0;
  if (a >= 0.0) return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
  if (b <= 0.0) return 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
  return 1.0 - 0.5 * std::erfc(-a * kInvSqrt2) - 0.5 * std::erfc(b * kInvSqrt2);
}

inline constexpr double kWindowRadius = 40.0;

// Probability that floor(Y) is congruent to `lo` mod 8 for Y ~ N(y, 1),
// written in terms of the offset t = y - lo:
//   sum_l Phi(1 + 8l - t) - Phi(8l - t).
// Windows farther than kWindowRadius from y are dropped.
inline double wrapped_mass_offset(double t) {
  const auto l_lo = static_cast<long>(std::ceil((t - kWindowRadius - 1.0) / 8.0));
  const auto l_hi = static_cast<long>(std::floor((t + kWindowRadius) / 8.0));
  double sum = 0.0;
  for (long l = l_lo; l <= l_hi; ++l) {
    const double a = 8.0 * static_cast<double>(l) - t;
    sum += normal_mass(a, a + 1.0);
  }
  return sum;
}

inline double wrapped_window_mass(std::int64_t lo, double y) {
  return wrapped_mass_offset(y - static_cast<double>(lo));
}

// h(y) for the window [x_b - 2, x_b - 1] and its translates by 8.
inline double h_eval(std::int64_t x_b, double y) {
  return wrapped_window_mass(x_b - 2, y);
}

// Inverse of h on [x_b - 1, x_b + 1], in offset form: returns t in [-1, 1]
// with h(x_b + t) = p, clamped at both ends.
inline double h_invert_offset(double p) {
  // h(x_b + t) = wrapped_mass_offset(t + 2).
  const double h_left = wrapped_mass_offset(1.0);
  const double h_right = wrapped_mass_offset(3.0);
  if (p >= h_left) return -1.0;
  if (p <= h_right) return 1.0;
  double lo = -1.0, hi = 1.0;
  for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (wrapped_mass_offset(mid + 2.0) > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double h_invert(std::int64_t x_b, double p) {
  return static_cast<double>(x_b) + h_invert_offset(p);
}

// Half-open integer interval [lo, hi).
struct IntInterval {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  std::int64_t width() const { return hi - lo; }
  bool contains(std::int64_t x) const { return lo <= x && x < hi; }
  friend bool operator==(const IntInterval&, const IntInterval&) = default;
};

inline IntInterval interval_crude(std::int64_t crude, std::int64_t W) {
  if (W % 2 == 1) return {crude - (W - 1) / 2, crude + (W + 1) / 2};
  return {crude - W / 2, crude + W / 2};
}

// Most frequent residue in [0, W); ties go to the smallest residue.
inline std::int64_t mode_residue(std::span<const std::int64_t> residues,
                                 std::int64_t W) {
  std::vector<int> counts(static_cast<std::size_t>(W), 0);
  for (std::int64_t r : residues) {
    if (r < 0 || r >= W) throw OutOfRange("finer residue outside [0, W)");
    ++counts[static_cast<std::size_t>(r)];
  }
  return std::max_element(counts.begin(), counts.end()) - counts.begin();
}

// The unique x in I_a whose residue mod W equals the mode of `finer`.
inline std::int64_t locate_fine(const IntInterval& I_a,
                                std::span<const std::int64_t> finer,
                                std::int64_t W) {
  if (finer.empty()) throw EmptyTranscript("no finer-localization strings");
  if (I_a.width() != W) throw DomainError("interval width must equal W");
  const std::int64_t z = mode_residue(finer, W);
  return I_a.lo + floor_mod(z - I_a.lo, W);
}

// Decoded strings for one coordinate (j, k).
struct CoordTranscripts {
  std::int64_t crude = 0;
  std::vector<std::int64_t> finer;       // residues mod W
  std::vector<std::int64_t> refinement;  // residues mod 8
};

struct DecodeState {
  IntInterval I_a;
  std::int64_t x_b = 0;
  double p_h = 0.0;
};

// x_b and p_h for one coordinate. W < 2 skips finer localization.
inline DecodeState decode_state(std::int64_t crude,
                                std::span<const std::int64_t> finer,
                                std::span<const std::int64_t> refinement,
                                std::int64_t W) {
  if (refinement.empty()) throw EmptyTranscript("no refinement strings");
  DecodeState st;
  if (W >= 2) {
    st.I_a = interval_crude(crude, W);
    st.x_b = locate_fine(st.I_a, finer, W);
  } else {
    st.I_a = {crude, crude + 1};
    st.x_b = crude;
  }
  const std::int64_t target = floor_mod(st.x_b - 2, 8);
  std::size_t hits = 0;
  for (std::int64_t r : refinement) hits += (r == target);
  st.p_h = static_cast<double>(hits) / static_cast<double>(refinement.size());
  return st;
}

// Estimate of theta_jk; always lies in sigma * [x_b - 1, x_b + 1].
inline double decode_coord(std::int64_t crude,
                           std::span<const std::int64_t> finer,
                           std::span<const std::int64_t> refinement,
                           std::int64_t W, double sigma) {
  const DecodeState st = decode_state(crude, finer, refinement, W);
  return sigma * h_invert(st.x_b, st.p_h);
}

inline double decode_coord(const CoordTranscripts& ct, std::int64_t W,
                           double sigma) {
  return decode_coord(ct.crude, ct.finer, ct.refinement, W, sigma);
}

// Memoized inverse offsets for p_h = hits / n, shared across coordinates
// that have the same number of refinement strings.
class InverseTable {
 public:
  double offset(std::size_t hits, std::size_t n) {
    if (n != n_) {
      n_ = n;
      cache_.assign(n + 1, kUnset);
    }
    double& slot = cache_[hits];
    if (slot == kUnset) {
      slot = h_invert_offset(static_cast<double>(hits) / static_cast<double>(n));
    }
    return slot;
  }

 private:
  static constexpr double kUnset = 1e300;
  std::size_t n_ = 0;
  std::vector<double> cache_;
};

}  // namespace modgame
