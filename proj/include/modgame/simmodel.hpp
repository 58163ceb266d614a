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

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "modgame/besov.hpp"
#include "modgame/errors.hpp"
#include "modgame/rng.hpp"

namespace modgame {

// Data held by one local machine: X_i = theta + sigma * z_i.
struct Observation {
  int machine_id = 0;  // 1-based
  CoeffSeq data;
};

// Noisy copy of theta for machine `machine_id` (1-based). The stream is
// keyed on (seed, machine_id) alone.
inline void observe_machine_into(const CoeffSeq& theta, double sigma, Seed seed,
                                 int machine_id, CoeffSeq& out) {
  if (out.shape() != theta.shape()) out = CoeffSeq(theta.shape());
  Engine eng = make_engine(derive_seed(
      seed, {stream_tag::kMachine, static_cast<std::uint64_t>(machine_id)}));
  std::normal_distribution<double> normal;
  auto src = theta.flat();
  auto dst = out.flat();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] + sigma * normal(eng);
}

inline Observation observe_machine(const CoeffSeq& theta, double sigma, Seed seed,
                                   int machine_id) {
  Observation obs{machine_id, CoeffSeq(theta.shape())};
  observe_machine_into(theta, sigma, seed, machine_id, obs.data);
  return obs;
}

inline std::vector<Observation> sample_observations(const CoeffSeq& theta,
                                                    double sigma, int m,
                                                    Seed seed) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  if (m < 1) throw DomainError("machine count must be at least 1");
  std::vector<Observation> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int i = 1; i <= m; ++i) out.push_back(observe_machine(theta, sigma, seed, i));
  return out;
}

// ---------------------------------------------------------------------------
// Test functions and the periodic orthonormal wavelet transform.

enum class FunctionId { kF1, kF2, kF3, kCustom };

inline std::string_view to_string(FunctionId id) {
  switch (id) {
    case FunctionId::kF1: return "f1";
    case FunctionId::kF2: return "f2";
    case FunctionId::kF3: return "f3";
    case FunctionId::kCustom: return "custom";
  }
  return "custom";
}

// Samples of a function on the uniform grid t_i = i / n of [0, 1).
struct FunctionSpec {
  FunctionId id = FunctionId::kCustom;
  std::vector<double> samples;
};

inline double eval_test_function(FunctionId id, double t) {
  using std::numbers::pi;
  switch (id) {
    case FunctionId::kF1:
      return 1.5 * std::sin(4 * pi * t);
    case FunctionId::kF2:
      return std::sin(4 * pi * t) + 0.7 * std::cos(18 * pi * t);
    case FunctionId::kF3:
      return 0.8 * std::sin(4 * pi * t) + 0.5 * std::cos(18 * pi * t) +
             0.5 * std::cos(44 * pi * t);
    case FunctionId::kCustom:
      break;
  }
  throw ConfigError("custom functions have no closed form");
}

// 2^{j_total+1} samples of f1, f2 or f3.
inline FunctionSpec sample_function(FunctionId id, int j_total) {
  const std::size_t n = std::size_t{1} << (j_total + 1);
  FunctionSpec f{id, std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    f.samples[i] = eval_test_function(id, static_cast<double>(i) / n);
  }
  return f;
}

enum class WaveletFamily { kHaar, kDaubechies4 };

inline std::string_view to_string(WaveletFamily w) {
  return w == WaveletFamily::kHaar ? "haar" : "db4";
}

namespace detail {

inline std::vector<double> lowpass_filter(WaveletFamily family) {
  if (family == WaveletFamily::kHaar) {
    return {std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 2};
  }
  const double r3 = std::sqrt(3.0);
  const double d = 4.0 * std::numbers::sqrt2;
  return {(1 + r3) / d, (3 + r3) / d, (3 - r3) / d, (1 - r3) / d};
}

// Quadrature mirror: g_k = (-1)^k h_{L-1-k}.
inline std::vector<double> highpass_filter(const std::vector<double>& h) {
  std::vector<double> g(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    g[k] = (k % 2 == 0 ? 1.0 : -1.0) * h[h.size() - 1 - k];
  }
  return g;
}

// One periodized analysis step: x (length n) -> approx, detail (n/2 each).
inline void analysis_step(std::span<const double> x, std::span<double> approx,
                          std::span<double> detail, const std::vector<double>& h,
                          const std::vector<double>& g) {
  const std::size_t n = x.size();
  for (std::size_t k = 0; k < n / 2; ++k) {
    double a = 0.0, d = 0.0;
    for (std::size_t t = 0; t < h.size(); ++t) {
      const double v = x[(2 * k + t) % n];
      a += h[t] * v;
      d += g[t] * v;
    }
    approx[k] = a;
    detail[k] = d;
  }
}

// Transpose of analysis_step.
inline void synthesis_step(std::span<const double> approx,
                           std::span<const double> detail, std::span<double> x,
                           const std::vector<double>& h,
                           const std::vector<double>& g) {
  const std::size_t n = x.size();
  std::fill(x.begin(), x.end(), 0.0);
  for (std::size_t k = 0; k < n / 2; ++k) {
    for (std::size_t t = 0; t < h.size(); ++t) {
      x[(2 * k + t) % n] += h[t] * approx[k] + g[t] * detail[k];
    }
  }
}

}  // namespace detail

// Orthonormal periodic DWT of n = 2^{J+1} samples. Samples are weighted by
// sqrt(1/n) so that sum(samples^2)/n = sum(coefficients^2). The result uses
// the augmented layout: level 0 = {scaling, detail_0}, level j = 2^j details.
inline CoeffSeq dwt_forward(const FunctionSpec& f,
                            WaveletFamily family = WaveletFamily::kHaar) {
  const std::size_t n = f.samples.size();
  if (n < 2 || !std::has_single_bit(n)) {
    throw ShapeError("sample count must be a power of two, at least 2");
  }
  const int j_total = std::countr_zero(n) - 1;
  const auto h = detail::lowpass_filter(family);
  const auto g = detail::highpass_filter(h);

  CoeffSeq theta(j_total, /*augmented=*/true);
  const double w = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> cur(n), approx(n / 2);
  for (std::size_t i = 0; i < n; ++i) cur[i] = f.samples[i] * w;
  for (int j = j_total; j >= 0; --j) {
    const std::size_t len = std::size_t{2} << j;
    std::span<double> det =
        j == 0 ? theta.level(0).subspan(1, 1) : theta.level(j);
    detail::analysis_step(std::span<const double>(cur.data(), len),
                          std::span<double>(approx.data(), len / 2), det, h, g);
    std::copy_n(approx.begin(), len / 2, cur.begin());
  }
  theta.at(0, 0) = cur[0];
  return theta;
}

inline FunctionSpec dwt_inverse(const CoeffSeq& theta,
                                WaveletFamily family = WaveletFamily::kHaar) {
  if (!theta.shape().augmented) {
    throw ShapeError("inverse transform needs the augmented level-0 layout");
  }
  const int j_total = theta.j_total();
  const std::size_t n = std::size_t{2} << j_total;
  const auto h = detail::lowpass_filter(family);
  const auto g = detail::highpass_filter(h);

  std::vector<double> cur(n), next(n);
  cur[0] = theta.at(0, 0);
  for (int j = 0; j <= j_total; ++j) {
    const std::size_t len = std::size_t{2} << j;
    auto det = j == 0 ? theta.level(0).subspan(1, 1) : theta.level(j);
    detail::synthesis_step(std::span<const double>(cur.data(), len / 2), det,
                           std::span<double>(next.data(), len), h, g);
    std::copy_n(next.begin(), len, cur.begin());
  }
  FunctionSpec f{FunctionId::kCustom, std::move(cur)};
  const double w = std::sqrt(static_cast<double>(n));
  for (double& v : f.samples) v *= w;
  return f;
}

}  // namespace modgame
