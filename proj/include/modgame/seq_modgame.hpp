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

// Minimax protocol for a known Besov class under an expected total budget
// of B bits. Below the budget threshold a single machine quantizes with step
// delta; above it, u machines split into crude, finer and refinement roles
// and the center decodes each coordinate with the three-stage decoder.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "modgame/besov.hpp"
#include "modgame/bitcodec.hpp"
#include "modgame/errors.hpp"
#include "modgame/modgame_core.hpp"
#include "modgame/rng.hpp"
#include "modgame/simmodel.hpp"

namespace modgame {

enum class Role { kCrude, kFiner, kRefinement, kSilent };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::kCrude: return "crude";
    case Role::kFiner: return "finer";
    case Role::kRefinement: return "refinement";
    case Role::kSilent: return "silent";
  }
  return "silent";
}

inline Role role_from_string(std::string_view s) {
  if (s == "crude") return Role::kCrude;
  if (s == "finer") return Role::kFiner;
  if (s == "refinement") return Role::kRefinement;
  if (s == "silent") return Role::kSilent;
  throw MalformedCode("unknown role '" + std::string(s) + "'");
}

// floor(log2(x)) and floor(log2(x)^2) for x >= 1.
inline std::int64_t floor_log2(double x) {
  return x < 1.0 ? 0 : static_cast<std::int64_t>(std::floor(std::log2(x)));
}
inline std::int64_t floor_log2_sq(double x) {
  if (x < 1.0) return 0;
  const double l = std::log2(x);
  return static_cast<std::int64_t>(std::floor(l * l));
}

// Lambda_0 lower bound under which the upper bound is guaranteed:
// (24 alpha + 64)^{alpha + 1/2}.
inline double guaranteed_lambda0(double alpha) {
  return std::pow(24.0 * alpha + 64.0, alpha + 0.5);
}

inline constexpr double kDefaultLambda0 = 4.0;

enum class PlanCase { kQuantize, kThreeStage };

struct Plan {
  PlanCase kind = PlanCase::kQuantize;
  double delta = 1.0;   // quantization step (signal units)
  double u = 1.0;       // number of active machines (real valued)
  int j_max = -1;       // highest transmitted level, -1 for none
  double sigma = 1.0;
  int m = 1;
  bool collapsed = false;  // ThreeStage budget with too few machines

  // Finer-localization machine count floor(log2(u)^2).
  std::int64_t finer_count() const {
    return kind == PlanCase::kThreeStage ? floor_log2_sq(u) : 0;
  }
  // Window W = floor(log2 u).
  std::int64_t window() const { return floor_log2(u); }
  // Highest machine index that transmits.
  int last_active() const {
    if (j_max < 0) return 0;
    return kind == PlanCase::kThreeStage ? static_cast<int>(std::floor(u)) : 1;
  }

  Role role_of(int i) const {
    if (i < 1 || i > m) throw RoleMismatch("machine index outside [1, m]");
    if (i > last_active()) return Role::kSilent;
    if (i == 1) return Role::kCrude;
    if (i <= 1 + finer_count()) return Role::kFiner;
    return Role::kRefinement;
  }
};

// max{ j >= 0 : M 2^{-j(alpha+1/2)} >= delta }, or -1.
inline int max_level(double M, double alpha, double delta) {
  int j = -1;
  while (j < 4096 && M * std::exp2(-(j + 1) * (alpha + 0.5)) >= delta) ++j;
  return j;
}

inline Plan plan(double B, const BesovParams& params, double sigma, int m,
                 double lambda0 = kDefaultLambda0) {
  if (!(B >= 1.0)) throw DomainError("budget B must be at least 1");
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  if (m < 1) throw DomainError("machine count must be at least 1");
  if (!(lambda0 > 0.0)) throw DomainError("lambda0 must be positive");
  if (!(params.M > 0.0) || !(params.alpha > 0.0)) {
    throw DomainError("plan needs M > 0 and alpha > 0");
  }
  const double a = params.alpha;
  const double scale = lambda0 * params.M / sigma;
  Plan p;
  p.sigma = sigma;
  p.m = m;
  if (B < std::pow(scale, 2.0 / (2.0 * a + 1.0))) {
    p.kind = PlanCase::kQuantize;
    p.delta = lambda0 * params.M * std::pow(B, -(a + 0.5));
    p.u = 1.0;
  } else {
    p.u = std::min(
        std::pow(scale, -1.0 / (a + 1.0)) *
            std::pow(B, (2.0 * a + 1.0) / (2.0 * a + 2.0)),
        static_cast<double>(m));
    p.kind = PlanCase::kThreeStage;
    p.delta = sigma / std::sqrt(p.u);
    // Three roles need 2 + floor(log2^2 u) machines.
    if (std::floor(p.u) < 2.0 + static_cast<double>(floor_log2_sq(p.u))) {
      p.kind = PlanCase::kQuantize;
      p.collapsed = true;
      p.delta = sigma;
      p.u = 1.0;
    }
  }
  p.j_max = max_level(params.M, a, p.delta);
  return p;
}

// Transcript of one machine: its role and the concatenated code words for
// levels 0..j_max in (j, k) order.
struct Transcript {
  int machine_id = 0;
  Role role = Role::kSilent;
  int j_max = -1;
  BitString stream;

  std::size_t total_bits() const { return stream.size(); }
};

inline Transcript encode_machine(const Plan& plan, int i, const CoeffSeq& X) {
  Transcript t{i, plan.role_of(i), plan.j_max, {}};
  if (t.role == Role::kSilent) return t;
  const std::size_t n = X.shape().prefix(plan.j_max);
  auto x = X.flat().first(n);
  switch (t.role) {
    case Role::kCrude: {
      // Quantize sends floor(X/delta); ThreeStage localizes at scale sigma.
      const double step = plan.kind == PlanCase::kQuantize ? plan.delta : plan.sigma;
      for (double v : x) append_g(t.stream, floor_index(v, step));
      break;
    }
    case Role::kFiner: {
      const std::int64_t W = plan.window();
      for (double v : x) append_g(t.stream, floor_mod(floor_index(v, plan.sigma), W));
      break;
    }
    case Role::kRefinement:
      for (double v : x) append_fixed3(t.stream, floor_mod(floor_index(v, plan.sigma), 8));
      break;
    case Role::kSilent:
      break;
  }
  return t;
}

// Decodes exactly `count` words of the role's code from the stream.
inline std::vector<std::int64_t> decode_words(const BitString& stream, Role role,
                                              std::size_t count) {
  std::vector<std::int64_t> out;
  out.reserve(count);
  BitReader in(stream);
  for (std::size_t c = 0; c < count; ++c) {
    out.push_back(role == Role::kRefinement ? read_fixed3(in) : read_g(in));
  }
  if (!in.exhausted()) throw MalformedCode("trailing bits after the last code word");
  return out;
}

// The transcript's individual code words in (j, k) order.
inline std::vector<BitString> split_words(const BitString& stream, Role role) {
  std::vector<BitString> words;
  BitReader in(stream);
  while (!in.exhausted()) {
    const std::size_t start = in.position();
    if (role == Role::kRefinement) {
      read_fixed3(in);
    } else {
      read_g(in);
    }
    BitString w;
    for (std::size_t b = start; b < in.position(); ++b) w.push_back(stream[b]);
    words.push_back(std::move(w));
  }
  return words;
}

inline std::size_t total_cost(const std::vector<Transcript>& transcripts) {
  std::size_t bits = 0;
  for (const auto& t : transcripts) bits += t.total_bits();
  return bits;
}

namespace detail {

// Orders transcripts by machine and checks them against the plan.
inline std::vector<const Transcript*> index_transcripts(
    const Plan& plan, const std::vector<Transcript>& transcripts) {
  std::vector<const Transcript*> by_id(static_cast<std::size_t>(plan.m) + 1, nullptr);
  for (const auto& t : transcripts) {
    if (t.machine_id < 1 || t.machine_id > plan.m) {
      throw RoleMismatch("transcript machine id outside [1, m]");
    }
    if (by_id[t.machine_id] != nullptr) throw RoleMismatch("duplicate machine transcript");
    if (t.role != plan.role_of(t.machine_id)) {
      throw RoleMismatch("machine " + std::to_string(t.machine_id) + " sent role " +
                         std::string(to_string(t.role)) + ", plan assigns " +
                         std::string(to_string(plan.role_of(t.machine_id))));
    }
    by_id[t.machine_id] = &t;
  }
  for (int i = 1; i <= plan.last_active(); ++i) {
    if (by_id[i] == nullptr) {
      throw RoleMismatch("missing transcript from active machine " + std::to_string(i));
    }
  }
  return by_id;
}

}  // namespace detail

// Central estimate. Levels above j_max are zero.
inline CoeffSeq estimate(const Plan& plan, const std::vector<Transcript>& transcripts,
                         Shape shape) {
  CoeffSeq est(shape);
  const auto by_id = detail::index_transcripts(plan, transcripts);
  const std::size_t n = shape.prefix(plan.j_max);
  if (n == 0) return est;
  auto out = est.flat();

  const auto crude = decode_words(by_id[1]->stream, Role::kCrude, n);
  if (plan.kind == PlanCase::kQuantize) {
    for (std::size_t c = 0; c < n; ++c) out[c] = static_cast<double>(crude[c]) * plan.delta;
    return est;
  }

  const std::int64_t W = plan.window();
  std::vector<std::vector<std::int64_t>> finer, refine;
  for (int i = 2; i <= plan.last_active(); ++i) {
    const Role r = by_id[i]->role;
    (r == Role::kFiner ? finer : refine)
        .push_back(decode_words(by_id[i]->stream, r, n));
  }
  if (refine.empty()) throw EmptyTranscript("plan has no refinement machines");

  InverseTable inverse;
  std::vector<std::int64_t> fin_col(finer.size()), ref_col(refine.size());
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < finer.size(); ++r) fin_col[r] = finer[r][c];
    for (std::size_t r = 0; r < refine.size(); ++r) ref_col[r] = refine[r][c];
    const DecodeState st = decode_state(crude[c], fin_col, ref_col, W);
    const auto hits = static_cast<std::size_t>(std::lround(st.p_h * ref_col.size()));
    out[c] = plan.sigma *
             (static_cast<double>(st.x_b) + inverse.offset(hits, ref_col.size()));
  }
  return est;
}

// All transcripts of one protocol run. Silent machines are included with
// empty streams; only active machines draw observations.
inline std::vector<Transcript> run_machines(const Plan& plan, const CoeffSeq& theta,
                                            Seed seed) {
  std::vector<Transcript> out;
  out.reserve(static_cast<std::size_t>(plan.m));
  CoeffSeq X(theta.shape());
  for (int i = 1; i <= plan.m; ++i) {
    if (plan.role_of(i) == Role::kSilent) {
      out.push_back({i, Role::kSilent, plan.j_max, {}});
      continue;
    }
    observe_machine_into(theta, plan.sigma, seed, i, X);
    out.push_back(encode_machine(plan, i, X));
  }
  return out;
}

// Empirical frequency of total cost >= 2B over `trials` protocol runs.
inline double check_budget(const Plan& plan, double B, const CoeffSeq& theta,
                           int trials, Seed seed) {
  if (trials < 1) throw DomainError("trials must be at least 1");
  int exceed = 0;
  for (int t = 0; t < trials; ++t) {
    const Seed s = derive_seed(seed, {stream_tag::kTrial, static_cast<std::uint64_t>(t)});
    const auto tr = run_machines(plan, theta, s);
    if (static_cast<double>(total_cost(tr)) >= 2.0 * B) ++exceed;
  }
  return static_cast<double>(exceed) / trials;
}

// ---------------------------------------------------------------------------
// Framed text format: a header "machine,role,jmax" per machine followed by
// one line of '0'/'1' per code word.

inline void write_transcripts(std::ostream& os, const std::vector<Transcript>& ts) {
  for (const auto& t : ts) {
    os << t.machine_id << ',' << to_string(t.role) << ',' << t.j_max << '\n';
    for (const auto& w : split_words(t.stream, t.role)) os << w.to_string() << '\n';
  }
}

inline std::vector<Transcript> read_transcripts(std::istream& is) {
  std::vector<Transcript> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.find(',') != std::string::npos) {
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 + 1);
      if (c2 == std::string::npos) throw MalformedCode("bad transcript header: " + line);
      Transcript t;
      try {
        t.machine_id = std::stoi(line.substr(0, c1));
        t.j_max = std::stoi(line.substr(c2 + 1));
      } catch (const std::exception&) {
        throw MalformedCode("bad transcript header: " + line);
      }
      t.role = role_from_string(line.substr(c1 + 1, c2 - c1 - 1));
      out.push_back(std::move(t));
    } else {
      if (out.empty()) throw MalformedCode("code word before any transcript header");
      out.back().stream.append(BitString::from_string(line));
    }
  }
  return out;
}

}  // namespace modgame
