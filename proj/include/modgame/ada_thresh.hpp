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

// Adaptive estimation by local thresholding. Every machine keeps the levels
// 0..floor(2 log2 m) plus any higher level whose energy passes
//   sum_k X_jk^2 >= n_j sigma^2 (1 + lambda1 / m),
// and sends role-dependent code words for the kept levels only. The center
// estimates the levels that are significant on most machines with the
// three-stage decoder, then drops low levels whose estimated energy is
// below lambda2 n_j sigma^2 / m.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "modgame/besov.hpp"
#include "modgame/bitcodec.hpp"
#include "modgame/errors.hpp"
#include "modgame/modgame_core.hpp"
#include "modgame/seq_modgame.hpp"
#include "modgame/simmodel.hpp"

namespace modgame {

// Set of resolution levels 0..63.
class LevelSet {
 public:
  LevelSet() = default;
  explicit LevelSet(std::uint64_t mask) : mask_(mask) {}

  static LevelSet range(int lo, int hi) {
    LevelSet s;
    for (int j = std::max(lo, 0); j <= hi && j < 64; ++j) s.insert(j);
    return s;
  }

  bool contains(int j) const { return j >= 0 && j < 64 && ((mask_ >> j) & 1u); }
  void insert(int j) { mask_ |= std::uint64_t{1} << j; }
  void erase(int j) { mask_ &= ~(std::uint64_t{1} << j); }
  int size() const { return std::popcount(mask_); }
  bool empty() const { return mask_ == 0; }
  std::uint64_t mask() const { return mask_; }

  // '1'/'0' per level 0..j_total.
  std::string to_string(int j_total) const {
    std::string s;
    for (int j = 0; j <= j_total; ++j) s.push_back(contains(j) ? '1' : '0');
    return s;
  }

  friend bool operator==(const LevelSet&, const LevelSet&) = default;

 private:
  std::uint64_t mask_ = 0;
};

struct AdaptiveConfig {
  int m = 100;
  double sigma = 1.0;
  double lambda1 = 12.0;
  double lambda2 = 30.0;
  Shape shape{10, false};

  // floor(2 log2 m): levels up to here are always kept.
  int base_level() const {
    return static_cast<int>(std::floor(2.0 * std::log2(static_cast<double>(m))));
  }
  std::int64_t finer_count() const { return floor_log2_sq(m); }
  std::int64_t window() const { return floor_log2(m); }
  // Width of the per-machine bitmap announcing levels above base_level().
  int bitmap_bits() const { return std::max(0, shape.j_total - base_level()); }

  Role role_of(int i) const {
    if (i < 1 || i > m) throw RoleMismatch("machine index outside [1, m]");
    if (i == 1) return Role::kCrude;
    if (i <= 1 + finer_count()) return Role::kFiner;
    return Role::kRefinement;
  }

  void validate() const {
    if (m < 1) throw ConfigError("machine count must be at least 1");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (!(lambda1 > 10.0)) throw ConfigError("lambda1 must exceed 10");
    if (!(lambda2 >= 0.0)) throw ConfigError("lambda2 must be nonnegative");
    if (shape.j_total < 0 || shape.j_total > 40) throw ConfigError("levels must lie in [0, 40]");
  }
};

struct AdaptiveTranscript {
  int machine_id = 0;
  Role role = Role::kSilent;
  LevelSet levels;  // J_i
  BitString stream;  // bitmap, then code words for j in J_i in (j, k) order

  std::size_t total_bits() const { return stream.size(); }
};

inline LevelSet significant_levels(const CoeffSeq& X, const AdaptiveConfig& cfg) {
  const int base = cfg.base_level();
  LevelSet J = LevelSet::range(0, std::min(base, X.j_total()));
  const double factor = cfg.sigma * cfg.sigma * (1.0 + cfg.lambda1 / cfg.m);
  for (int j = base + 1; j <= X.j_total(); ++j) {
    auto lv = X.level(j);
    double energy = 0.0;
    for (double v : lv) energy += v * v;
    if (energy >= static_cast<double>(lv.size()) * factor) J.insert(j);
  }
  return J;
}

inline AdaptiveTranscript encode_machine_adaptive(int i, const CoeffSeq& X,
                                                  const AdaptiveConfig& cfg) {
  if (X.shape() != cfg.shape) throw ShapeError("observation layout does not match config");
  AdaptiveTranscript t{i, cfg.role_of(i), significant_levels(X, cfg), {}};
  const int base = cfg.base_level();
  for (int j = base + 1; j <= cfg.shape.j_total; ++j) t.stream.push_back(t.levels.contains(j));
  const std::int64_t W = cfg.window();
  for (int j = 0; j <= cfg.shape.j_total; ++j) {
    if (!t.levels.contains(j)) continue;
    for (double v : X.level(j)) {
      const std::int64_t q = floor_index(v, cfg.sigma);
      switch (t.role) {
        case Role::kCrude: append_g(t.stream, q); break;
        case Role::kFiner: append_g(t.stream, floor_mod(q, W < 1 ? 1 : W)); break;
        case Role::kRefinement: append_fixed3(t.stream, floor_mod(q, 8)); break;
        case Role::kSilent: break;
      }
    }
  }
  return t;
}

// Levels significant on machine 1 and on at least half of the finer and of
// the refinement machines. J_sets[i] belongs to machine i + 1.
inline LevelSet aggregate_Jhat(const std::vector<LevelSet>& J_sets, int m) {
  if (static_cast<int>(J_sets.size()) != m) {
    throw DomainError("aggregate_Jhat needs one level set per machine");
  }
  const std::int64_t F = floor_log2_sq(m);
  const double finer_need = static_cast<double>(F) / 2.0;
  const double refine_need = static_cast<double>(m - 1 - F) / 2.0;
  LevelSet out;
  for (int j = 0; j < 64; ++j) {
    if (!J_sets[0].contains(j)) continue;
    int finer = 0, refine = 0;
    for (int i = 2; i <= m; ++i) {
      if (!J_sets[i - 1].contains(j)) continue;
      (i <= 1 + F ? finer : refine) += 1;
    }
    if (finer >= finer_need && refine >= refine_need) out.insert(j);
  }
  return out;
}

struct AdaptiveEstimate {
  CoeffSeq theta;
  LevelSet jhat;  // levels estimated
  LevelSet kept;  // levels with a (possibly) nonzero estimate
};

namespace detail {

struct ParsedAdaptive {
  LevelSet levels;
  std::vector<std::int64_t> values;       // words of kept levels, (j, k) order
  std::vector<std::ptrdiff_t> level_pos;  // start of level j in values, or -1
};

inline ParsedAdaptive parse_adaptive(const AdaptiveTranscript& t,
                                     const AdaptiveConfig& cfg) {
  ParsedAdaptive p;
  BitReader in(t.stream);
  const int base = cfg.base_level();
  p.levels = LevelSet::range(0, std::min(base, cfg.shape.j_total));
  for (int j = base + 1; j <= cfg.shape.j_total; ++j) {
    if (in.read_bit()) p.levels.insert(j);
  }
  p.level_pos.assign(static_cast<std::size_t>(cfg.shape.j_total) + 1, -1);
  for (int j = 0; j <= cfg.shape.j_total; ++j) {
    if (!p.levels.contains(j)) continue;
    p.level_pos[j] = static_cast<std::ptrdiff_t>(p.values.size());
    const std::size_t n = cfg.shape.level_size(j);
    for (std::size_t k = 0; k < n; ++k) {
      p.values.push_back(t.role == Role::kRefinement ? read_fixed3(in) : read_g(in));
    }
  }
  if (!in.exhausted()) throw MalformedCode("trailing bits after the last code word");
  return p;
}

}  // namespace detail

inline AdaptiveEstimate estimate_adaptive_detailed(
    const std::vector<AdaptiveTranscript>& transcripts, const AdaptiveConfig& cfg) {
  cfg.validate();
  const int m = cfg.m;
  std::vector<const AdaptiveTranscript*> by_id(static_cast<std::size_t>(m) + 1, nullptr);
  for (const auto& t : transcripts) {
    if (t.machine_id < 1 || t.machine_id > m) throw RoleMismatch("machine id outside [1, m]");
    if (by_id[t.machine_id] != nullptr) throw RoleMismatch("duplicate machine transcript");
    if (t.role != cfg.role_of(t.machine_id)) {
      throw RoleMismatch("machine " + std::to_string(t.machine_id) +
                         " sent a role the index does not assign");
    }
    by_id[t.machine_id] = &t;
  }
  std::vector<detail::ParsedAdaptive> parsed(static_cast<std::size_t>(m) + 1);
  std::vector<LevelSet> J_sets;
  J_sets.reserve(static_cast<std::size_t>(m));
  for (int i = 1; i <= m; ++i) {
    if (by_id[i] == nullptr) {
      throw RoleMismatch("missing transcript from machine " + std::to_string(i));
    }
    parsed[i] = detail::parse_adaptive(*by_id[i], cfg);
    J_sets.push_back(parsed[i].levels);
  }

  AdaptiveEstimate out{CoeffSeq(cfg.shape), aggregate_Jhat(J_sets, m), {}};
  const int base = cfg.base_level();
  const std::int64_t W = cfg.window();
  InverseTable inverse;
  std::vector<int> finer_ids, refine_ids;
  std::vector<std::int64_t> fin_col, ref_col;

  for (int j = 0; j <= cfg.shape.j_total; ++j) {
    if (!out.jhat.contains(j)) continue;
    finer_ids.clear();
    refine_ids.clear();
    for (int i = 2; i <= m; ++i) {
      if (!parsed[i].levels.contains(j)) continue;
      (cfg.role_of(i) == Role::kFiner ? finer_ids : refine_ids).push_back(i);
    }
    if (refine_ids.empty()) {
      throw EmptyTranscript("no refinement strings for level " + std::to_string(j));
    }
    if (W >= 2 && finer_ids.empty()) {
      throw EmptyTranscript("no finer-localization strings for level " + std::to_string(j));
    }
    fin_col.resize(finer_ids.size());
    ref_col.resize(refine_ids.size());
    auto lv = out.theta.level(j);
    double energy = 0.0;
    for (std::size_t k = 0; k < lv.size(); ++k) {
      const auto at = [&](int i) {
        return parsed[i].values[static_cast<std::size_t>(parsed[i].level_pos[j]) + k];
      };
      for (std::size_t r = 0; r < finer_ids.size(); ++r) fin_col[r] = at(finer_ids[r]);
      for (std::size_t r = 0; r < refine_ids.size(); ++r) ref_col[r] = at(refine_ids[r]);
      const DecodeState st = decode_state(at(1), fin_col, ref_col, W);
      const auto hits = static_cast<std::size_t>(std::lround(st.p_h * ref_col.size()));
      lv[k] = cfg.sigma *
              (static_cast<double>(st.x_b) + inverse.offset(hits, ref_col.size()));
      energy += lv[k] * lv[k];
    }
    if (j <= base &&
        energy < cfg.lambda2 * static_cast<double>(lv.size()) * cfg.sigma * cfg.sigma / m) {
      std::fill(lv.begin(), lv.end(), 0.0);
    } else {
      out.kept.insert(j);
    }
  }
  return out;
}

inline CoeffSeq estimate_adaptive(const std::vector<AdaptiveTranscript>& transcripts,
                                  const AdaptiveConfig& cfg) {
  return estimate_adaptive_detailed(transcripts, cfg).theta;
}

inline std::vector<AdaptiveTranscript> run_machines_adaptive(const AdaptiveConfig& cfg,
                                                             const CoeffSeq& theta,
                                                             Seed seed) {
  std::vector<AdaptiveTranscript> out;
  out.reserve(static_cast<std::size_t>(cfg.m));
  CoeffSeq X(theta.shape());
  for (int i = 1; i <= cfg.m; ++i) {
    observe_machine_into(theta, cfg.sigma, seed, i, X);
    out.push_back(encode_machine_adaptive(i, X, cfg));
  }
  return out;
}

inline std::size_t total_cost(const std::vector<AdaptiveTranscript>& transcripts) {
  std::size_t bits = 0;
  for (const auto& t : transcripts) bits += t.total_bits();
  return bits;
}

// Framed text format: "machine,role,jmax" header (jmax = top stored level),
// a "levels:" bitmap line, then one '0'/'1' line per code word.
inline void write_adaptive_transcripts(std::ostream& os,
                                       const std::vector<AdaptiveTranscript>& ts,
                                       const AdaptiveConfig& cfg) {
  for (const auto& t : ts) {
    os << t.machine_id << ',' << to_string(t.role) << ',' << cfg.shape.j_total << '\n';
    const int bm = cfg.bitmap_bits();
    std::string bitmap;
    for (int b = 0; b < bm; ++b) bitmap.push_back(t.stream[b] ? '1' : '0');
    os << "levels:" << bitmap << '\n';
    BitReader in(t.stream, static_cast<std::size_t>(bm));
    while (!in.exhausted()) {
      const std::size_t start = in.position();
      if (t.role == Role::kRefinement) {
        read_fixed3(in);
      } else {
        read_g(in);
      }
      for (std::size_t b = start; b < in.position(); ++b) os << (t.stream[b] ? '1' : '0');
      os << '\n';
    }
  }
}

inline std::vector<AdaptiveTranscript> read_adaptive_transcripts(
    std::istream& is, const AdaptiveConfig& cfg) {
  std::vector<AdaptiveTranscript> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("levels:", 0) == 0) {
      if (out.empty() || !out.back().stream.empty()) {
        throw MalformedCode("levels line out of place");
      }
      out.back().stream = BitString::from_string(line.substr(7));
      if (static_cast<int>(out.back().stream.size()) != cfg.bitmap_bits()) {
        throw MalformedCode("levels bitmap has the wrong width");
      }
      continue;
    }
    const auto c1 = line.find(',');
    if (c1 != std::string::npos) {
      const auto c2 = line.find(',', c1 + 1);
      if (c2 == std::string::npos) throw MalformedCode("bad transcript header: " + line);
      AdaptiveTranscript t;
      try {
        t.machine_id = std::stoi(line.substr(0, c1));
      } catch (const std::exception&) {
        throw MalformedCode("bad transcript header: " + line);
      }
      t.role = role_from_string(line.substr(c1 + 1, c2 - c1 - 1));
      out.push_back(std::move(t));
      continue;
    }
    if (out.empty()) throw MalformedCode("code word before any transcript header");
    out.back().stream.append(BitString::from_string(line));
  }
  for (auto& t : out) t.levels = detail::parse_adaptive(t, cfg).levels;
  return out;
}

}  // namespace modgame
