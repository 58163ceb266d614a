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
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "modgame/errors.hpp"
#include "modgame/rng.hpp"

namespace modgame {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Dyadic coefficient layout. Level j holds 2^j entries for j = 0..j_total.
// An augmented layout stores one extra entry at level 0 (the coarsest
// scaling coefficient of a wavelet transform), so level 0 has two entries.
struct Shape {
  int j_total = 0;
  bool augmented = false;

  std::size_t level_size(int j) const {
    return (j == 0 && augmented) ? 2 : std::size_t{1} << j;
  }
  std::size_t level_offset(int j) const {
    if (j == 0) return 0;
    return augmented ? std::size_t{1} << j : (std::size_t{1} << j) - 1;
  }
  std::size_t total() const { return level_offset(j_total + 1); }

  // Number of coefficients on levels 0..j (clamped to the stored range).
  std::size_t prefix(int j) const {
    if (j < 0) return 0;
    return level_offset(std::min(j, j_total) + 1);
  }

  friend bool operator==(const Shape&, const Shape&) = default;
};

// Coefficient array theta = (theta_jk); also used for observations and
// estimates. Entries above j_total are implicitly zero.
class CoeffSeq {
 public:
  CoeffSeq() = default;
  explicit CoeffSeq(Shape shape) : shape_(checked(shape)), data_(shape.total(), 0.0) {}
  explicit CoeffSeq(int j_total, bool augmented = false)
      : CoeffSeq(Shape{j_total, augmented}) {}

  const Shape& shape() const { return shape_; }
  int j_total() const { return shape_.j_total; }
  std::size_t size() const { return data_.size(); }

  std::span<double> level(int j) {
    return {data_.data() + shape_.level_offset(j), shape_.level_size(j)};
  }
  std::span<const double> level(int j) const {
    return {data_.data() + shape_.level_offset(j), shape_.level_size(j)};
  }

  double& at(int j, std::size_t k) { return level(j)[k]; }
  double at(int j, std::size_t k) const { return level(j)[k]; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  friend bool operator==(const CoeffSeq&, const CoeffSeq&) = default;

 private:
  static Shape checked(Shape shape) {
    if (shape.j_total < 0 || shape.j_total > 40) {
      throw ShapeError("j_total must lie in [0, 40]");
    }
    return shape;
  }

  Shape shape_;
  std::vector<double> data_;
};

// Squared l2 distance over all stored coefficients.
inline double squared_error(const CoeffSeq& a, const CoeffSeq& b) {
  if (a.shape() != b.shape()) throw ShapeError("coefficient layouts differ");
  double s = 0.0;
  auto fa = a.flat();
  auto fb = b.flat();
  for (std::size_t i = 0; i < fa.size(); ++i) {
    const double d = fa[i] - fb[i];
    s += d * d;
  }
  return s;
}

// Besov class parameters (alpha, p, q, M); p and q may be kInf.
struct BesovParams {
  double alpha = 1.0;
  double p = 2.0;
  double q = 2.0;
  double M = 1.0;

  double s() const { return alpha + 0.5 - (std::isinf(p) ? 0.0 : 1.0 / p); }

  void validate() const {
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    if (!(p >= 1.0)) throw DomainError("p must be at least 1");
    if (!(q > 0.0)) throw DomainError("q must be positive");
    if (!(M >= 0.0)) throw DomainError("radius M must be nonnegative");
    if (!(s() > 0.0)) throw DomainError("s = alpha + 1/2 - 1/p must be positive");
  }
};

// Besov sequence seminorm. p or q equal to infinity switch the matching
// sum to a supremum.
inline double seminorm(const CoeffSeq& theta, const BesovParams& params) {
  const double s = params.s();
  const bool p_inf = std::isinf(params.p);
  const bool q_inf = std::isinf(params.q);
  std::vector<double> terms(theta.j_total() + 1, 0.0);
  for (int j = 0; j <= theta.j_total(); ++j) {
    double inner = 0.0;
    auto lv = theta.level(j);
    if (p_inf) {
      for (double v : lv) inner = std::max(inner, std::abs(v));
    } else {
      // Scale by the level maximum so large p cannot overflow.
      double mx = 0.0;
      for (double v : lv) mx = std::max(mx, std::abs(v));
      if (mx > 0.0) {
        double acc = 0.0;
        for (double v : lv) acc += std::pow(std::abs(v) / mx, params.p);
        inner = mx * std::pow(acc, 1.0 / params.p);
      }
    }
    terms[j] = std::exp2(j * s) * inner;
  }
  double top = 0.0;
  for (double t : terms) top = std::max(top, t);
  if (q_inf || top == 0.0) return top;
  // Same scaling trick for the outer sum.
  double outer = 0.0;
  for (double t : terms) outer += std::pow(t / top, params.q);
  return top * std::pow(outer, 1.0 / params.q);
}

inline bool in_ball(const CoeffSeq& theta, const BesovParams& params) {
  return seminorm(theta, params) <= params.M;
}

// Draws a member of the Besov ball. Entries are Gaussian with level-j
// standard deviation 2^{-j(alpha+1/2)}, which spreads seminorm mass evenly
// across levels, then the draw is rescaled to radius r*M with r uniform on
// (0, 1]. With on_boundary the radius is M (up to one part in 10^12).
inline CoeffSeq random_member(const BesovParams& params, Shape shape, Seed seed,
                              bool on_boundary = false) {
  params.validate();
  CoeffSeq theta(shape);
  if (params.M == 0.0) return theta;
  Engine eng = make_engine(derive_seed(seed, {stream_tag::kSignal}));
  std::normal_distribution<double> normal;
  for (int j = 0; j <= shape.j_total; ++j) {
    const double sd = std::exp2(-j * (params.alpha + 0.5));
    for (double& v : theta.level(j)) v = sd * normal(eng);
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r = on_boundary ? 1.0 - 1e-12 : 1.0 - unif(eng);
  const double norm = seminorm(theta, params);
  const double scale = r * params.M / norm;
  for (double& v : theta.flat()) v *= scale;
  // Guard against rounding pushing the draw just outside the ball.
  while (seminorm(theta, params) > params.M) {
    for (double& v : theta.flat()) v *= 1.0 - 1e-12;
  }
  return theta;
}

// Three-regime minimax rate under an expected total budget of B bits,
// without the unspecified multiplicative constant.
inline double rate_minimax(double B, const BesovParams& params, double m,
                           double sigma) {
  if (!(B > 0.0) || !(m >= 1.0) || !(sigma > 0.0) || !(params.M > 0.0) ||
      !(params.alpha > 0.0)) {
    throw DomainError("rate_minimax needs B > 0, m >= 1, sigma > 0, M > 0");
  }
  const double a = params.alpha;
  const double ratio = params.M / sigma;
  const double b_low = std::pow(ratio, 2.0 / (2.0 * a + 1.0));
  const double b_high = b_low * std::pow(m, (2.0 * a + 2.0) / (2.0 * a + 1.0));
  const double M = params.M;
  if (B < b_low) return M * M * std::pow(B, -2.0 * a);
  if (B < b_high) {
    return std::pow(M, 2.0 / (a + 1.0)) *
           std::pow(sigma * sigma / B, a / (a + 1.0));
  }
  return std::pow(M, 2.0 / (2.0 * a + 1.0)) *
         std::pow(sigma * sigma / m, 2.0 * a / (2.0 * a + 1.0));
}

// Order of the minimal expected cost of a rate-optimal adaptive estimator:
// m^3 + (M/sigma)^{2/(2a+1)} m^{(2a+2)/(2a+1)}.
inline double rate_adaptive_cost(const BesovParams& params, double m,
                                 double sigma) {
  if (!(m >= 1.0) || !(sigma > 0.0) || !(params.M > 0.0) ||
      !(params.alpha > 0.0)) {
    throw DomainError("rate_adaptive_cost needs m >= 1, sigma > 0, M > 0");
  }
  const double a = params.alpha;
  return m * m * m + std::pow(params.M / sigma, 2.0 / (2.0 * a + 1.0)) *
                         std::pow(m, (2.0 * a + 2.0) / (2.0 * a + 1.0));
}

// CSV layout: one row per level, values in k order.
inline void write_csv(std::ostream& os, const CoeffSeq& theta) {
  char buf[32];
  for (int j = 0; j <= theta.j_total(); ++j) {
    bool first = true;
    for (double v : theta.level(j)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      if (!first) os << ',';
      os << buf;
      first = false;
    }
    os << '\n';
  }
}

inline CoeffSeq read_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ShapeError("coefficient CSV contains a non-numeric cell");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ShapeError("coefficient CSV is empty");
  const bool augmented = rows[0].size() == 2;
  CoeffSeq theta(static_cast<int>(rows.size()) - 1, augmented);
  for (int j = 0; j <= theta.j_total(); ++j) {
    auto lv = theta.level(j);
    if (rows[j].size() != lv.size()) {
      throw ShapeError("coefficient CSV row " + std::to_string(j) +
                       " has the wrong number of entries");
    }
    std::copy(rows[j].begin(), rows[j].end(), lv.begin());
  }
  return theta;
}

}  // namespace modgame
