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
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "modgame/ada_thresh.hpp"
#include "modgame/besov.hpp"
#include "modgame/errors.hpp"
#include "modgame/rng.hpp"
#include "modgame/seq_modgame.hpp"
#include "modgame/simmodel.hpp"

namespace modgame {

enum class Protocol { kMinimax, kAdaptive };

// Test signal: a random Besov-ball member (interior or boundary), the null
// signal, one of the three test functions, or a coefficient CSV file.
enum class SignalKind { kRandomBall, kBoundary, kZero, kF1, kF2, kF3, kFile };

inline std::string_view to_string(Protocol p) {
  return p == Protocol::kMinimax ? "minimax" : "adaptive";
}

inline std::string_view to_string(SignalKind s) {
  switch (s) {
    case SignalKind::kRandomBall: return "random-ball";
    case SignalKind::kBoundary: return "boundary";
    case SignalKind::kZero: return "zero";
    case SignalKind::kF1: return "f1";
    case SignalKind::kF2: return "f2";
    case SignalKind::kF3: return "f3";
    case SignalKind::kFile: return "file";
  }
  return "random-ball";
}

inline SignalKind signal_from_string(std::string_view s) {
  if (s == "random-ball") return SignalKind::kRandomBall;
  if (s == "boundary") return SignalKind::kBoundary;
  if (s == "zero") return SignalKind::kZero;
  if (s == "f1") return SignalKind::kF1;
  if (s == "f2") return SignalKind::kF2;
  if (s == "f3") return SignalKind::kF3;
  if (s == "file") return SignalKind::kFile;
  throw ConfigError("unknown signal '" + std::string(s) + "'");
}

struct ExperimentConfig {
  Protocol protocol = Protocol::kMinimax;
  int m = 100;
  double sigma = 1.0 / 16.0;
  std::optional<double> budget;  // minimax only
  BesovParams besov{1.0, 2.0, 2.0, 1.0};
  double lambda0 = kDefaultLambda0;
  double lambda1 = 12.0;
  double lambda2 = 30.0;
  int j_total = 10;
  int trials = 100;
  Seed seed = 1;
  SignalKind signal = SignalKind::kRandomBall;
  std::string signal_file;
  WaveletFamily wavelet = WaveletFamily::kHaar;
  int threads = 0;  // 0 = hardware concurrency, capped by MODGAME_THREADS

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (m < 1) throw ConfigError("m must be at least 1");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (j_total < 0 || j_total > 24) throw ConfigError("levels must lie in [0, 24]");
    if (protocol == Protocol::kMinimax) {
      if (!budget) throw ConfigError("--budget is required for the minimax protocol");
      if (!(*budget >= 1.0)) throw ConfigError("--budget must be at least 1");
      if (!(lambda0 > 0.0)) throw ConfigError("lambda0 must be positive");
      if (!(besov.M > 0.0)) throw ConfigError("--radius must be positive for minimax");
    }
    if (protocol == Protocol::kAdaptive && !(lambda1 > 10.0)) {
      throw ConfigError("lambda1 must exceed 10");
    }
    if (signal == SignalKind::kFile && signal_file.empty()) {
      throw ConfigError("signal 'file' needs a coefficient CSV path");
    }
    try {
      besov.validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
};

struct TrialRecord {
  int trial = 0;
  double mse = 0.0;
  std::size_t bits = 0;
  std::string jmax_or_levels;
  Seed seed = 0;
};

struct RiskReport {
  double mse_mean = 0.0;
  double mse_stderr = 0.0;
  double bits_mean = 0.0;
  double bits_stderr = 0.0;
  std::size_t bits_max = 0;
  std::vector<TrialRecord> per_trial;
  ExperimentConfig config;
  double wall_time = 0.0;  // seconds
};

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample standard deviation over sqrt(n); zero for a single value.
inline double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

inline void summarize(RiskReport& r) {
  std::vector<double> mse, bits;
  r.bits_max = 0;
  for (const auto& t : r.per_trial) {
    mse.push_back(t.mse);
    bits.push_back(static_cast<double>(t.bits));
    r.bits_max = std::max(r.bits_max, t.bits);
  }
  r.mse_mean = mean_of(mse);
  r.mse_stderr = stderr_of(mse);
  r.bits_mean = mean_of(bits);
  r.bits_stderr = stderr_of(bits);
}

// Worker count: requested (or hardware) threads, capped by MODGAME_THREADS.
inline int worker_count(int requested) {
  int n = requested > 0 ? requested
                        : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("MODGAME_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

// Runs body(i) for i in [0, count) on `threads` workers. Results must be
// written to per-index slots; the first exception is rethrown.
inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline CoeffSeq build_signal(const ExperimentConfig& cfg) {
  const Seed sseed = derive_seed(cfg.seed, {stream_tag::kSignal});
  switch (cfg.signal) {
    case SignalKind::kRandomBall:
      return random_member(cfg.besov, Shape{cfg.j_total, false}, sseed);
    case SignalKind::kBoundary:
      return random_member(cfg.besov, Shape{cfg.j_total, false}, sseed, true);
    case SignalKind::kZero:
      return CoeffSeq(Shape{cfg.j_total, false});
    case SignalKind::kF1:
      return dwt_forward(sample_function(FunctionId::kF1, cfg.j_total), cfg.wavelet);
    case SignalKind::kF2:
      return dwt_forward(sample_function(FunctionId::kF2, cfg.j_total), cfg.wavelet);
    case SignalKind::kF3:
      return dwt_forward(sample_function(FunctionId::kF3, cfg.j_total), cfg.wavelet);
    case SignalKind::kFile: {
      std::ifstream in(cfg.signal_file);
      if (!in) throw ConfigError("cannot open signal file " + cfg.signal_file);
      try {
        return read_csv(in);
      } catch (const ShapeError& e) {
        throw ConfigError(e.what());
      }
    }
  }
  throw ConfigError("unknown signal");
}

inline Seed trial_seed(Seed root, int trial) {
  return derive_seed(root, {stream_tag::kTrial, static_cast<std::uint64_t>(trial)});
}

// One trial of the minimax protocol. Throws InvariantViolation if the
// estimate is nonzero above j_max or the reported cost disagrees with the
// transcripts.
inline TrialRecord minimax_trial(const Plan& p, const CoeffSeq& theta, int trial, Seed seed) {
  const auto transcripts = run_machines(p, theta, seed);
  const CoeffSeq est = estimate(p, transcripts, theta.shape());
  for (int j = std::max(p.j_max + 1, 0); j <= est.j_total(); ++j) {
    for (double v : est.level(j)) {
      if (v != 0.0) throw InvariantViolation("nonzero estimate above j_max");
    }
  }
  return {trial, squared_error(est, theta), total_cost(transcripts), std::to_string(p.j_max),
          seed};
}

inline TrialRecord adaptive_trial(const AdaptiveConfig& acfg, const CoeffSeq& theta,
                                  int trial, Seed seed) {
  const auto transcripts = run_machines_adaptive(acfg, theta, seed);
  const AdaptiveEstimate est = estimate_adaptive_detailed(transcripts, acfg);
  for (int j = 0; j <= est.theta.j_total(); ++j) {
    if (est.jhat.contains(j)) continue;
    for (double v : est.theta.level(j)) {
      if (v != 0.0) throw InvariantViolation("nonzero estimate on a level outside J-hat");
    }
  }
  return {trial, squared_error(est.theta, theta), total_cost(transcripts),
          est.jhat.to_string(acfg.shape.j_total), seed};
}

inline Plan plan_for(const ExperimentConfig& cfg) {
  return plan(*cfg.budget, cfg.besov, cfg.sigma, cfg.m, cfg.lambda0);
}

inline AdaptiveConfig adaptive_config_for(const ExperimentConfig& cfg, Shape shape) {
  AdaptiveConfig a;
  a.m = cfg.m;
  a.sigma = cfg.sigma;
  a.lambda1 = cfg.lambda1;
  a.lambda2 = cfg.lambda2;
  a.shape = shape;
  return a;
}

// Monte Carlo risk and cost. Trial t uses the substream (seed, t), so the
// report does not depend on the number of worker threads.
inline RiskReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const CoeffSeq theta = build_signal(cfg);
  RiskReport report;
  report.config = cfg;
  report.per_trial.resize(static_cast<std::size_t>(cfg.trials));

  std::function<TrialRecord(int, Seed)> run_one;
  std::optional<Plan> p;
  std::optional<AdaptiveConfig> acfg;
  try {
    if (cfg.protocol == Protocol::kMinimax) {
      p = plan_for(cfg);
    } else {
      acfg = adaptive_config_for(cfg, theta.shape());
      acfg->validate();
    }
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (p) {
    run_one = [&](int t, Seed s) { return minimax_trial(*p, theta, t, s); };
  } else {
    run_one = [&](int t, Seed s) { return adaptive_trial(*acfg, theta, t, s); };
  }
  parallel_for(cfg.trials, worker_count(cfg.threads), [&](int t) {
    report.per_trial[static_cast<std::size_t>(t)] = run_one(t, trial_seed(cfg.seed, t));
  });
  summarize(report);
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

// ---------------------------------------------------------------------------
// Rate curves.

struct RatePoint {
  double x = 0.0;          // budget B (minimax) or machine count m (adaptive)
  double empirical = 0.0;  // mean MSE (minimax) or mean bits (adaptive)
  double stderr_ = 0.0;
  double theory = 0.0;     // rate_minimax or rate_adaptive_cost
  double bits_mean = 0.0;
};

inline std::vector<RatePoint> rate_curve(const ExperimentConfig& base,
                                         const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("rate grid is empty");
  std::vector<RatePoint> rows;
  for (double x : grid) {
    ExperimentConfig cfg = base;
    RatePoint pt;
    pt.x = x;
    if (base.protocol == Protocol::kMinimax) {
      cfg.budget = x;
      const RiskReport r = run_experiment(cfg);
      pt.empirical = r.mse_mean;
      pt.stderr_ = r.mse_stderr;
      pt.bits_mean = r.bits_mean;
      pt.theory = rate_minimax(x, cfg.besov, cfg.m, cfg.sigma);
    } else {
      cfg.m = static_cast<int>(std::lround(x));
      const RiskReport r = run_experiment(cfg);
      pt.empirical = r.bits_mean;
      pt.stderr_ = r.bits_stderr;
      pt.bits_mean = r.bits_mean;
      pt.theory = rate_adaptive_cost(cfg.besov, cfg.m, cfg.sigma);
    }
    rows.push_back(pt);
  }
  return rows;
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("slope needs two or more points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

// ---------------------------------------------------------------------------
// CSV output.

inline constexpr std::string_view kCsvHeader = "trial,mse,bits,jmax_or_levels,seed";

inline void write_trials_csv(std::ostream& os, const RiskReport& r) {
  os << kCsvHeader << '\n';
  char buf[64];
  for (const auto& t : r.per_trial) {
    std::snprintf(buf, sizeof buf, "%.17g", t.mse);
    os << t.trial << ',' << buf << ',' << t.bits << ',' << t.jmax_or_levels << ','
       << t.seed << '\n';
  }
}

inline void write_rate_csv(std::ostream& os, const std::vector<RatePoint>& rows,
                           Protocol protocol) {
  os << (protocol == Protocol::kMinimax ? "budget,mse,mse_stderr,theory,bits_mean\n"
                                        : "m,bits,bits_stderr,theory,bits_mean\n");
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.x, r.empirical,
                  r.stderr_, r.theory, r.bits_mean);
    os << buf;
  }
}

}  // namespace modgame
