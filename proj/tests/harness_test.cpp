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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "modgame/harness.hpp"
#include "modgame/report_json.hpp"

#ifndef MODGAME_CLI_PATH
#error "MODGAME_CLI_PATH must point at the modgame_cli binary"
#endif

namespace modgame {
namespace {

ExperimentConfig minimax_config() {
  ExperimentConfig c;
  c.protocol = Protocol::kMinimax;
  c.m = 64;
  c.sigma = 1.0 / 16;
  c.budget = 2000;
  c.j_total = 8;
  c.trials = 12;
  c.seed = 5;
  return c;
}

ExperimentConfig adaptive_config() {
  ExperimentConfig c;
  c.protocol = Protocol::kAdaptive;
  c.m = 32;
  c.sigma = 1.0 / 16;
  c.j_total = 6;
  c.trials = 6;
  c.seed = 6;
  return c;
}

void expect_same(const RiskReport& a, const RiskReport& b) {
  ASSERT_EQ(a.per_trial.size(), b.per_trial.size());
  for (std::size_t t = 0; t < a.per_trial.size(); ++t) {
    EXPECT_EQ(a.per_trial[t].mse, b.per_trial[t].mse);
    EXPECT_EQ(a.per_trial[t].bits, b.per_trial[t].bits);
    EXPECT_EQ(a.per_trial[t].jmax_or_levels, b.per_trial[t].jmax_or_levels);
    EXPECT_EQ(a.per_trial[t].seed, b.per_trial[t].seed);
  }
  EXPECT_EQ(a.mse_mean, b.mse_mean);
  EXPECT_EQ(a.bits_mean, b.bits_mean);
}

TEST(RunExperiment, DeterministicSingleTrial) {
  ExperimentConfig c = minimax_config();
  c.trials = 1;
  expect_same(run_experiment(c), run_experiment(c));
}

TEST(RunExperiment, DeterministicAcrossThreadCounts) {
  for (ExperimentConfig c : {minimax_config(), adaptive_config()}) {
    c.threads = 1;
    const RiskReport one = run_experiment(c);
    c.threads = 4;
    expect_same(one, run_experiment(c));
  }
}

TEST(RunExperiment, SummaryRecomputable) {
  const RiskReport r = run_experiment(minimax_config());
  double s = 0.0, ss = 0.0, b = 0.0;
  std::size_t bmax = 0;
  for (const auto& t : r.per_trial) {
    s += t.mse;
    b += static_cast<double>(t.bits);
    bmax = std::max(bmax, t.bits);
  }
  const double n = static_cast<double>(r.per_trial.size());
  const double mean = s / n;
  for (const auto& t : r.per_trial) ss += (t.mse - mean) * (t.mse - mean);
  EXPECT_NEAR(r.mse_mean, mean, 1e-12 * std::abs(mean));
  EXPECT_NEAR(r.mse_stderr, std::sqrt(ss / (n - 1) / n), 1e-12 * r.mse_stderr + 1e-300);
  EXPECT_NEAR(r.bits_mean, b / n, 1e-12 * b / n);
  EXPECT_EQ(r.bits_max, bmax);
}

TEST(RunExperiment, BitsEqualTranscriptCost) {
  const ExperimentConfig c = minimax_config();
  const RiskReport r = run_experiment(c);
  const CoeffSeq theta = build_signal(c);
  const Plan p = plan_for(c);
  for (const auto& t : r.per_trial) {
    EXPECT_EQ(t.bits, total_cost(run_machines(p, theta, t.seed)));
    EXPECT_EQ(t.seed, trial_seed(c.seed, t.trial));
    EXPECT_EQ(t.jmax_or_levels, std::to_string(p.j_max));
  }
}

TEST(RunExperiment, ConfigErrors) {
  ExperimentConfig c = minimax_config();
  c.budget.reset();
  EXPECT_THROW(run_experiment(c), ConfigError);
  c = minimax_config();
  c.trials = 0;
  EXPECT_THROW(run_experiment(c), ConfigError);
  c = adaptive_config();
  c.lambda1 = 5.0;
  EXPECT_THROW(run_experiment(c), ConfigError);
  c = minimax_config();
  c.besov.p = 0.5;
  EXPECT_THROW(run_experiment(c), ConfigError);
  c.signal = SignalKind::kFile;
  EXPECT_THROW(run_experiment(c), ConfigError);
}

// Noiseless limit in the quantization case: X = theta up to 1e-12, so the
// error is computed directly from floor(theta/delta) and the tail.
TEST(RunExperiment, NoiselessQuantizeOracle) {
  ExperimentConfig c = minimax_config();
  c.sigma = 1e-12;
  c.budget = 4;
  c.lambda0 = 1e-2;  // delta = 1.25e-3, so j_max = 6 < j_total
  c.trials = 3;
  const Plan p = plan_for(c);
  ASSERT_EQ(p.kind, PlanCase::kQuantize);
  ASSERT_GE(p.j_max, 0);
  ASSERT_LT(p.j_max, c.j_total);
  const CoeffSeq theta = build_signal(c);
  double oracle = 0.0;
  for (int j = 0; j <= theta.j_total(); ++j) {
    for (double v : theta.level(j)) {
      const double est = j <= p.j_max ? std::floor(v / p.delta) * p.delta : 0.0;
      oracle += (est - v) * (est - v);
    }
  }
  const RiskReport r = run_experiment(c);
  EXPECT_LE(r.mse_mean, 2.0 * oracle);
  EXPECT_GE(r.mse_mean, 0.5 * oracle);
}

// ThreeStage with sigma = 1e-12: the error is the tail above j_max plus an
// O(sigma^2) term per kept coordinate; 4 sigma^2 each is a loose ceiling.
TEST(RunExperiment, NoiselessThreeStageBound) {
  ExperimentConfig c = minimax_config();
  c.sigma = 1e-12;
  c.besov.M = 1e-9;
  c.budget = 1e30;
  c.trials = 3;
  const Plan p = plan_for(c);
  ASSERT_EQ(p.kind, PlanCase::kThreeStage);
  const CoeffSeq theta = build_signal(c);
  const std::size_t kept = theta.shape().prefix(p.j_max);
  double tail = 0.0;
  for (std::size_t i = kept; i < theta.size(); ++i) tail += theta.flat()[i] * theta.flat()[i];
  const RiskReport r = run_experiment(c);
  for (const auto& t : r.per_trial) {
    EXPECT_GE(t.mse, tail * (1 - 1e-9));
    EXPECT_LE(t.mse, tail + static_cast<double>(kept) * 4.0 * c.sigma * c.sigma);
  }
}

TEST(RunExperiment, AdaptiveLevelsColumn) {
  const RiskReport r = run_experiment(adaptive_config());
  for (const auto& t : r.per_trial) {
    EXPECT_EQ(t.jmax_or_levels.size(), 7u);
    EXPECT_EQ(t.jmax_or_levels.find_first_not_of("01"), std::string::npos);
  }
}

TEST(RateCurve, ConsistentWithDriver) {
  ExperimentConfig c = minimax_config();
  c.trials = 4;
  const std::vector<double> grid{50, 500, 5000};
  const auto rows = rate_curve(c, grid);
  ASSERT_EQ(rows.size(), 3u);
  c.budget = 5000;
  EXPECT_EQ(rows.back().empirical, run_experiment(c).mse_mean);
  for (const auto& row : rows) {
    EXPECT_EQ(row.theory, rate_minimax(row.x, c.besov, c.m, c.sigma));
  }
  EXPECT_THROW(rate_curve(c, {}), ConfigError);
}

TEST(RateCurve, AdaptiveTheoryColumn) {
  ExperimentConfig c = adaptive_config();
  c.trials = 2;
  const auto rows = rate_curve(c, {32, 40});
  for (const auto& row : rows) {
    EXPECT_EQ(row.theory, rate_adaptive_cost(c.besov, row.x, c.sigma));
    EXPECT_EQ(row.empirical, row.bits_mean);
  }
}

// Regression over the emitted table in [4 B_lo, B_hi / 4], where
// B_lo = (M/sigma)^{2/(2a+1)} and B_hi = B_lo m^{(2a+2)/(2a+1)}.
TEST(RateCurveStatistical, RefinementWindowSlope) {
  ExperimentConfig c = minimax_config();
  c.j_total = 10;
  c.trials = 100;
  const double a = c.besov.alpha;
  const double b_lo = std::pow(c.besov.M / c.sigma, 2 / (2 * a + 1));
  const double b_hi = b_lo * std::pow(c.m, (2 * a + 2) / (2 * a + 1));
  std::vector<double> grid;
  for (double B = 4 * b_lo; B <= b_hi / 4; B *= 2) grid.push_back(B);
  ASSERT_GE(grid.size(), 3u);
  const auto rows = rate_curve(c, grid);
  std::vector<double> x, y;
  for (const auto& r : rows) {
    x.push_back(r.x);
    y.push_back(r.empirical);
  }
  const double target = -a / (a + 1);
  EXPECT_NEAR(loglog_slope(x, y), target, 0.2 * std::abs(target));
}

// Sine-plus-cosine signal at m = 100: more budget, lower risk.
TEST(RunExperimentStatistical, MseDecreasesOverBudgetGrid) {
  ExperimentConfig c;
  c.protocol = Protocol::kMinimax;
  c.m = 100;
  c.sigma = 1.0 / 16;
  c.signal = SignalKind::kF2;
  c.trials = 200;
  c.seed = 41;
  double prev = kInf;
  for (double B : {100.0, 2400.0, 16000.0}) {
    c.budget = B;
    const RiskReport r = run_experiment(c);
    EXPECT_LT(r.mse_mean, prev) << "B = " << B;
    prev = r.mse_mean;
  }
}

TEST(LoglogSlope, PowerLaw) {
  std::vector<double> x, y;
  for (double v : {1.0, 2.0, 5.0, 10.0}) {
    x.push_back(v);
    y.push_back(3.0 * std::pow(v, -0.7));
  }
  EXPECT_NEAR(loglog_slope(x, y), -0.7, 1e-12);
  EXPECT_THROW(loglog_slope({1.0}, {1.0}), DomainError);
}

TEST(Reports, CsvHeaderAndRows) {
  const RiskReport r = run_experiment(minimax_config());
  std::stringstream ss;
  write_trials_csv(ss, r);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "trial,mse,bits,jmax_or_levels,seed");
  int rows = 0;
  while (std::getline(ss, line)) {
    std::stringstream cells(line);
    std::string cell;
    std::vector<std::string> v;
    while (std::getline(cells, cell, ',')) v.push_back(cell);
    ASSERT_EQ(v.size(), 5u);
    EXPECT_EQ(std::stod(v[1]), r.per_trial[rows].mse);
    ++rows;
  }
  EXPECT_EQ(rows, 12);
}

TEST(Reports, JsonConfigRoundTrip) {
  ExperimentConfig c = adaptive_config();
  c.besov.q = kInf;
  c.signal = SignalKind::kF2;
  c.wavelet = WaveletFamily::kDaubechies4;
  ExperimentConfig d;
  apply_json(to_json(c), d);
  EXPECT_EQ(to_json(d), to_json(c));
  EXPECT_THROW(apply_json(Json{{"bogus", 1}}, d), ConfigError);
  EXPECT_THROW(apply_json(Json{{"m", "many"}}, d), ConfigError);

  const RiskReport r = run_experiment(minimax_config());
  const Json j = to_json(r);
  EXPECT_EQ(j["trials"].size(), 12u);
  EXPECT_EQ(j["summary"]["mse_mean"].get<double>(), r.mse_mean);
  EXPECT_EQ(j["config"]["budget"].get<double>(), 2000.0);
}

TEST(Reports, LoadConfigFile) {
  const auto path = std::filesystem::temp_directory_path() / "modgame_cfg_test.json";
  {
    std::ofstream os(path);
    os << R"({"protocol": "adaptive", "m": 40, "sigma": 0.125, "q": "inf"})";
  }
  const ExperimentConfig c = load_config(path.string());
  EXPECT_EQ(c.protocol, Protocol::kAdaptive);
  EXPECT_EQ(c.m, 40);
  EXPECT_EQ(c.sigma, 0.125);
  EXPECT_TRUE(std::isinf(c.besov.q));
  std::filesystem::remove(path);
  EXPECT_THROW(load_config("/nonexistent/cfg.json"), ConfigError);
}

TEST(ParallelFor, PropagatesException) {
  EXPECT_THROW(parallel_for(20, 3, [](int i) {
                 if (i == 7) throw InvariantViolation("boom");
               }),
               InvariantViolation);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MODGAME_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("codec-selftest"), 0);
  EXPECT_EQ(run_cli("dwt-selftest"), 0);
  EXPECT_EQ(run_cli("minimax --m 10 --sigma 0.0625"), 1);
  EXPECT_EQ(run_cli("minimax --budget 100 --m 10 --signal nonsense"), 1);
  EXPECT_EQ(run_cli("adaptive --m 10 --lambda1 3"), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("minimax --budget 100 --m 10 --levels 5 --trials 3 --threads 1"), 0);
}

TEST(Cli, WritesCsvWithTrialRows) {
  const auto path = std::filesystem::temp_directory_path() / "modgame_cli_test.csv";
  ASSERT_EQ(run_cli("minimax --budget 100 --m 100 --sigma 0.0625 --trials 50 --seed 7 "
                    "--signal f2 --out " + path.string()),
            0);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "trial,mse,bits,jmax_or_levels,seed");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 50);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace modgame
