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

#include <cmath>
#include <sstream>

#include "modgame/ada_thresh.hpp"

namespace modgame {
namespace {

AdaptiveConfig config(int m, double sigma, int j_total) {
  AdaptiveConfig c;
  c.m = m;
  c.sigma = sigma;
  c.shape = {j_total, false};
  return c;
}

TEST(AdaptiveConfig, Derived) {
  const AdaptiveConfig c = config(100, 1.0, 16);
  EXPECT_EQ(c.base_level(), 13);
  EXPECT_EQ(c.finer_count(), 44);
  EXPECT_EQ(c.window(), 6);
  EXPECT_EQ(c.bitmap_bits(), 3);
  EXPECT_EQ(config(100, 1.0, 10).bitmap_bits(), 0);
  EXPECT_EQ(c.role_of(1), Role::kCrude);
  EXPECT_EQ(c.role_of(45), Role::kFiner);
  EXPECT_EQ(c.role_of(46), Role::kRefinement);
  AdaptiveConfig bad = c;
  bad.lambda1 = 10.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(LevelSet, Basics) {
  LevelSet s = LevelSet::range(0, 3);
  EXPECT_EQ(s.size(), 4);
  s.insert(7);
  s.erase(1);
  EXPECT_TRUE(s.contains(7));
  EXPECT_FALSE(s.contains(1));
  EXPECT_FALSE(s.contains(-1));
  EXPECT_EQ(s.to_string(8), "101100010");
}

TEST(SignificantLevels, AlwaysIncludedPrefix) {
  const AdaptiveConfig c = config(100, 1.0, 16);
  const LevelSet J = significant_levels(CoeffSeq(16), c);
  EXPECT_EQ(J, LevelSet::range(0, 13));
}

TEST(SignificantLevels, EnergyThreshold) {
  // m = 4: base level 4, so level 5 (n = 32) is tested against
  // 32 * sigma^2 * (1 + 12/4) = 128.
  AdaptiveConfig c = config(4, 1.0, 6);
  CoeffSeq X(6);
  for (double& v : X.level(5)) v = 2.0;  // energy 128
  EXPECT_TRUE(significant_levels(X, c).contains(5));
  X.level(5)[0] = 1.99;
  EXPECT_FALSE(significant_levels(X, c).contains(5));
}

TEST(SignificantLevels, ArithmeticAtHundredMachines) {
  // n_j = 4, sigma = 1, lambda1 = 12, m = 100: threshold 4 * 1.12 = 4.48.
  const double threshold = 4.0 * 1.0 * (1.0 + 12.0 / 100.0);
  EXPECT_NEAR(threshold, 4.48, 1e-15);
  EXPECT_GE(5.0, threshold);
  EXPECT_LT(4.4, threshold);
  // Same rule through the code path on level 14 (n = 16384): a per-entry
  // square of 5/4 or 4.4/4 reproduces the totals 5 and 4.4 per 4 entries.
  AdaptiveConfig c = config(100, 1.0, 14);
  CoeffSeq X(14);
  for (double& v : X.level(14)) v = std::sqrt(5.0 / 4.0);
  EXPECT_TRUE(significant_levels(X, c).contains(14));
  for (double& v : X.level(14)) v = std::sqrt(4.4 / 4.0);
  EXPECT_FALSE(significant_levels(X, c).contains(14));
}

TEST(Encode, CrudeWordAndRoles) {
  const AdaptiveConfig c = config(100, 0.5, 3);
  CoeffSeq X(3);
  X.at(0, 0) = 1.2 * 0.5;
  const AdaptiveTranscript t1 = encode_machine_adaptive(1, X, c);
  EXPECT_EQ(t1.stream.to_string().substr(0, 3), "101");
  const AdaptiveTranscript tr = encode_machine_adaptive(46, X, c);
  EXPECT_EQ(tr.role, Role::kRefinement);
  EXPECT_EQ(tr.total_bits(), 15u * 3u);
  EXPECT_THROW(encode_machine_adaptive(1, CoeffSeq(4), c), ShapeError);
}

TEST(Encode, ExcludedLevelHasNoWords) {
  // m = 32: base level 10, finer machines 2..26, refinement 27..32.
  AdaptiveConfig c = config(32, 1.0, 12);
  CoeffSeq X(12);
  for (double& v : X.level(12)) v = 3.0;  // level 12 significant, level 11 not
  const AdaptiveTranscript t = encode_machine_adaptive(30, X, c);
  ASSERT_EQ(t.role, Role::kRefinement);
  EXPECT_TRUE(t.levels.contains(12));
  EXPECT_FALSE(t.levels.contains(11));
  // bitmap (2) + levels 0..10 (2047 words) + level 12 (4096 words), 3 bits each.
  EXPECT_EQ(t.total_bits(), 2u + 3u * (2047u + 4096u));
  EXPECT_EQ(t.stream.to_string().substr(0, 2), "01");
}

TEST(AggregateJhat, Examples) {
  const int m = 100;
  std::vector<LevelSet> all(m, LevelSet::range(0, 13));
  for (auto& s : all) s.insert(17);
  EXPECT_TRUE(aggregate_Jhat(all, m).contains(17));

  std::vector<LevelSet> only_first(m, LevelSet::range(0, 13));
  only_first[0].insert(15);
  EXPECT_FALSE(aggregate_Jhat(only_first, m).contains(15));

  // 22 of machines 2..45 and 28 of machines 46..100.
  std::vector<LevelSet> counted(m, LevelSet::range(0, 13));
  counted[0].insert(16);
  for (int i = 2; i < 2 + 22; ++i) counted[i - 1].insert(16);
  for (int i = 46; i < 46 + 28; ++i) counted[i - 1].insert(16);
  EXPECT_TRUE(aggregate_Jhat(counted, m).contains(16));
  counted[46 - 1].erase(16);  // 27 < 27.5
  EXPECT_FALSE(aggregate_Jhat(counted, m).contains(16));
  counted[46 - 1].insert(16);
  counted[2 - 1].erase(16);  // 21 < 22
  EXPECT_FALSE(aggregate_Jhat(counted, m).contains(16));

  EXPECT_THROW(aggregate_Jhat(all, 99), DomainError);
}

TEST(EstimateAdaptive, SupportOffJhatIsZero) {
  AdaptiveConfig c = config(32, 0.25, 11);
  const CoeffSeq theta = random_member({1.0, 2, 2, 1.0}, c.shape, 5);
  for (Seed s = 0; s < 5; ++s) {
    const AdaptiveEstimate e = estimate_adaptive_detailed(run_machines_adaptive(c, theta, s), c);
    for (int j = 0; j <= 11; ++j) {
      if (e.kept.contains(j)) {
        ASSERT_TRUE(e.jhat.contains(j));
        continue;
      }
      for (double v : e.theta.level(j)) ASSERT_EQ(v, 0.0);
    }
  }
}

TEST(EstimateAdaptive, MatchesThreeStageOnFullMachineSet) {
  const int m = 100;
  AdaptiveConfig c = config(m, 0.1, 4);
  c.lambda2 = 0.0;
  const CoeffSeq theta = random_member({1.0, 2, 2, 1.0}, c.shape, 2);
  Plan p = plan(1e30, {1.0, 2, 2, 1.0}, 0.1, m, 4.0);
  ASSERT_EQ(p.kind, PlanCase::kThreeStage);
  ASSERT_DOUBLE_EQ(p.u, m);
  p.j_max = 4;
  for (Seed s = 0; s < 5; ++s) {
    const CoeffSeq a = estimate_adaptive(run_machines_adaptive(c, theta, s), c);
    const CoeffSeq b = estimate(p, run_machines(p, theta, s), c.shape);
    EXPECT_EQ(a, b);
  }
}

TEST(EstimateAdaptive, LargeCoordinateStatistical) {
  const int m = 100;
  const double sigma = 1.0;
  AdaptiveConfig c = config(m, sigma, 3);
  CoeffSeq theta(3);
  theta.at(0, 0) = 10.0 * sigma;
  double sum = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    sum += estimate_adaptive(run_machines_adaptive(c, theta, 1000 + r), c).at(0, 0);
  }
  EXPECT_NEAR(sum / reps, 10.0 * sigma, 3.0 * sigma / std::sqrt(m) * 5.0);
}

TEST(EstimateAdaptiveStatistical, NullSignalNoSpuriousLevels) {
  const int m = 100;
  AdaptiveConfig c = config(m, 1.0, 14);
  const CoeffSeq theta(c.shape);
  int clean = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const AdaptiveEstimate e =
        estimate_adaptive_detailed(run_machines_adaptive(c, theta, 7000 + t), c);
    bool ok = true;
    for (int j = c.base_level() + 1; j <= 14; ++j) {
      for (double v : e.theta.level(j)) ok = ok && v == 0.0;
    }
    clean += ok;
  }
  EXPECT_GE(clean, 99);
}

TEST(EstimateAdaptive, TooFewMachines) {
  AdaptiveConfig c = config(2, 1.0, 2);
  const CoeffSeq theta(2);
  EXPECT_THROW(estimate_adaptive(run_machines_adaptive(c, theta, 1), c), EmptyTranscript);
}

TEST(EstimateAdaptive, TranscriptChecks) {
  AdaptiveConfig c = config(32, 1.0, 3);
  const CoeffSeq theta(3);
  auto ts = run_machines_adaptive(c, theta, 1);
  auto missing = ts;
  missing.pop_back();
  EXPECT_THROW(estimate_adaptive(missing, c), RoleMismatch);
  auto wrong = ts;
  wrong[0].role = Role::kFiner;
  EXPECT_THROW(estimate_adaptive(wrong, c), RoleMismatch);
  auto extra = ts;
  extra[3].stream.push_back(false);
  EXPECT_THROW(estimate_adaptive(extra, c), MalformedCode);
}

TEST(AdaptiveTranscripts, TextRoundTrip) {
  AdaptiveConfig c = config(6, 0.5, 7);
  const CoeffSeq theta = random_member({1.0, 2, 2, 2.0}, c.shape, 4);
  const auto ts = run_machines_adaptive(c, theta, 3);
  std::stringstream ss;
  write_adaptive_transcripts(ss, ts, c);
  const auto back = read_adaptive_transcripts(ss, c);
  ASSERT_EQ(back.size(), ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    EXPECT_EQ(back[i].stream, ts[i].stream);
    EXPECT_EQ(back[i].levels, ts[i].levels);
    EXPECT_EQ(back[i].role, ts[i].role);
  }
  EXPECT_EQ(total_cost(ts), total_cost(back));
}

TEST(AdaptiveTranscripts, GoldenText) {
  AdaptiveConfig c = config(4, 1.0, 5);  // base level 4, one bitmap bit
  CoeffSeq X(5);
  X.at(0, 0) = 1.5;
  std::vector<AdaptiveTranscript> ts{encode_machine_adaptive(1, X, c)};
  std::stringstream ss;
  write_adaptive_transcripts(ss, ts, c);
  std::string expect = "1,crude,5\nlevels:0\n101\n";
  for (int i = 1; i < 31; ++i) expect += "0\n";
  EXPECT_EQ(ss.str(), expect);
}

}  // namespace
}  // namespace modgame
