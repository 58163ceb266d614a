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

// modgame_cli: Monte Carlo driver for the distributed estimation protocols.
//
//   modgame_cli minimax  --budget 100 --m 100 --sigma 0.0625 --signal f2
//   modgame_cli adaptive --m 100 --sigma 0.0625 --signal f3 --trials 1000
//   modgame_cli rates    --protocol minimax --grid 100,400,1600 --m 64
//   modgame_cli codec-selftest
//   modgame_cli dwt-selftest
//
// Exit status: 0 success, 1 configuration error, 2 invariant violation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "modgame/harness.hpp"
#include "modgame/report_json.hpp"
#include "modgame/selftest.hpp"

namespace {

using namespace modgame;

struct Flags {
  std::optional<int> m;
  std::optional<double> sigma, budget, alpha, p, q, radius, lambda0, lambda1, lambda2;
  std::optional<int> levels, trials, threads;
  std::optional<Seed> seed;
  std::optional<std::string> signal, wavelet;
  std::string signal_file, out, json, config, protocol = "minimax";
  std::vector<double> grid;
  bool strict_lambda0 = false;
};

void add_experiment_flags(CLI::App* app, Flags& f) {
  app->add_option("--m", f.m, "number of local machines");
  app->add_option("--sigma", f.sigma, "noise level");
  app->add_option("--alpha", f.alpha, "Besov smoothness");
  app->add_option("--p", f.p, "Besov p (use inf for infinity)");
  app->add_option("--q", f.q, "Besov q (use inf for infinity)");
  app->add_option("--radius", f.radius, "Besov ball radius M");
  app->add_option("--lambda0", f.lambda0, "minimax tuning constant (floored at 4)");
  app->add_option("--lambda1", f.lambda1, "level-selection constant");
  app->add_option("--lambda2", f.lambda2, "final threshold constant");
  app->add_option("--levels", f.levels, "finest level J_total");
  app->add_option("--trials", f.trials, "Monte Carlo trials");
  app->add_option("--seed", f.seed, "root seed");
  app->add_option("--signal", f.signal, "random-ball|boundary|zero|f1|f2|f3|file");
  app->add_option("--signal-file", f.signal_file, "coefficient CSV for --signal file");
  app->add_option("--wavelet", f.wavelet, "haar|db4");
  app->add_option("--threads", f.threads, "worker threads (0 = all cores)");
  app->add_option("--out", f.out, "per-trial CSV path");
  app->add_option("--json", f.json, "JSON report path");
  app->add_option("--config", f.config, "JSON config file; flags override it");
  app->add_flag("--strict-lambda0", f.strict_lambda0,
                "use the guaranteed lambda0 bound (24 alpha + 64)^(alpha + 1/2)");
}

template <class T>
void set_if(const std::optional<T>& v, T& dst) {
  if (v) dst = *v;
}

ExperimentConfig build_config(const Flags& f, Protocol protocol) {
  ExperimentConfig c;
  if (!f.config.empty()) c = load_config(f.config, c);
  c.protocol = protocol;
  set_if(f.m, c.m);
  set_if(f.sigma, c.sigma);
  if (f.budget) c.budget = *f.budget;
  set_if(f.alpha, c.besov.alpha);
  set_if(f.p, c.besov.p);
  set_if(f.q, c.besov.q);
  set_if(f.radius, c.besov.M);
  set_if(f.lambda1, c.lambda1);
  set_if(f.lambda2, c.lambda2);
  set_if(f.levels, c.j_total);
  set_if(f.trials, c.trials);
  set_if(f.seed, c.seed);
  set_if(f.threads, c.threads);
  if (f.signal) c.signal = signal_from_string(*f.signal);
  if (!f.signal_file.empty()) c.signal_file = f.signal_file;
  if (f.wavelet) {
    if (*f.wavelet == "haar") c.wavelet = WaveletFamily::kHaar;
    else if (*f.wavelet == "db4") c.wavelet = WaveletFamily::kDaubechies4;
    else throw ConfigError("unknown wavelet '" + *f.wavelet + "'");
  }

  const double bound = guaranteed_lambda0(c.besov.alpha);
  if (f.lambda0) c.lambda0 = *f.lambda0;
  if (f.strict_lambda0) {
    if (f.lambda0 && *f.lambda0 <= bound) {
      throw ConfigError("--lambda0 must exceed " + std::to_string(bound) +
                        " under --strict-lambda0");
    }
    if (!f.lambda0) c.lambda0 = std::nextafter(bound, kInf);
  } else {
    c.lambda0 = std::max(kDefaultLambda0, c.lambda0);
    if (protocol == Protocol::kMinimax && c.lambda0 <= bound) {
      std::cerr << "note: lambda0 = " << c.lambda0 << " is below the guaranteed bound "
                << bound << "\n";
    }
  }
  if (protocol == Protocol::kMinimax && !c.budget) {
    throw ConfigError("--budget is required for the minimax protocol");
  }
  return c;
}

void write_outputs(const Flags& f, const RiskReport& r) {
  if (!f.out.empty()) {
    std::ofstream os(f.out);
    if (!os) throw ConfigError("cannot write " + f.out);
    write_trials_csv(os, r);
  }
  if (!f.json.empty()) {
    std::ofstream os(f.json);
    if (!os) throw ConfigError("cannot write " + f.json);
    os << to_json(r).dump(2) << '\n';
  }
  std::printf("protocol=%s signal=%s m=%d sigma=%g trials=%d seed=%llu\n",
              std::string(to_string(r.config.protocol)).c_str(),
              std::string(to_string(r.config.signal)).c_str(), r.config.m, r.config.sigma,
              r.config.trials, static_cast<unsigned long long>(r.config.seed));
  std::printf("mse  %.6g +- %.3g\n", r.mse_mean, r.mse_stderr);
  std::printf("bits %.6g +- %.3g (max %zu)\n", r.bits_mean, r.bits_stderr, r.bits_max);
  std::printf("wall %.3fs\n", r.wall_time);
}

int run_codec_selftest() {
  const CodecSelftest r = codec_selftest();
  auto line = [](const char* name, const SelftestCounts& c) {
    std::printf("%-13s %zu passed, %zu failed\n", name, c.passed, c.failed);
    return c.failed == 0;
  };
  bool ok = line("golden", r.golden);
  ok &= line("round-trip", r.round_trip);
  ok &= line("prefix-free", r.prefix_free);
  ok &= line("length-bound", r.length_bound);
  return ok ? 0 : 2;
}

int run_dwt_selftest() {
  const DwtSelftest r = dwt_selftest();
  std::printf("parseval      %zu passed, %zu failed (worst rel %.3g)\n", r.parseval.passed,
              r.parseval.failed, r.worst_parseval);
  std::printf("round-trip    %zu passed, %zu failed (worst abs %.3g)\n", r.round_trip.passed,
              r.round_trip.failed, r.worst_round_trip);
  return r.parseval.failed + r.round_trip.failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed nonparametric estimation under communication constraints"};
  app.require_subcommand(1);
  Flags f;

  auto* minimax = app.add_subcommand("minimax", "fixed-budget minimax protocol");
  add_experiment_flags(minimax, f);
  minimax->add_option("--budget", f.budget, "expected total bit budget B");

  auto* adaptive = app.add_subcommand("adaptive", "adaptive thresholding protocol");
  add_experiment_flags(adaptive, f);

  auto* rates = app.add_subcommand("rates", "empirical vs theoretical rate table");
  add_experiment_flags(rates, f);
  rates->add_option("--protocol", f.protocol, "minimax|adaptive");
  rates->add_option("--grid", f.grid, "budgets (minimax) or machine counts (adaptive)")
      ->delimiter(',')
      ->required();

  auto* codec = app.add_subcommand("codec-selftest", "prefix code self test");
  auto* dwt = app.add_subcommand("dwt-selftest", "wavelet transform self test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (codec->parsed()) return run_codec_selftest();
    if (dwt->parsed()) return run_dwt_selftest();
    if (minimax->parsed() || adaptive->parsed()) {
      const auto cfg = build_config(f, minimax->parsed() ? Protocol::kMinimax
                                                        : Protocol::kAdaptive);
      write_outputs(f, run_experiment(cfg));
      return 0;
    }
    if (rates->parsed()) {
      Protocol proto;
      if (f.protocol == "minimax") proto = Protocol::kMinimax;
      else if (f.protocol == "adaptive") proto = Protocol::kAdaptive;
      else throw ConfigError("unknown protocol '" + f.protocol + "'");
      Flags g = f;
      if (proto == Protocol::kMinimax && !g.budget) g.budget = f.grid.front();
      const auto cfg = build_config(g, proto);
      const auto rows = rate_curve(cfg, f.grid);
      std::ostringstream csv;
      write_rate_csv(csv, rows, proto);
      if (!f.out.empty()) {
        std::ofstream os(f.out);
        if (!os) throw ConfigError("cannot write " + f.out);
        os << csv.str();
      }
      if (!f.json.empty()) {
        std::ofstream os(f.json);
        if (!os) throw ConfigError("cannot write " + f.json);
        os << to_json(rows, cfg).dump(2) << '\n';
      }
      std::cout << csv.str();
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const EmptyTranscript& e) {
    std::cerr << "error: configuration too small for the protocol: " << e.what() << '\n';
    return 1;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
