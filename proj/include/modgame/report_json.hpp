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

// JSON form of experiment configs and reports (nlohmann/json; the vendor
// directory must be on the include path).

#include <fstream>
#include <string>

#include "json.hpp"
#include "modgame/harness.hpp"

namespace modgame {

using Json = nlohmann::json;

// Besov exponents may be infinite; JSON has no infinity, so they are
// written as the string "inf".
inline Json exponent_to_json(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

inline double exponent_from_json(const Json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    throw ConfigError("exponent must be a number or \"inf\"");
  }
  return j.get<double>();
}

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["protocol"] = std::string(to_string(c.protocol));
  j["m"] = c.m;
  j["sigma"] = c.sigma;
  j["budget"] = c.budget ? Json(*c.budget) : Json(nullptr);
  j["alpha"] = c.besov.alpha;
  j["p"] = exponent_to_json(c.besov.p);
  j["q"] = exponent_to_json(c.besov.q);
  j["radius"] = c.besov.M;
  j["lambda0"] = c.lambda0;
  j["lambda1"] = c.lambda1;
  j["lambda2"] = c.lambda2;
  j["levels"] = c.j_total;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["signal"] = std::string(to_string(c.signal));
  if (!c.signal_file.empty()) j["signal_file"] = c.signal_file;
  j["wavelet"] = std::string(to_string(c.wavelet));
  return j;
}

// Overlays the keys present in `j` onto `c`. Unknown keys are rejected.
inline void apply_json(const Json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "protocol") {
        const auto s = v.get<std::string>();
        if (s == "minimax") c.protocol = Protocol::kMinimax;
        else if (s == "adaptive") c.protocol = Protocol::kAdaptive;
        else throw ConfigError("unknown protocol '" + s + "'");
      } else if (key == "m") c.m = v.get<int>();
      else if (key == "sigma") c.sigma = v.get<double>();
      else if (key == "budget") {
        if (v.is_null()) c.budget.reset();
        else c.budget = v.get<double>();
      } else if (key == "alpha") c.besov.alpha = v.get<double>();
      else if (key == "p") c.besov.p = exponent_from_json(v);
      else if (key == "q") c.besov.q = exponent_from_json(v);
      else if (key == "radius") c.besov.M = v.get<double>();
      else if (key == "lambda0") c.lambda0 = v.get<double>();
      else if (key == "lambda1") c.lambda1 = v.get<double>();
      else if (key == "lambda2") c.lambda2 = v.get<double>();
      else if (key == "levels") c.j_total = v.get<int>();
      else if (key == "trials") c.trials = v.get<int>();
      else if (key == "seed") c.seed = v.get<Seed>();
      else if (key == "signal") c.signal = signal_from_string(v.get<std::string>());
      else if (key == "signal_file") c.signal_file = v.get<std::string>();
      else if (key == "wavelet") {
        const auto s = v.get<std::string>();
        if (s == "haar") c.wavelet = WaveletFamily::kHaar;
        else if (s == "db4") c.wavelet = WaveletFamily::kDaubechies4;
        else throw ConfigError("unknown wavelet '" + s + "'");
      } else if (key == "threads") c.threads = v.get<int>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  apply_json(j, base);
  return base;
}

inline Json to_json(const RiskReport& r) {
  Json j;
  j["config"] = to_json(r.config);
  j["summary"] = {{"mse_mean", r.mse_mean},   {"mse_stderr", r.mse_stderr},
                  {"bits_mean", r.bits_mean}, {"bits_stderr", r.bits_stderr},
                  {"bits_max", r.bits_max},   {"wall_time", r.wall_time}};
  Json rows = Json::array();
  for (const auto& t : r.per_trial) {
    rows.push_back({{"trial", t.trial},
                    {"mse", t.mse},
                    {"bits", t.bits},
                    {"jmax_or_levels", t.jmax_or_levels},
                    {"seed", t.seed}});
  }
  j["trials"] = std::move(rows);
  return j;
}

inline Json to_json(const std::vector<RatePoint>& rows, const ExperimentConfig& base) {
  Json j;
  j["config"] = to_json(base);
  Json arr = Json::array();
  for (const auto& r : rows) {
    arr.push_back({{"x", r.x},
                   {"empirical", r.empirical},
                   {"stderr", r.stderr_},
                   {"theory", r.theory},
                   {"bits_mean", r.bits_mean}});
  }
  j["rows"] = std::move(arr);
  return j;
}

}  // namespace modgame
