// Copyright 2026 The tmgas Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "model.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "common.hpp"

namespace tmgas {

namespace {

const std::set<std::string>& param_keys() {
  static const std::set<std::string> keys{"M", "m", "T", "n", "r0", "L", "master_seed", "sample_times"};
  return keys;
}

}  // namespace

double mean_free_path(double n, double r0) {
  if (r0 == 0.0) return kInfiniteLength;
  return 1.0 / (std::numbers::pi * r0 * r0 * n);
}

ParamCheck check_params(const GasParams& p) {
  ParamCheck out;
  auto require = [&](bool cond, const char* what) {
    if (!cond) out.errors.emplace_back(std::string(what) + " violated");
  };
  // NaN fails every comparison, so it is reported by these as well.
  require(p.M > 0.0, "M > 0");
  require(p.m > 0.0, "m > 0");
  require(p.T > 0.0, "T > 0");
  require(p.n > 0.0, "n > 0");
  require(p.r0 >= 0.0, "r0 >= 0");
  require(p.L > 2.0 * p.r0, "L > 2*r0");
  for (std::size_t i = 0; i < p.sample_times.size(); ++i) {
    const double t = p.sample_times[i];
    if (!(t >= 0.0) || !std::isfinite(t)) {
      out.errors.push_back("sample_times[" + std::to_string(i) + "] >= 0 violated");
    }
    if (i > 0 && !(t > p.sample_times[i - 1])) {
      out.errors.push_back("sample_times strictly increasing violated at index " + std::to_string(i));
    }
  }
  if (out.ok() && p.r0 > 0.0) {
    const double lambda = mean_free_path(p.n, p.r0);
    if (p.L < 5.0 * lambda) {
      std::ostringstream msg;
      msg << "L = " << p.L << " < 5*lambda = " << 5.0 * lambda << " (finite-size risk)";
      out.warnings.push_back(msg.str());
    }
  }
  return out;
}

GasParams validate_params(const GasParams& params, std::vector<std::string>* warnings) {
  ParamCheck check = check_params(params);
  if (!check.ok()) {
    std::string msg = "invalid gas parameters: ";
    for (std::size_t i = 0; i < check.errors.size(); ++i) {
      if (i) msg += "; ";
      msg += check.errors[i];
    }
    throw InvalidArgument(msg);
  }
  if (warnings) {
    warnings->insert(warnings->end(), check.warnings.begin(), check.warnings.end());
  }
  return params;
}

DerivedScales derive_scales(const GasParams& p) {
  DerivedScales s;
  s.lambda = mean_free_path(p.n, p.r0);
  s.v_th_atom = std::sqrt(p.T / p.m);
  s.v_th_tm = std::sqrt(p.T / p.M);
  // Mean |V - v| for independent Maxwellians: sqrt(8 T / (pi mu)), mu the reduced mass.
  const double inv_mu = 1.0 / p.M + 1.0 / p.m;
  s.mean_rel_speed = std::sqrt(8.0 * p.T * inv_mu / std::numbers::pi);
  s.tau = p.r0 == 0.0 ? kInfiniteLength : s.lambda / s.mean_rel_speed;
  s.v_excl = 4.0 / 3.0 * std::numbers::pi * p.r0 * p.r0 * p.r0;
  s.V_eff = p.L * p.L * p.L - s.v_excl;
  return s;
}

void to_json(nlohmann::json& j, const GasParams& p) {
  j = nlohmann::json{{"M", p.M},   {"m", p.m},
                     {"T", p.T},   {"n", p.n},
                     {"r0", p.r0}, {"L", p.L},
                     {"master_seed", p.master_seed}, {"sample_times", p.sample_times}};
}

GasParams gas_params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("gas params: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!param_keys().contains(key)) throw ConfigError("gas params: unknown key '" + key + "'");
  }
  for (const auto& key : param_keys()) {
    if (!j.contains(key)) throw ConfigError("gas params: missing key '" + key + "'");
  }
  GasParams p;
  try {
    p.M = j.at("M").get<double>();
    p.m = j.at("m").get<double>();
    p.T = j.at("T").get<double>();
    p.n = j.at("n").get<double>();
    p.r0 = j.at("r0").get<double>();
    p.L = j.at("L").get<double>();
    const auto& seed = j.at("master_seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
      throw ConfigError("gas params: master_seed must be a non-negative integer");
    }
    p.master_seed = seed.get<std::uint64_t>();
    p.sample_times = j.at("sample_times").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("gas params: ") + e.what());
  }
  return p;
}

}  // namespace tmgas
