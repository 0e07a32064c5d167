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

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace tmgas {

/// Physical and box parameters of one simulated gas.
///
/// The TM is a hard sphere of radius `r0`; gas atoms are points that interact
/// with the TM only. `T` carries the Boltzmann constant.
struct GasParams {
  double M{5.0};
  double m{1.0};
  double T{1.0};
  double n{0.02};
  double r0{1.0};
  double L{60.0};
  std::uint64_t master_seed{1};
  std::vector<double> sample_times;

  bool operator==(const GasParams&) const = default;
};

struct DerivedScales {
  double lambda{0.0};     // mean free path, +inf when r0 == 0
  double v_th_atom{0.0};  // sqrt(T/m)
  double v_th_tm{0.0};    // sqrt(T/M)
  double mean_rel_speed{0.0};
  double tau{0.0};  // lambda / mean_rel_speed, +inf when r0 == 0
  double v_excl{0.0};
  double V_eff{0.0};
};

inline constexpr double kInfiniteLength = std::numeric_limits<double>::infinity();

struct ParamCheck {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const noexcept { return errors.empty(); }
};

/// Collects every violated invariant; never throws.
ParamCheck check_params(const GasParams& params);

/// Returns `params` unchanged when valid, otherwise throws InvalidArgument
/// listing every violation. Warnings (finite-size risk) go to `warnings`.
GasParams validate_params(const GasParams& params, std::vector<std::string>* warnings = nullptr);

DerivedScales derive_scales(const GasParams& params);

/// Mean free path for a given density and radius; +inf for r0 == 0.
double mean_free_path(double n, double r0);

void to_json(nlohmann::json& j, const GasParams& p);
/// Strict: every field required, unknown keys rejected (throws ConfigError).
GasParams gas_params_from_json(const nlohmann::json& j);

}  // namespace tmgas
