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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "estimators.hpp"
#include "model.hpp"

namespace tmgas {

/// Everything an experiment needs. `threads` and `output_dir` affect only
/// execution, never results, and are left out of the digest.
struct ExperimentConfig {
  GasParams params;
  Model model{Model::exact};
  std::int64_t n_trajectories{1};
  std::vector<double> density_grid;
  std::vector<Observable> observables;
  std::vector<double> shells;
  int threads{0};  // 0: available parallelism
  std::string output_dir{"out"};

  // Experiment-specific settings.
  int order{1};
  std::vector<double> u_list{-0.2, 0.2};
  double bg_scale{4.0};
  std::optional<double> min_localized_fraction;
};

/// Observables used when a config lists none: |Delta|^2 and cos(Delta_x/lambda).
std::vector<Observable> default_observables(const GasParams& params);

/// Strict parse; unknown keys anywhere are a ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

nlohmann::json observable_to_json(const Observable& g);
Observable observable_from_json(const nlohmann::json& j, const GasParams& params);

/// 64-bit FNV-1a of the canonical JSON of every result-affecting field,
/// rendered as 16 hex digits.
std::string config_digest(const ExperimentConfig& config);

/// Validates the config beyond JSON shape (params, grid uniformity, shells).
void validate_config(const ExperimentConfig& config, std::vector<std::string>* warnings = nullptr);

}  // namespace tmgas
