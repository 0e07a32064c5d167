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
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "estimators.hpp"

namespace tmgas {

struct EnsembleStats {
  std::int64_t collisions{0};
  std::int64_t aborted{0};
  double wall_seconds{0.0};
  double max_abs_displacement{0.0};  // largest |Delta_a| over records and sample times
  std::vector<std::string> warnings;
};

struct Ensemble {
  RecordSet set;
  EnsembleStats stats;
  std::uint64_t stream_key{0};
};

/// Largest fraction of trajectories allowed to abort on corrupted state.
inline constexpr double kMaxAbortedFraction = 1e-6;

/// Runs `n_trajectories` independent trajectories; trajectory i draws from
/// make_stream(params.master_seed, stream_key, first_index + i). Records are stored by
/// index, so the result is identical for any `threads` (0: hardware).
/// Aborted trajectories are dropped; more than kMaxAbortedFraction of them
/// is a runtime error.
Ensemble run_ensemble(const GasParams& params, Model model, std::int64_t n_trajectories,
                      const std::vector<double>& shell_edges, int threads, std::uint64_t stream_key = 0,
                      std::int64_t first_index = 0);

/// Worker count actually used for a requested `threads` value.
int resolve_threads(int threads);

void write_records_csv(const RecordSet& set, const std::string& path);
RecordSet read_records_csv(const std::string& path, const GasParams& params, Model model,
                           const std::vector<double>& shell_edges);

nlohmann::json make_manifest(const ExperimentConfig& config, const Ensemble& ensemble);

/// Writes records.csv and manifest.json into `dir` (created if needed).
void write_ensemble(const ExperimentConfig& config, const Ensemble& ensemble, const std::string& dir);

void write_json(const nlohmann::json& j, const std::string& path);

}  // namespace tmgas
