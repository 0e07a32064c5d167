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
#include <utility>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "ensemble.hpp"
#include "estimators.hpp"

namespace tmgas {

inline constexpr double kAgreementZ = 3.0;
inline constexpr double kRejectionZ = 5.0;
inline constexpr double kBgTolerance = 0.05;
inline constexpr double kMinEssFraction = 0.1;
inline constexpr double kAdditivityTolerance = 1e-12;

struct Comparison {
  std::string label;
  EstimateWithError lhs;
  EstimateWithError rhs;
  double z{0.0};
  bool passed{true};
  nlohmann::json extras = nlohmann::json::object();
};

/// Plot-ready series written as CSV with columns x, y, yerr.
struct Figure {
  std::string name;
  std::vector<double> x, y, yerr;
};

struct VerificationReport {
  std::string name;
  std::string gate;  // human-readable pass rule
  std::vector<Comparison> pairs;
  bool pass{false};
  std::string config_digest;
  std::uint64_t seed{0};
  std::vector<std::string> notes;
  std::vector<Figure> figures;
};

nlohmann::json to_json(const EstimateWithError& e);
nlohmann::json to_json(const VerificationReport& r);

/// Fixed-width table of the report for terminals.
std::string format_table(const VerificationReport& r);

/// Writes report.json and one CSV per figure into `dir`.
void write_report(const VerificationReport& r, const std::string& dir);

/// Stream key of the ensemble at density `n`; ensembles at equal density
/// share random numbers across experiments, different densities do not.
std::uint64_t density_stream_key(double n);

/// Copy of `set` restricted to its first `count` records.
RecordSet head(const RecordSet& set, std::size_t count);

/// Parameters with the density replaced.
GasParams at_density(const GasParams& p, double n);

// The run variants below simulate what they need and write one manifest per
// ensemble under <output_dir>/ensembles; the evaluate variants only read.

/// One ensemble per density of the config grid (sorted ascending).
std::vector<Ensemble> run_density_grid(const ExperimentConfig& config, Model model, bool with_shells);

// ------------------------------------------------------------ verify-lemma

/// Score derivative at the grid center against central differences over the
/// grid, per observable and sample time. Exact model: agreement gate plus
/// the delta-halving bias check when the grid has five points. BL model:
/// contrast gate (score within 3 SE of zero, difference of |Delta|^2 beyond
/// 5 SE of zero and of the score).
VerificationReport evaluate_lemma(const ExperimentConfig& config, const std::vector<const RecordSet*>& grid, int k);
VerificationReport verify_lemma(const ExperimentConfig& config, int k);

// ---------------------------------------------------------------- gen-func

/// Reweighted center ensemble against direct ensembles at (1+u) n.
/// `direct[j]` belongs to config.u_list[j].
VerificationReport evaluate_gen_func(const ExperimentConfig& config, const RecordSet& center,
                                     const std::vector<const RecordSet*>& direct);
VerificationReport gen_func_check(const ExperimentConfig& config);

// ------------------------------------------------------------- bg-collapse

/// Parameters of the Boltzmann-Grad partner: density times `scale`, radius
/// divided by sqrt(scale).
GasParams bg_partner(const GasParams& base, double scale);

/// Compares E|Delta|^2 and the Delta_x kurtosis. Throws ConfigError when
/// the mean free paths differ.
VerificationReport evaluate_bg_collapse(const ExperimentConfig& config, const RecordSet& base, const RecordSet& partner);
VerificationReport bg_collapse(const ExperimentConfig& config);

// -------------------------------------------------------- bl-polynomiality

/// Second derivative in n at the grid center from a weighted least-squares
/// quadratic fit. Zero errors on all points fall back to equal weights.
EstimateWithError quadratic_curvature(std::vector<std::pair<double, EstimateWithError>> estimates);

/// `per_time[i]` holds (density, E|Delta|^2) at sample time i. Passes
/// (contradiction demonstrated) iff |z| >= 5 at the last sample time.
VerificationReport evaluate_bl_polynomiality(const ExperimentConfig& config,
                                             const std::vector<std::vector<std::pair<double, EstimateWithError>>>& per_time);
VerificationReport evaluate_bl_polynomiality(const ExperimentConfig& config, const std::vector<const RecordSet*>& grid);
VerificationReport bl_polynomiality(const ExperimentConfig& config);

// ----------------------------------------------------------------- profile

/// Shell profile per observable and sample time: additivity against the
/// order-1 integrated cumulant, and localization within 3 lambda against
/// config.min_localized_fraction when set.
VerificationReport evaluate_profile(const ExperimentConfig& config, const RecordSet& set);
VerificationReport profile(const ExperimentConfig& config);

// ---------------------------------------------------------------- simulate

/// Plain estimates of every observable at every sample time.
VerificationReport summarize_ensemble(const ExperimentConfig& config, const Ensemble& ensemble);

}  // namespace tmgas
