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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "exact_dynamics.hpp"
#include "model.hpp"

namespace tmgas {

enum class Model { exact, bl };

std::string to_string(Model m);
Model model_from_string(const std::string& s);

/// An ensemble of trajectories at one density, plus what the estimators
/// need to interpret it.
struct RecordSet {
  GasParams params;
  Model model{Model::exact};
  std::vector<double> shell_edges;
  std::vector<TrajectoryRecord> records;
};

/// Test function of the displacement vector.
struct Observable {
  enum class Tag { delta_sq, delta_4, cos_q, bin_indicator };

  Tag tag{Tag::delta_sq};
  double q{0.0};       // cos_q wave number
  Vec3 lo, hi;         // bin_indicator bounds, half-open [lo, hi)

  static Observable delta_sq() { return {}; }
  static Observable delta_4() { return {Tag::delta_4, 0.0, {}, {}}; }
  static Observable cos_q(double q) { return {Tag::cos_q, q, {}, {}}; }
  static Observable bin(const Vec3& lo, const Vec3& hi) { return {Tag::bin_indicator, 0.0, lo, hi}; }

  double operator()(const Vec3& d) const noexcept;
  std::string name() const;
};

enum class Method { plain, score, cumulant, finite_difference, reweighted };

struct EstimateWithError {
  double value{0.0};
  double std_error{0.0};
  std::int64_t n_samples{0};
  Method method{Method::plain};
  int k{0};  // derivative order for score/cumulant/finite_difference
  std::optional<double> ess;
  std::string observable;
  double t{0.0};

  /// "plain", "score_1", "cumulant_2", "finite_difference_1", "reweighted".
  std::string method_name() const;
};

/// Plain ensemble mean of g(Delta(t)) with batch-means error.
EstimateWithError plain_estimate(const RecordSet& set, const Observable& g, std::size_t t_index);

// ---------------------------------------------------------------- histogram

struct Axis {
  double lo{0.0};
  double hi{1.0};
  int bins{1};
};

struct Histogram {
  std::array<Axis, 3> grid;
  std::vector<double> mass;        // fraction of records per bin, x fastest
  std::vector<double> density;     // mass / bin volume
  std::vector<double> density_se;  // binomial standard error / bin volume
  double out_of_range_mass{0.0};
  std::int64_t n_samples{0};

  std::size_t index(int ix, int iy, int iz) const noexcept {
    return static_cast<std::size_t>((iz * grid[1].bins + iy) * grid[0].bins + ix);
  }
};

/// Displacement density on a 3-D grid. Throws PreconditionError when fewer
/// than 1000 records or when any displacement component reaches L/2.
Histogram estimate_v0_histogram(const RecordSet& set, std::size_t t_index, const std::array<Axis, 3>& grid);

// ------------------------------------------------------- density derivatives

/// Poisson score weight of order k (1 or 2) for atom count N at density n:
/// E[g W_k] = d^k E[g] / dn^k when N ~ Poisson(n V_eff).
double charlier_weight(int k, std::int64_t N, double n, double V_eff);

/// d^k/dn^k E[g(Delta)] as the ensemble mean of g * W_k(N_init).
EstimateWithError score_derivative(const RecordSet& set, const Observable& g, std::size_t t_index, int k);

/// Same quantity through factorial moments of N (integrated cumulant form).
EstimateWithError integrated_cumulant(const RecordSet& set, const Observable& g, std::size_t t_index, int k);

/// Linear combination sum c_i f(n_i) that estimates a derivative.
struct Stencil {
  std::vector<double> coefficients;  // aligned with the sorted density grid
};

/// Central-difference derivative over a uniform density grid. k = 1 uses the
/// two outermost points; k = 2 uses the outermost points and the midpoint.
/// Errors are propagated assuming independent ensembles.
EstimateWithError finite_difference_derivative(std::vector<std::pair<double, EstimateWithError>> estimates, int k);

/// Stencil used by finite_difference_derivative for a sorted uniform grid.
Stencil finite_difference_stencil(std::span<const double> densities, int k);

struct BiasCheck {
  double coarse{0.0};      // derivative from step delta
  double fine{0.0};        // derivative from step delta/2
  double bias{0.0};        // Richardson estimate of the coarse-step bias
  double bias_se{0.0};
  double coarse_se{0.0};
  bool passed{false};
};

/// Compares central differences at step delta (outer points) and delta/2
/// (inner points) of a 5-point uniform grid. Passes unless the estimated
/// truncation bias exceeds one standard error of the coarse derivative at
/// 3-sigma significance.
BiasCheck delta_halving_check(std::vector<std::pair<double, EstimateWithError>> estimates, int k);

// ---------------------------------------------------------------- reweighting

inline constexpr double kMaxTilt = 0.3;

/// Estimates E_{(1+u)n}[g] from records at density n with weights
/// (1+u)^N exp(-u n V_eff). Throws InvalidArgument unless -1 < u and |u| <= 0.3.
EstimateWithError reweight_to_density(const RecordSet& set, double u, const Observable& g, std::size_t t_index);

/// The tilt weight for a single count.
double tilt_weight(double u, std::int64_t N, double n, double V_eff);

// --------------------------------------------------------------- profiles

struct ProfileEstimate {
  std::vector<double> shell_edges;           // outer radius of each finite shell
  std::vector<EstimateWithError> per_shell;  // one more entry than edges (remainder last)
  EstimateWithError total;

  /// Share of sum |per-shell value| carried by shells whose outer radius is
  /// at most `radius` (the open remainder shell never counts).
  double fraction_within(double radius) const;
};

/// Volumes of the shell partition for `params`: finite shells minus the
/// exclusion sphere, remainder = V_eff minus the rest.
std::vector<double> shell_volumes(const GasParams& params, std::span<const double> edges);

/// Per-shell n^-1 (E[N_shell g] - n vol_shell E[g]); sums to the order-1
/// integrated cumulant over the partition.
ProfileEstimate correlation_profile(const RecordSet& set, const Observable& g, std::size_t t_index);

// ---------------------------------------------------------------- moments

struct DisplacementMoments {
  std::array<double, 3> mean{};
  std::array<double, 3> mean_se{};
  std::array<std::array<double, 3>, 3> cov{};
  std::array<std::array<double, 3>, 3> cov_se{};
  double excess_kurtosis_x{0.0};
  double excess_kurtosis_x_se{0.0};
  std::int64_t n_samples{0};
};

/// Mean, covariance and excess kurtosis of Delta_x with bootstrap errors.
DisplacementMoments displacement_moments(const RecordSet& set, std::size_t t_index, std::uint64_t bootstrap_seed = 0);

}  // namespace tmgas
