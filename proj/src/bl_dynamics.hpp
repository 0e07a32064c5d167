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
#include <span>

#include "exact_dynamics.hpp"

namespace tmgas {

/// Mean of |V - v| over Maxwell atom velocities v with per-component
/// variance T/m, for a TM moving with speed V.
double mean_relative_speed(double V, double m, double T);

/// Majorant constant: Lambda = n pi r0^2 (|V| + C sqrt(T/m)).
inline constexpr double kMajorantC = 4.0;

struct BLCounters {
  std::int64_t tentative{0};
  std::int64_t accepted{0};
  std::int64_t partner_proposals{0};
  std::int64_t partner_accepted{0};
};

struct BLOptions {
  /// Test hook: count accepted collisions but leave the TM momentum alone.
  bool disable_scattering{false};
  /// Test hook: replace the sampled initial TM momentum.
  std::optional<Vec3> initial_momentum;
  BLCounters* counters{nullptr};
};

/// Boltzmann-Lorentz baseline: the TM scatters off memoryless Maxwell atoms
/// at the hard-sphere flux rate. Simulated by thinning a constant majorant
/// rate between collisions. N_init is drawn for parity with the exact model
/// but never influences the path.
TrajectoryRecord run_bl_trajectory(const GasParams& params, Xoshiro256pp& rng, std::span<const double> sample_times,
                                   const BLOptions& options = {});

/// Draws an atom velocity from the density proportional to |V - v| times the
/// Maxwell density (the velocity of an actual collision partner).
Vec3 sample_flux_weighted_partner(const Vec3& V, double m, double T, Xoshiro256pp& rng,
                                  BLCounters* counters = nullptr);

}  // namespace tmgas
