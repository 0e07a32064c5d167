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
#include <vector>

#include "common.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace tmgas {

struct Atom {
  Vec3 r;  // wrapped into [0, L)^3
  Vec3 p;
  std::int64_t id{0};
};

struct SystemState {
  double t{0.0};
  Vec3 R_wrapped;
  Vec3 R_unwrapped;
  Vec3 P;
  std::vector<Atom> atoms;
  std::int64_t N_init{0};
};

/// Minimum-image displacement `a - b` in a periodic cube of side `L`.
inline Vec3 min_image(const Vec3& d, double L) noexcept {
  auto wrap = [L](double x) { return x - L * std::nearbyint(x / L); };
  return {wrap(d.x), wrap(d.y), wrap(d.z)};
}

inline double wrap_coordinate(double x, double L) noexcept {
  double w = x - L * std::floor(x / L);
  return w >= L ? 0.0 : w;
}

inline Vec3 wrap_position(const Vec3& r, double L) noexcept {
  return {wrap_coordinate(r.x, L), wrap_coordinate(r.y, L), wrap_coordinate(r.z, L)};
}

/// Box center; the TM starts here.
inline Vec3 box_center(const GasParams& p) noexcept { return {0.5 * p.L, 0.5 * p.L, 0.5 * p.L}; }

/// Equilibrium grand-canonical initial condition: Maxwell TM at the box
/// center, Poisson(n V_eff) atoms uniform outside the exclusion sphere.
SystemState sample_initial_state(const GasParams& params, Xoshiro256pp& rng);

/// Draws the atom count only (shared with the BL baseline, which needs the
/// count but no atoms). Both models draw the TM momentum first and the count
/// second, so the TM momentum of trajectory i never depends on the density.
std::int64_t sample_atom_count(const GasParams& params, Xoshiro256pp& rng);

/// Maxwell momentum with per-component variance mass*T.
Vec3 sample_maxwell_momentum(double mass, double T, Xoshiro256pp& rng);

/// Serializes a state for debugging.
nlohmann::json state_to_json(const SystemState& state);

}  // namespace tmgas
