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

#include "init_sampler.hpp"

#include <random>

namespace tmgas {

std::int64_t sample_atom_count(const GasParams& params, Xoshiro256pp& rng) {
  const DerivedScales scales = derive_scales(params);
  std::poisson_distribution<std::int64_t> count(params.n * scales.V_eff);
  return count(rng);
}

Vec3 sample_maxwell_momentum(double mass, double T, Xoshiro256pp& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(mass * T));
  const double px = gauss(rng);
  const double py = gauss(rng);
  const double pz = gauss(rng);
  return {px, py, pz};
}

SystemState sample_initial_state(const GasParams& params, Xoshiro256pp& rng) {
  SystemState s;
  s.P = sample_maxwell_momentum(params.M, params.T, rng);
  s.N_init = sample_atom_count(params, rng);
  s.R_wrapped = box_center(params);
  s.R_unwrapped = s.R_wrapped;

  const double L = params.L;
  const double r0sq = params.r0 * params.r0;
  std::normal_distribution<double> gauss(0.0, std::sqrt(params.m * params.T));
  s.atoms.resize(static_cast<std::size_t>(s.N_init));
  for (std::int64_t i = 0; i < s.N_init; ++i) {
    Atom& a = s.atoms[static_cast<std::size_t>(i)];
    a.id = i;
    do {
      a.r = {L * rng.uniform(), L * rng.uniform(), L * rng.uniform()};
    } while (norm2(min_image(a.r - s.R_wrapped, L)) < r0sq);
    const double px = gauss(rng);
    const double py = gauss(rng);
    const double pz = gauss(rng);
    a.p = {px, py, pz};
  }
  return s;
}

nlohmann::json state_to_json(const SystemState& state) {
  auto vec = [](const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); };
  nlohmann::json atoms = nlohmann::json::array();
  for (const Atom& a : state.atoms) atoms.push_back({{"id", a.id}, {"r", vec(a.r)}, {"p", vec(a.p)}});
  return {{"t", state.t},
          {"R_wrapped", vec(state.R_wrapped)},
          {"R_unwrapped", vec(state.R_unwrapped)},
          {"P", vec(state.P)},
          {"N_init", state.N_init},
          {"atoms", std::move(atoms)}};
}

}  // namespace tmgas
