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

#include "bl_dynamics.hpp"

#include <algorithm>
#include <numbers>
#include <random>
#include <sstream>

namespace tmgas {

double mean_relative_speed(double V, double m, double T) {
  const double sigma = std::sqrt(T / m);
  const double x = V / sigma;
  constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2/pi)
  if (x < 1e-4) return sigma * kSqrt2OverPi * (2.0 + x * x / 3.0);
  return sigma * (kSqrt2OverPi * std::exp(-0.5 * x * x) + (x + 1.0 / x) * std::erf(x / std::numbers::sqrt2));
}

namespace {

Vec3 random_unit_vector(Xoshiro256pp& rng) {
  const double z = 2.0 * rng.uniform() - 1.0;
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {s * std::cos(phi), s * std::sin(phi), z};
}

// Any unit vector orthogonal to `u` (|u| = 1).
Vec3 orthogonal_unit(const Vec3& u) {
  const Vec3 a = std::abs(u.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
  const Vec3 c = cross(u, a);
  return c / norm(c);
}

}  // namespace

Vec3 sample_flux_weighted_partner(const Vec3& V, double m, double T, Xoshiro256pp& rng, BLCounters* counters) {
  // Envelope (|V| + |v|) f(v) >= |V - v| f(v) is a two-component mixture:
  // f(v) with weight |V|, and |v| f(v) (speed ~ chi_4) with weight <|v|>.
  const double sigma = std::sqrt(T / m);
  const double speed = norm(V);
  const double mean_atom_speed = sigma * std::sqrt(8.0 / std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    if (counters) ++counters->partner_proposals;
    Vec3 v;
    if (rng.uniform() * (speed + mean_atom_speed) < speed) {
      const double a = gauss(rng);
      const double b = gauss(rng);
      const double c = gauss(rng);
      v = sigma * Vec3{a, b, c};
    } else {
      double chi2 = 0.0;
      for (int k = 0; k < 4; ++k) {
        const double g = gauss(rng);
        chi2 += g * g;
      }
      v = (sigma * std::sqrt(chi2)) * random_unit_vector(rng);
    }
    const double accept = norm(V - v) / (speed + norm(v));
    if (rng.uniform() < accept) {
      if (counters) ++counters->partner_accepted;
      return v;
    }
  }
}

TrajectoryRecord run_bl_trajectory(const GasParams& params, Xoshiro256pp& rng, std::span<const double> sample_times,
                                   const BLOptions& options) {
  TrajectoryRecord rec;
  Vec3 P = sample_maxwell_momentum(params.M, params.T, rng);
  rec.N_init = sample_atom_count(params, rng);
  if (options.initial_momentum) P = *options.initial_momentum;
  Vec3 V = P / params.M;

  const double sigma = std::sqrt(params.T / params.m);
  const double cross_section_density = params.n * std::numbers::pi * params.r0 * params.r0;
  double now = 0.0;
  double t_anchor = 0.0;
  Vec3 delta_anchor;

  for (const double ts : sample_times) {
    while (cross_section_density > 0.0) {
      const double speed = norm(V);
      const double majorant = cross_section_density * (speed + kMajorantC * sigma);
      std::exponential_distribution<double> wait(majorant);
      const double dt = wait(rng);
      if (now + dt > ts) {
        now = ts;  // memoryless: the pending proposal can be dropped
        break;
      }
      now += dt;
      if (options.counters) ++options.counters->tentative;
      const double rate = cross_section_density * mean_relative_speed(speed, params.m, params.T);
      if (!(rate > 0.0 && rate <= majorant)) {
        std::ostringstream msg;
        msg << "majorant violation: nu = " << rate << " > Lambda = " << majorant << " at |V| = " << speed;
        throw Error(Error::Kind::runtime, msg.str());
      }
      if (rng.uniform() * majorant >= rate) continue;

      if (options.counters) ++options.counters->accepted;
      ++rec.collision_count;
      const Vec3 v = sample_flux_weighted_partner(V, params.m, params.T, rng, options.counters);
      if (options.disable_scattering) continue;

      const Vec3 w = v - V;
      const Vec3 w_hat = w / norm(w);
      const Vec3 e1 = orthogonal_unit(w_hat);
      const Vec3 e2 = cross(w_hat, e1);
      Vec3 n_hat;
      do {
        const double rho = params.r0 * std::sqrt(rng.uniform());
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        const Vec3 b = rho * (std::cos(phi) * e1 + std::sin(phi) * e2);
        n_hat = (b - std::sqrt(params.r0 * params.r0 - rho * rho) * w_hat) / params.r0;
        n_hat = n_hat / norm(n_hat);
      } while (!(dot(w, n_hat) < 0.0));

      delta_anchor = delta_anchor + (now - t_anchor) * V;
      t_anchor = now;
      P = resolve_elastic_collision(P, params.m * v, n_hat, params.M, params.m).P;
      V = P / params.M;
    }
    if (cross_section_density == 0.0) now = ts;
    rec.displacements.push_back(delta_anchor + (ts - t_anchor) * V);
    rec.P_samples.push_back(P);
  }
  return rec;
}

}  // namespace tmgas
