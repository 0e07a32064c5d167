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

#include "mechanics.hpp"

#include <sstream>

#include "init_sampler.hpp"

namespace tmgas {

std::optional<double> predict_collision_time(const Kinematic& tm, const Kinematic& atom, double r0, double L,
                                             double now, double horizon) {
  const Vec3 d = min_image(atom.position - tm.position, L);
  const Vec3 w = atom.velocity - tm.velocity;
  bool overlap = false;
  const double s = contact_delay(d, w, r0 * r0, overlap);
  if (overlap) {
    std::ostringstream msg;
    msg << "corrupted state: TM-atom separation " << norm(d) << " below r0 = " << r0 << " beyond tolerance";
    throw CorruptedState(msg.str());
  }
  if (s == kNoCollision || s > horizon) return std::nullopt;
  return now + s;
}

CollisionResult resolve_elastic_collision(const Vec3& P, const Vec3& p, const Vec3& n_hat, double M, double m) {
  if (std::abs(norm2(n_hat) - 1.0) > 1e-12) throw PreconditionError("contact normal is not a unit vector");
  const double w = dot(p / m - P / M, n_hat);
  if (!(w < 0.0)) throw PreconditionError("resolve_elastic_collision: pair is not approaching");
  const double mu = M * m / (M + m);
  const Vec3 J = (2.0 * mu * w) * n_hat;
  return {P + J, p - J};
}

}  // namespace tmgas
