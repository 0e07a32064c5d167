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

#include <limits>
#include <optional>
#include <utility>

#include "common.hpp"

namespace tmgas {

/// Relative distance tolerance for contact: separations down to
/// r0 * (1 - kOverlapTol) count as touching.
inline constexpr double kOverlapTol = 1e-9;

inline constexpr double kNoCollision = std::numeric_limits<double>::infinity();

/// Time until the atom at relative displacement `d` (atom minus TM, already
/// minimum-imaged) with relative velocity `w` (atom minus TM) reaches
/// distance r0 while approaching. Returns kNoCollision for receding or
/// tangent pairs, 0 for an approaching pair already touching within
/// tolerance. Sets `overlap` when the pair overlaps beyond tolerance.
inline double contact_delay(const Vec3& d, const Vec3& w, double r0sq, bool& overlap) noexcept {
  const double b = dot(d, w);
  const double c = norm2(d) - r0sq;
  if (c < -2.0 * kOverlapTol * r0sq) {
    overlap = true;
    return kNoCollision;
  }
  if (b >= 0.0) return kNoCollision;
  if (c <= 0.0) return 0.0;
  const double a = norm2(w);
  const double disc = b * b - a * c;
  if (disc <= 0.0) return kNoCollision;
  // Stable form of the smaller root (-b - sqrt(disc)) / a.
  return c / (-b + std::sqrt(disc));
}

struct Kinematic {
  Vec3 position;
  Vec3 velocity;
};

/// Earliest approaching contact in (now, now + horizon]; std::nullopt when
/// none. Positions are wrapped into the periodic box of side `L` and the
/// separation is minimum-imaged at `now`. Throws CorruptedState when the
/// pair already overlaps beyond tolerance.
std::optional<double> predict_collision_time(const Kinematic& tm, const Kinematic& atom, double r0, double L,
                                             double now, double horizon);

struct CollisionResult {
  Vec3 P;
  Vec3 p;
};

/// Elastic hard-sphere exchange of the normal momentum component.
/// `n_hat` points from the TM center to the atom. Throws PreconditionError
/// for a non-approaching pair or a non-unit normal.
CollisionResult resolve_elastic_collision(const Vec3& P, const Vec3& p, const Vec3& n_hat, double M, double m);

}  // namespace tmgas
