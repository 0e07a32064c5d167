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
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "init_sampler.hpp"
#include "mechanics.hpp"

namespace tmgas {

enum class EventKind { real, horizon_expiry, sample_point };

struct CollisionEvent {
  double time{0.0};
  std::int64_t atom_id{-1};  // -1 for non-collision events
  EventKind kind{EventKind::real};
  // Momenta before and after; only meaningful for real collisions.
  Vec3 P_pre, p_pre, P_post, p_post;
};

using EventObserver = std::function<void(const CollisionEvent&)>;

/// Per-trajectory observables. `shell_counts` is empty for models that carry
/// no atom positions.
struct TrajectoryRecord {
  std::int64_t N_init{0};
  std::vector<Vec3> displacements;  // one per sample time
  std::vector<Vec3> P_samples;      // one per sample time
  std::vector<std::vector<std::int64_t>> shell_counts;
  std::int64_t collision_count{0};

  bool has_shells() const noexcept { return !shell_counts.empty(); }
  bool operator==(const TrajectoryRecord&) const = default;
};

struct TrajectoryOptions {
  /// Radii of concentric shells around the TM. Counts cover [0, e0), [e0, e1),
  /// ..., [e_last, inf), so there is always one more count than edges.
  std::vector<double> shell_edges;
  EventObserver observer;
};

/// Event-driven evolution of the TM among non-interacting atoms.
///
/// Atoms are stored lazily as (virtual origin, velocity): an atom that has
/// not collided since time 0 is never touched except to predict its next
/// contact. Every event involves the TM, so each collision invalidates all
/// predictions and triggers a full rescan. Predictions use the minimum image
/// and are trusted only within a horizon short enough that no relative
/// motion can bring a different periodic image into contact.
class ExactEngine {
 public:
  ExactEngine(const GasParams& params, const SystemState& initial);

  void set_observer(EventObserver observer) { observer_ = std::move(observer); }

  /// Processes every collision up to and including time `t`.
  void advance_to(double t);

  double time() const noexcept { return now_; }
  Vec3 displacement() const noexcept { return displacement_at(now_); }
  Vec3 tm_momentum() const noexcept { return P_; }
  std::int64_t collisions() const noexcept { return collisions_; }
  std::size_t atom_count() const noexcept { return px_.size(); }

  /// Counts atoms per shell at the current time and checks that no atom
  /// overlaps the TM beyond tolerance (throws CorruptedState).
  void count_shells(std::span<const double> edges, std::vector<std::int64_t>& counts) const;

  /// Smallest minimum-image TM-atom distance at the current time.
  double min_separation() const;

  /// Reverses the TM and every atom momentum in place.
  void reverse_momenta();

  /// Materializes the full state at the current time.
  SystemState snapshot() const;

 private:
  struct Candidate {
    double delay{kNoCollision};
    std::size_t atom{0};
    double max_rel_speed_sq{0.0};
  };

  Vec3 displacement_at(double t) const noexcept { return delta_anchor_ + (t - t_anchor_) * V_; }
  Vec3 tm_position(double t) const noexcept { return R0_ + displacement_at(t); }
  Vec3 relative_position(std::size_t i, double t, const Vec3& C) const noexcept;

  Candidate scan() const;
  void collide(std::size_t i, double t);
  void emit(EventKind kind, double t) const;

  GasParams params_;
  double L_, r0_, r0sq_, reach_;
  Vec3 R0_;
  double now_{0.0};
  double t_anchor_{0.0};
  Vec3 delta_anchor_;
  Vec3 P_, V_;
  std::int64_t collisions_{0};
  std::size_t grazing_atom_{static_cast<std::size_t>(-1)};
  double grazing_time_{-1.0};
  EventObserver observer_;

  // Structure of arrays; origin = position extrapolated back to t = 0.
  std::vector<double> ox_, oy_, oz_;
  std::vector<double> vx_, vy_, vz_;
  std::vector<double> px_, py_, pz_;
};

TrajectoryRecord run_exact_from_state(const GasParams& params, const SystemState& initial,
                                      std::span<const double> sample_times, const TrajectoryOptions& options = {});

/// Samples the equilibrium initial state from `rng` and evolves it.
TrajectoryRecord run_exact_trajectory(const GasParams& params, Xoshiro256pp& rng,
                                      std::span<const double> sample_times, const TrajectoryOptions& options = {});

/// Observer writing real collisions as CSV rows
/// (time, atom_id, Px..pz before, Px..pz after) with round-trip precision.
EventObserver make_csv_event_log(std::ostream& out);
void write_event_log_header(std::ostream& out);

}  // namespace tmgas
