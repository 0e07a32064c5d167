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

#include "exact_dynamics.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace tmgas {

namespace {

// Round-to-nearest via the 1.5 * 2^52 trick; exact for |x| < 2^51 under the
// default rounding mode and cheaper than nearbyint in the hot scan.
inline double round_nearest(double x) noexcept {
  constexpr double kMagic = 6755399441055744.0;
  return (x + kMagic) - kMagic;
}

}  // namespace

ExactEngine::ExactEngine(const GasParams& params, const SystemState& initial)
    : params_(params),
      L_(params.L),
      r0_(params.r0),
      r0sq_(params.r0 * params.r0),
      reach_(0.5 * params.L - params.r0),
      R0_(initial.R_unwrapped),
      now_(initial.t),
      t_anchor_(initial.t),
      P_(initial.P),
      V_(initial.P / params.M) {
  const std::size_t n = initial.atoms.size();
  for (auto* v : {&ox_, &oy_, &oz_, &vx_, &vy_, &vz_, &px_, &py_, &pz_}) v->resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = initial.atoms[i];
    const Vec3 v = a.p / params.m;
    // Place each atom in the TM's unwrapped frame; only relative positions matter.
    const Vec3 r = R0_ + min_image(a.r - initial.R_wrapped, L_);
    ox_[i] = r.x - v.x * initial.t;
    oy_[i] = r.y - v.y * initial.t;
    oz_[i] = r.z - v.z * initial.t;
    vx_[i] = v.x;
    vy_[i] = v.y;
    vz_[i] = v.z;
    px_[i] = a.p.x;
    py_[i] = a.p.y;
    pz_[i] = a.p.z;
  }
}

Vec3 ExactEngine::relative_position(std::size_t i, double t, const Vec3& C) const noexcept {
  const double inv_L = 1.0 / L_;
  double dx = (ox_[i] + vx_[i] * t) - C.x;
  double dy = (oy_[i] + vy_[i] * t) - C.y;
  double dz = (oz_[i] + vz_[i] * t) - C.z;
  dx -= L_ * round_nearest(dx * inv_L);
  dy -= L_ * round_nearest(dy * inv_L);
  dz -= L_ * round_nearest(dz * inv_L);
  return {dx, dy, dz};
}

ExactEngine::Candidate ExactEngine::scan() const {
  Candidate best;
  const Vec3 C = tm_position(now_);
  const double t = now_;
  const double inv_L = 1.0 / L_;
  const std::size_t n = px_.size();
  bool overlap = false;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = (ox_[i] + vx_[i] * t) - C.x;
    double dy = (oy_[i] + vy_[i] * t) - C.y;
    double dz = (oz_[i] + vz_[i] * t) - C.z;
    dx -= L_ * round_nearest(dx * inv_L);
    dy -= L_ * round_nearest(dy * inv_L);
    dz -= L_ * round_nearest(dz * inv_L);
    const Vec3 w{vx_[i] - V_.x, vy_[i] - V_.y, vz_[i] - V_.z};
    const double w2 = norm2(w);
    if (w2 > best.max_rel_speed_sq) best.max_rel_speed_sq = w2;
    const double s = contact_delay({dx, dy, dz}, w, r0sq_, overlap);
    if (overlap) {
      std::ostringstream msg;
      msg << "corrupted state at t = " << t << ": atom " << i << " at distance " << norm(Vec3{dx, dy, dz})
          << " < r0 = " << r0_;
      throw CorruptedState(msg.str());
    }
    if (s < best.delay && !(i == grazing_atom_ && t == grazing_time_)) {
      best.delay = s;
      best.atom = i;
    }
  }
  return best;
}

void ExactEngine::collide(std::size_t i, double t) {
  delta_anchor_ = displacement_at(t);
  t_anchor_ = t;
  now_ = t;
  const Vec3 C = R0_ + delta_anchor_;
  Vec3 d = relative_position(i, t, C);
  const double dist = norm(d);
  const Vec3 n_hat = d / dist;
  if (dist < r0_) d = r0_ * n_hat;  // within tolerance: snap to exact contact

  const Vec3 v{vx_[i], vy_[i], vz_[i]};
  if (!(dot(v - V_, n_hat) < 0.0)) {
    // Round-off turned a near-tangent approach into a miss.
    grazing_atom_ = i;
    grazing_time_ = t;
    return;
  }
  const Vec3 p{px_[i], py_[i], pz_[i]};
  const CollisionResult res = resolve_elastic_collision(P_, p, n_hat, params_.M, params_.m);

  CollisionEvent ev;
  if (observer_) {
    ev.time = t;
    ev.atom_id = static_cast<std::int64_t>(i);
    ev.kind = EventKind::real;
    ev.P_pre = P_;
    ev.p_pre = p;
    ev.P_post = res.P;
    ev.p_post = res.p;
  }

  P_ = res.P;
  V_ = P_ / params_.M;
  px_[i] = res.p.x;
  py_[i] = res.p.y;
  pz_[i] = res.p.z;
  const Vec3 v_new = res.p / params_.m;
  vx_[i] = v_new.x;
  vy_[i] = v_new.y;
  vz_[i] = v_new.z;
  const Vec3 r = C + d;
  ox_[i] = r.x - v_new.x * t;
  oy_[i] = r.y - v_new.y * t;
  oz_[i] = r.z - v_new.z * t;
  ++collisions_;
  if (observer_) observer_(ev);
}

void ExactEngine::emit(EventKind kind, double t) const {
  if (!observer_) return;
  CollisionEvent ev;
  ev.time = t;
  ev.kind = kind;
  observer_(ev);
}

void ExactEngine::advance_to(double t) {
  if (t < now_) throw InvalidArgument("advance_to: target time precedes current time");
  if (r0_ == 0.0 || px_.empty()) {
    now_ = t;
    return;
  }
  for (;;) {
    const Candidate c = scan();
    double window_end = t;
    if (c.max_rel_speed_sq > 0.0) window_end = std::min(t, now_ + reach_ / std::sqrt(c.max_rel_speed_sq));
    if (c.delay != kNoCollision && now_ + c.delay <= window_end) {
      collide(c.atom, now_ + c.delay);
      continue;
    }
    now_ = window_end;
    if (window_end >= t) break;
    emit(EventKind::horizon_expiry, now_);
  }
}

void ExactEngine::count_shells(std::span<const double> edges, std::vector<std::int64_t>& counts) const {
  counts.assign(edges.size() + 1, 0);
  const Vec3 C = tm_position(now_);
  const double min_dist = r0_ * (1.0 - kOverlapTol);
  for (std::size_t i = 0; i < px_.size(); ++i) {
    const double dist = norm(relative_position(i, now_, C));
    if (dist < min_dist) {
      std::ostringstream msg;
      msg << "overlap at sample time " << now_ << ": atom " << i << " at distance " << dist;
      throw CorruptedState(msg.str());
    }
    const auto bin = std::upper_bound(edges.begin(), edges.end(), dist) - edges.begin();
    ++counts[static_cast<std::size_t>(bin)];
  }
}

double ExactEngine::min_separation() const {
  const Vec3 C = tm_position(now_);
  double best = kInfiniteLength;
  for (std::size_t i = 0; i < px_.size(); ++i) best = std::min(best, norm(relative_position(i, now_, C)));
  return best;
}

void ExactEngine::reverse_momenta() {
  delta_anchor_ = displacement_at(now_);
  t_anchor_ = now_;
  P_ = -P_;
  V_ = -V_;
  for (std::size_t i = 0; i < px_.size(); ++i) {
    ox_[i] += 2.0 * vx_[i] * now_;
    oy_[i] += 2.0 * vy_[i] * now_;
    oz_[i] += 2.0 * vz_[i] * now_;
    vx_[i] = -vx_[i];
    vy_[i] = -vy_[i];
    vz_[i] = -vz_[i];
    px_[i] = -px_[i];
    py_[i] = -py_[i];
    pz_[i] = -pz_[i];
  }
  grazing_atom_ = static_cast<std::size_t>(-1);
}

SystemState ExactEngine::snapshot() const {
  SystemState s;
  s.t = now_;
  s.R_unwrapped = tm_position(now_);
  s.R_wrapped = wrap_position(s.R_unwrapped, L_);
  s.P = P_;
  s.N_init = static_cast<std::int64_t>(px_.size());
  s.atoms.resize(px_.size());
  for (std::size_t i = 0; i < px_.size(); ++i) {
    Atom& a = s.atoms[i];
    a.id = static_cast<std::int64_t>(i);
    a.r = wrap_position({ox_[i] + vx_[i] * now_, oy_[i] + vy_[i] * now_, oz_[i] + vz_[i] * now_}, L_);
    a.p = {px_[i], py_[i], pz_[i]};
  }
  return s;
}

TrajectoryRecord run_exact_from_state(const GasParams& params, const SystemState& initial,
                                      std::span<const double> sample_times, const TrajectoryOptions& options) {
  ExactEngine engine(params, initial);
  if (options.observer) engine.set_observer(options.observer);
  TrajectoryRecord rec;
  rec.N_init = initial.N_init;
  rec.displacements.reserve(sample_times.size());
  rec.P_samples.reserve(sample_times.size());
  rec.shell_counts.reserve(sample_times.size());
  std::vector<std::int64_t> counts;
  for (const double t : sample_times) {
    engine.advance_to(t);
    if (options.observer) {
      CollisionEvent ev;
      ev.time = t;
      ev.kind = EventKind::sample_point;
      options.observer(ev);
    }
    rec.displacements.push_back(engine.displacement());
    rec.P_samples.push_back(engine.tm_momentum());
    engine.count_shells(options.shell_edges, counts);
    rec.shell_counts.push_back(counts);
  }
  rec.collision_count = engine.collisions();
  return rec;
}

TrajectoryRecord run_exact_trajectory(const GasParams& params, Xoshiro256pp& rng,
                                      std::span<const double> sample_times, const TrajectoryOptions& options) {
  const SystemState initial = sample_initial_state(params, rng);
  return run_exact_from_state(params, initial, sample_times, options);
}

void write_event_log_header(std::ostream& out) {
  out << "time,atom_id,P_pre_x,P_pre_y,P_pre_z,p_pre_x,p_pre_y,p_pre_z,"
         "P_post_x,P_post_y,P_post_z,p_post_x,p_post_y,p_post_z\n";
}

EventObserver make_csv_event_log(std::ostream& out) {
  return [&out](const CollisionEvent& ev) {
    if (ev.kind != EventKind::real) return;
    char buf[512];
    const int len = std::snprintf(
        buf, sizeof buf, "%.17g,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
        ev.time, static_cast<long long>(ev.atom_id), ev.P_pre.x, ev.P_pre.y, ev.P_pre.z, ev.p_pre.x, ev.p_pre.y,
        ev.p_pre.z, ev.P_post.x, ev.P_post.y, ev.P_post.z, ev.p_post.x, ev.p_post.y, ev.p_post.z);
    out.write(buf, len);
  };
}

}  // namespace tmgas
