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


// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. --scale shrinks every ensemble for smoke runs;
// such runs say so and are not acceptance results.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "bl_dynamics.hpp"
#include "config.hpp"
#include "ensemble.hpp"
#include "exact_dynamics.hpp"
#include "experiments.hpp"
#include "init_sampler.hpp"
#include "stats.hpp"

using namespace tmgas;
namespace fs = std::filesystem;

namespace {

constexpr double kKsMinP = 0.01;
constexpr double kKineticTolerance = 1e-12;
constexpr double kMomentumUlps = 4.0;
constexpr std::int64_t kMinCollisions = 1000000;
constexpr double kChunkSigmas = 3.0;

struct Options {
  std::string config_dir;
  double scale{1.0};
  int threads{0};
  std::vector<int> only;
  int pilot_chunks{0};
  std::string summary;
};

Options opts;

std::string fmt(double x, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const auto start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

ExperimentConfig load(const std::string& name) {
  ExperimentConfig c = load_config((fs::path(opts.config_dir) / name).string());
  c.threads = opts.threads;
  c.output_dir.clear();
  return c;
}

std::int64_t scaled(std::int64_t n) {
  if (opts.scale == 1.0) return n;
  return std::max<std::int64_t>(200, std::llround(static_cast<double>(n) * opts.scale));
}

bool wanted(int id) { return opts.only.empty() || std::count(opts.only.begin(), opts.only.end(), id) > 0; }

struct Outcome {
  bool pass{false};
  std::string detail;
  double budget{0.0};  // seconds; 0 means no runtime bound
  double seconds{0.0};
};

int failures = 0;

void report(int id, const std::string& name, Outcome o) {
  bool pass = o.pass;
  std::string timing = fmt(o.seconds, "%.1f") + " s";
  if (o.budget > 0.0) {
    timing += " (budget " + fmt(o.budget, "%.0f") + " s)";
    if (o.seconds > o.budget) {
      pass = false;
      timing += " over budget";
    }
  }
  if (!pass) ++failures;
  char head[64];
  std::snprintf(head, sizeof head, "criterion %2d %s  ", id, pass ? "PASS" : "FAIL");
  const std::string line = head + name + ": " + o.detail + "; " + timing + "\n";
  std::fputs(line.c_str(), stdout);
  std::fflush(stdout);
  if (!opts.summary.empty()) {
    std::ofstream out(opts.summary, std::ios::app);
    out << line;
  }
}

// Ensembles keyed by (model, density) and grown on demand: trajectory i of
// a key always uses the same stream, so a prefix is itself a valid ensemble.
struct Cached {
  Ensemble e;
  double seconds{0.0};
};

class Pool {
 public:
  explicit Pool(GasParams base, std::vector<double> shells) : base_(std::move(base)), shells_(std::move(shells)) {}

  const GasParams& base() const { return base_; }

  // Returns the first `count` records and the wall time spent producing them.
  // A full-size request aliases the cache, which stays valid until the next
  // get() for the same key.
  std::pair<std::shared_ptr<const RecordSet>, double> get(Model model, double n, std::int64_t count) {
    Cached& c = cache_[{model, n}];
    const auto have = static_cast<std::int64_t>(c.e.set.records.size());
    if (have < count) {
      const bool shells = model == Model::exact && n == base_.n;
      const double t0 = now_seconds();
      Ensemble more = run_ensemble(at_density(base_, n), model, count - have, shells ? shells_ : std::vector<double>{},
                                   opts.threads, density_stream_key(n), have);
      c.seconds += now_seconds() - t0;
      if (have == 0) {
        c.e = std::move(more);
      } else {
        for (auto& r : more.set.records) c.e.set.records.push_back(std::move(r));
        c.e.stats.collisions += more.stats.collisions;
      }
    }
    if (static_cast<std::int64_t>(c.e.set.records.size()) == count) {
      return {std::shared_ptr<const RecordSet>(std::shared_ptr<void>{}, &c.e.set), c.seconds};
    }
    return {std::make_shared<const RecordSet>(head(c.e.set, static_cast<std::size_t>(count))), c.seconds};
  }

 private:
  GasParams base_;
  std::vector<double> shells_;
  std::map<std::pair<Model, double>, Cached> cache_;
};

double max_abs_z(const VerificationReport& r) {
  double z = 0.0;
  for (const auto& c : r.pairs) z = std::max(z, std::abs(c.z));
  return z;
}

void require_same_params(const GasParams& a, const GasParams& b, const std::string& what) {
  nlohmann::json ja, jb;
  to_json(ja, a);
  to_json(jb, b);
  if (ja != jb) throw ConfigError(what + ": acceptance configs must share the gas parameters of lemma.json");
}

// ------------------------------------------------------------------- 1

Outcome mechanics_exactness(const GasParams& base) {
  const double t0 = now_seconds();
  const DerivedScales s = derive_scales(base);
  GasParams p = base;
  const double span = 5000.0 * s.tau;
  const double step = 10.0 * s.tau;
  std::int64_t collisions = 0, momentum_bad = 0, energy_bad = 0, overlaps = 0, count_bad = 0, checkpoints = 0;
  double worst_energy = 0.0, min_sep = std::numeric_limits<double>::infinity();
  const double eps = std::numeric_limits<double>::epsilon();
  const std::int64_t target = opts.scale == 1.0 ? kMinCollisions : scaled(kMinCollisions);
  for (std::uint64_t traj = 0; collisions < target; ++traj) {
    Xoshiro256pp rng = make_stream(p.master_seed, 0xC011151011ULL, traj);
    const SystemState init = sample_initial_state(p, rng);
    ExactEngine engine(p, init);
    engine.set_observer([&](const CollisionEvent& ev) {
      if (ev.kind != EventKind::real) return;
      ++collisions;
      const Vec3 before = ev.P_pre + ev.p_pre, after = ev.P_post + ev.p_post;
      const double scale = norm(ev.P_pre) + norm(ev.p_pre);
      for (int a = 0; a < 3; ++a) {
        if (std::abs(after[a] - before[a]) > kMomentumUlps * eps * scale) {
          ++momentum_bad;
          break;
        }
      }
      const double e0 = norm2(ev.P_pre) / (2 * p.M) + norm2(ev.p_pre) / (2 * p.m);
      const double e1 = norm2(ev.P_post) / (2 * p.M) + norm2(ev.p_post) / (2 * p.m);
      const double rel = std::abs(e1 - e0) / e0;
      worst_energy = std::max(worst_energy, rel);
      if (rel > kKineticTolerance) ++energy_bad;
    });
    try {
      for (double t = step; t <= span && collisions < target; t += step) {
        engine.advance_to(t);
        ++checkpoints;
        const double d = engine.min_separation();
        min_sep = std::min(min_sep, d);
        if (d < p.r0 * (1.0 - kOverlapTol)) ++overlaps;
        if (static_cast<std::int64_t>(engine.atom_count()) != init.N_init) ++count_bad;
      }
    } catch (const CorruptedState&) {
      ++overlaps;
    }
  }
  Outcome o;
  o.pass = momentum_bad == 0 && energy_bad == 0 && overlaps == 0 && count_bad == 0 && collisions >= target;
  o.detail = std::to_string(collisions) + " collisions, momentum violations " + std::to_string(momentum_bad) +
             " (tolerance " + fmt(kMomentumUlps, "%.0f") + " ulp of |P|+|p|), worst kinetic-energy change " +
             fmt(worst_energy) + " relative, overlap violations " + std::to_string(overlaps) + " over " +
             std::to_string(checkpoints) + " checkpoints (min separation " + fmt(min_sep, "%.12g") + ")";
  o.budget = 600.0;
  o.seconds = now_seconds() - t0;
  return o;
}

// ------------------------------------------------------------------- 2

Outcome free_gas(const GasParams& base) {
  const double t0 = now_seconds();
  GasParams p = base;
  p.r0 = 0.0;
  const std::int64_t count = scaled(10000);
  const std::uint64_t key = 0xF4EE6A5ULL;
  const Ensemble e = run_ensemble(p, Model::exact, count, {}, opts.threads, key);
  std::int64_t mismatches = 0;
  for (std::size_t i = 0; i < e.set.records.size(); ++i) {
    Xoshiro256pp rng = make_stream(p.master_seed, key, i);
    const Vec3 P0 = sample_maxwell_momentum(p.M, p.T, rng);
    const auto& r = e.set.records[i];
    for (std::size_t k = 0; k < p.sample_times.size(); ++k) {
      if (!(r.displacements[k] == p.sample_times[k] * (P0 / p.M)) || r.collision_count != 0) ++mismatches;
    }
  }
  double min_p = 1.0;
  for (std::size_t k = 0; k < p.sample_times.size(); ++k) {
    const double sigma = std::sqrt(p.T / p.M) * p.sample_times[k];
    for (int a = 0; a < 3; ++a) {
      std::vector<double> xs;
      for (const auto& r : e.set.records) xs.push_back(r.displacements[k][a]);
      min_p = std::min(min_p, ks_test_normal(xs, 0.0, sigma).p_value);
    }
  }
  Outcome o;
  o.pass = mismatches == 0 && min_p > kKsMinP;
  o.detail = std::to_string(count) + " trajectories, inexact displacements " + std::to_string(mismatches) +
             ", min KS p over components and times " + fmt(min_p);
  o.budget = 60.0;
  o.seconds = now_seconds() - t0;
  return o;
}

// ------------------------------------------------------------------- 3

Outcome stationarity(const GasParams& base) {
  const double t0 = now_seconds();
  const std::int64_t count = scaled(10000);
  const std::uint64_t key = 0x57A7105ULL;
  const double sigma = std::sqrt(base.M * base.T);
  std::string detail;
  bool pass = true;
  for (const Model model : {Model::exact, Model::bl}) {
    const Ensemble e = run_ensemble(base, model, count, {}, opts.threads, key);
    double min_p = 1.0;
    for (std::size_t k = 0; k < base.sample_times.size(); ++k) {
      for (int a = 0; a < 3; ++a) {
        std::vector<double> xs;
        for (const auto& r : e.set.records) xs.push_back(r.P_samples[k][a]);
        min_p = std::min(min_p, ks_test_normal(xs, 0.0, sigma).p_value);
      }
    }
    pass = pass && min_p > kKsMinP;
    if (!detail.empty()) detail += ", ";
    detail += to_string(model) + " min KS p " + fmt(min_p);
  }
  Outcome o;
  o.pass = pass;
  o.detail = std::to_string(count) + " trajectories per model, " + detail;
  o.budget = 1800.0;
  o.seconds = now_seconds() - t0;
  return o;
}

// ------------------------------------------------------------------ 4, 5

std::vector<double> sorted_grid(const ExperimentConfig& c) {
  std::vector<double> g = c.density_grid;
  std::sort(g.begin(), g.end());
  return g;
}

struct Grid {
  std::vector<std::shared_ptr<const RecordSet>> sets;
  double seconds{0.0};
  std::vector<const RecordSet*> pointers() const {
    std::vector<const RecordSet*> out;
    for (const auto& s : sets) out.push_back(s.get());
    return out;
  }
};

Grid grid_from(Pool& pool, Model model, const std::vector<double>& densities, std::int64_t count) {
  Grid g;
  for (const double n : densities) {
    auto [set, seconds] = pool.get(model, n, count);
    g.sets.push_back(std::move(set));
    g.seconds += seconds;
  }
  return g;
}

Outcome lemma(Pool& pool, const ExperimentConfig& config, int k, double budget, bool gate_bias) {
  const Grid g = grid_from(pool, Model::exact, sorted_grid(config), scaled(config.n_trajectories));
  const double t0 = now_seconds();
  const VerificationReport r = evaluate_lemma(config, g.pointers(), k);
  bool z_ok = true, bias_ok = true;
  int bias_checked = 0;
  for (const auto& c : r.pairs) {
    z_ok = z_ok && std::abs(c.z) <= kAgreementZ;
    if (c.extras.contains("bias_check")) {
      ++bias_checked;
      bias_ok = bias_ok && c.extras["bias_check"]["passed"].get<bool>();
    }
  }
  if (gate_bias && bias_checked == 0) bias_ok = false;
  Outcome o;
  o.pass = z_ok && (!gate_bias || bias_ok);
  o.detail = std::to_string(r.pairs.size()) + " comparisons at " + std::to_string(g.sets.size()) + " densities x " +
             std::to_string(g.sets.front()->records.size()) + " trajectories, max |z| " + fmt(max_abs_z(r), "%.2f") +
             ", delta-halving bias check " + (bias_ok ? "passed" : "failed") + " on " + std::to_string(bias_checked) +
             (gate_bias ? "" : " (reported only)");
  std::cout << format_table(r);
  o.budget = budget;
  o.seconds = g.seconds + now_seconds() - t0;
  return o;
}

// ------------------------------------------------------------------- 6

double relative(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s > 0.0 ? std::abs(a - b) / s : 0.0;
}

Outcome estimator_identity(Pool& pool, const ExperimentConfig& config) {
  const auto densities = sorted_grid(config);
  const Grid g = grid_from(pool, Model::exact, densities, scaled(config.n_trajectories));
  const double t0 = now_seconds();
  const RecordSet& center = *g.sets[densities.size() / 2];
  const double lambda = mean_free_path(center.params.n, center.params.r0);
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<Observable> obs = {Observable::delta_sq(), Observable::delta_4(), Observable::cos_q(1.0 / lambda)};
  const std::vector<double> edges = {-inf, -60.0, -30.0, -15.0, -5.0, 0.0, 5.0, 15.0, 30.0, 60.0, inf};
  std::vector<Observable> bins;
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    bins.push_back(Observable::bin({edges[b], -inf, -inf}, {edges[b + 1], inf, inf}));
  }
  obs.insert(obs.end(), bins.begin(), bins.end());

  double worst_identity = 0.0, worst_partition = 0.0, worst_fd_sum = 0.0, worst_one_z = 0.0;
  const auto one = Observable::bin({-inf, -inf, -inf}, {inf, inf, inf});
  for (int k = 1; k <= 2; ++k) {
    for (std::size_t ti = 0; ti < center.params.sample_times.size(); ++ti) {
      for (const auto& o : obs) {
        worst_identity = std::max(worst_identity, relative(score_derivative(center, o, ti, k).value,
                                                            integrated_cumulant(center, o, ti, k).value));
      }
      // Summing the bins of a partition gives the g = 1 estimate to round-off.
      double sum = 0.0, sum_abs = 0.0, fd_sum = 0.0, fd_abs = 0.0;
      for (const auto& b : bins) {
        const double v = score_derivative(center, b, ti, k).value;
        sum += v;
        sum_abs += std::abs(v);
        std::vector<std::pair<double, EstimateWithError>> est;
        for (const auto& s : g.sets) est.emplace_back(s->params.n, plain_estimate(*s, b, ti));
        const double fd = finite_difference_derivative(est, k).value;
        fd_sum += fd;
        fd_abs += std::abs(fd);
      }
      const EstimateWithError whole = score_derivative(center, one, ti, k);
      worst_partition = std::max(worst_partition, std::abs(sum - whole.value) / std::max(sum_abs, 1e-300));
      worst_fd_sum = std::max(worst_fd_sum, std::abs(fd_sum) / std::max(fd_abs, 1e-300));
      worst_one_z = std::max(worst_one_z, std::abs(whole.value) / whole.std_error);
    }
  }
  Outcome o;
  o.pass = worst_identity <= kAdditivityTolerance && worst_partition <= kAdditivityTolerance &&
           worst_fd_sum <= kAdditivityTolerance && worst_one_z <= kAgreementZ;
  o.detail = "score vs cumulant worst relative " + fmt(worst_identity) + " over " + std::to_string(obs.size()) +
             " observables, bin-partition sum vs g=1 " + fmt(worst_partition) +
             ", partition sum of finite differences " + fmt(worst_fd_sum) + " of its magnitude, g=1 score |z| " +
             fmt(worst_one_z, "%.2f");
  o.budget = 60.0;
  o.seconds = now_seconds() - t0;
  return o;
}

// ------------------------------------------------------------------- 7

Outcome gen_func(Pool& default_pool, const ExperimentConfig& lemma_config) {
  const double t0 = now_seconds();
  ExperimentConfig c = load("gen_func.json");
  c.n_trajectories = scaled(c.n_trajectories);
  const VerificationReport r = gen_func_check(c);
  std::cout << format_table(r);
  double min_ess = 1.0;
  for (const auto& p : r.pairs) min_ess = std::min(min_ess, p.extras["ess_fraction"].get<double>());

  // Same tilt on the default box for comparison; not gated.
  const auto [center, unused] = default_pool.get(Model::exact, lemma_config.params.n, scaled(lemma_config.n_trajectories));
  const EstimateWithError far = reweight_to_density(*center, c.u_list.back(), Observable::delta_sq(), 0);
  Outcome o;
  o.pass = r.pass;
  o.detail = "box L=" + fmt(c.params.L) + " n=" + fmt(c.params.n) + ", " + std::to_string(c.n_trajectories) +
             " trajectories, max |z| " + fmt(max_abs_z(r), "%.2f") + ", min ESS/N " + fmt(min_ess, "%.3f") +
             "; default box ESS/N at u=" + fmt(c.u_list.back()) + " is " + fmt(*far.ess / far.n_samples, "%.3g") +
             " (not gated)";
  o.budget = 7200.0;
  o.seconds = now_seconds() - t0;
  return o;
}

// ------------------------------------------------------------------- 8

Outcome bg(Pool& pool, const ExperimentConfig& c) {
  const std::int64_t count = scaled(c.n_trajectories);
  auto [base, base_seconds] = pool.get(Model::exact, c.params.n, count);
  const double t0 = now_seconds();
  // Common random numbers: the partner reuses the base density's streams.
  const Ensemble partner = run_ensemble(bg_partner(c.params, c.bg_scale), Model::exact, count, {}, opts.threads,
                                        density_stream_key(c.params.n));
  const VerificationReport r = evaluate_bg_collapse(c, *base, partner.set);
  std::cout << format_table(r);
  double worst = 0.0;
  for (const auto& p : r.pairs) worst = std::max(worst, p.extras["relative_difference"].get<double>());
  Outcome o;
  o.pass = r.pass;
  o.detail = "(n, r0) vs (" + fmt(c.bg_scale) + "n, r0/" + fmt(std::sqrt(c.bg_scale)) + "), " + std::to_string(count) +
             " trajectories each, worst relative difference " + fmt(worst, "%.4f") + " (tolerance " +
             fmt(kBgTolerance) + ")";
  o.budget = 7200.0;
  o.seconds = base_seconds + now_seconds() - t0;
  return o;
}

// ------------------------------------------------------------------- 9

Outcome bl_poly(Pool& pool, const ExperimentConfig& c) {
  const Grid g = grid_from(pool, Model::bl, sorted_grid(c), scaled(c.n_trajectories));
  const double t0 = now_seconds();
  const VerificationReport r = evaluate_bl_polynomiality(c, g.pointers());
  std::cout << format_table(r);

  // Negative control: the same grid and errors, values exactly linear in n.
  std::vector<std::vector<std::pair<double, EstimateWithError>>> linear(c.params.sample_times.size());
  for (std::size_t ti = 0; ti < linear.size(); ++ti) {
    for (const auto& s : g.sets) {
      EstimateWithError e = plain_estimate(*s, Observable::delta_sq(), ti);
      e.value = 2000.0 - 40000.0 * (s->params.n - c.params.n);
      linear[ti].emplace_back(s->params.n, e);
    }
  }
  const VerificationReport control = evaluate_bl_polynomiality(c, linear);
  const Comparison& last = control.pairs.back();
  const bool control_zero = !control.pass && std::abs(last.lhs.value) <= 1e-6 * last.lhs.std_error;
  Outcome o;
  o.pass = r.pass && control_zero;
  o.detail = "curvature z at the last time " + fmt(r.pairs.back().z, "%.2f") + " (need |z| >= 5), linear control " +
             fmt(last.lhs.value) + " +- " + fmt(last.lhs.std_error) + (control_zero ? " (zero)" : " (NOT zero)");
  o.budget = 7200.0;
  o.seconds = g.seconds + now_seconds() - t0;
  return o;
}

// ------------------------------------------------------------------ 10

Outcome bl_contrast(Pool& pool) {
  ExperimentConfig c = load("bl_lemma.json");
  if (c.model != Model::bl) throw ConfigError("bl_lemma.json must use the bl model");
  const Grid g = grid_from(pool, Model::bl, sorted_grid(c), scaled(c.n_trajectories));
  const double t0 = now_seconds();
  const VerificationReport r = evaluate_lemma(c, g.pointers(), c.order);
  std::cout << format_table(r);
  double score_z = 0.0, fd_z = std::numeric_limits<double>::infinity(), mismatch_z = 0.0;
  for (const auto& p : r.pairs) {
    score_z = std::max(score_z, std::abs(p.extras["z_score_vs_zero"].get<double>()));
    if (p.label.rfind("delta_sq", 0) == 0) {
      fd_z = std::min(fd_z, std::abs(p.extras["z_difference_vs_zero"].get<double>()));
      mismatch_z = std::max(mismatch_z, std::abs(p.z));
    }
  }
  Outcome o;
  o.pass = r.pass;
  o.detail = "max |score|/SE " + fmt(score_z, "%.2f") + " (need <= 3), min |finite difference|/SE for delta_sq " +
             fmt(fd_z, "%.2f") + " (need > 5), max |score - difference| z for delta_sq " + fmt(mismatch_z, "%.2f") +
             " (not gated)";
  o.budget = 3600.0;
  o.seconds = g.seconds + now_seconds() - t0;
  return o;
}

// ------------------------------------------------------------------ 11

Outcome localization(Pool& pool, const ExperimentConfig& c) {
  auto [set, sim_seconds] = pool.get(Model::exact, c.params.n, scaled(c.n_trajectories));
  const double t0 = now_seconds();
  const VerificationReport r = evaluate_profile(c, *set);
  double worst_rel = 0.0, min_fraction = 1.0;
  for (const auto& p : r.pairs) {
    worst_rel = std::max(worst_rel, p.extras["relative_difference"].get<double>());
    min_fraction = std::min(min_fraction, p.extras["fraction_within_radius"].get<double>());
  }
  Outcome o;
  o.pass = r.pass && c.min_localized_fraction.has_value();
  o.detail = "additivity worst relative " + fmt(worst_rel) + ", min fraction within 3 lambda " + fmt(min_fraction, "%.4f") +
             (c.min_localized_fraction ? " (threshold " + fmt(*c.min_localized_fraction, "%.4f") + ")"
                                       : " (no threshold configured)");
  o.budget = 3600.0;
  o.seconds = sim_seconds + now_seconds() - t0;
  return o;
}

// ------------------------------------------------------------------ 12

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).string();
    // Manifests carry wall time and timestamps.
    if (rel.rfind("ensembles", 0) == 0) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[rel] = s.str();
  }
  return out;
}

Outcome determinism(std::int64_t count) {
  const double t0 = now_seconds();
  const fs::path root = fs::temp_directory_path() / ("tmgas_acceptance_" + std::to_string(::getpid()));
  struct Suite {
    std::string name, file;
    std::function<VerificationReport(const ExperimentConfig&)> run;
  };
  const std::vector<Suite> suites = {
      {"verify-lemma", "lemma.json", [](const ExperimentConfig& c) { return verify_lemma(c, 1); }},
      {"verify-lemma-k2", "lemma_k2.json", [](const ExperimentConfig& c) { return verify_lemma(c, 2); }},
      {"verify-lemma-bl", "bl_lemma.json", [](const ExperimentConfig& c) { return verify_lemma(c, 1); }},
      {"gen-func", "gen_func.json", gen_func_check},
      {"bg-collapse", "bg_collapse.json", bg_collapse},
      {"bl-polynomiality", "bl_polynomiality.json", bl_polynomiality},
      {"profile", "profile.json", profile},
  };
  const std::vector<int> thread_counts = {1, 4};
  int identical = 0, compared = 0;
  std::vector<std::string> differing;
  for (const auto& s : suites) {
    std::vector<std::map<std::string, std::string>> trees;
    for (const int threads : thread_counts) {
      ExperimentConfig c = load(s.file);
      c.n_trajectories = count;
      c.threads = threads;
      const fs::path dir = root / s.name / std::to_string(threads);
      c.output_dir = dir.string();
      write_report(s.run(c), dir.string());
      trees.push_back(read_tree(dir));
    }
    ++compared;
    if (trees[0] == trees[1] && !trees[0].empty()) {
      ++identical;
    } else {
      differing.push_back(s.name);
    }
  }
  // Record files of both models.
  const ExperimentConfig base = load("profile.json");
  for (const Model model : {Model::exact, Model::bl}) {
    std::vector<std::string> files;
    for (const int threads : thread_counts) {
      const auto shells = model == Model::exact ? base.shells : std::vector<double>{};
      const Ensemble e = run_ensemble(base.params, model, count, shells, threads, density_stream_key(base.params.n));
      const fs::path path = root / ("records_" + to_string(model) + "_" + std::to_string(threads) + ".csv");
      write_records_csv(e.set, path.string());
      std::ifstream in(path, std::ios::binary);
      std::ostringstream text;
      text << in.rdbuf();
      files.push_back(text.str());
    }
    ++compared;
    if (files[0] == files[1]) {
      ++identical;
    } else {
      differing.push_back("records_" + to_string(model));
    }
  }
  fs::remove_all(root);
  Outcome o;
  o.pass = identical == compared;
  o.detail = std::to_string(identical) + " of " + std::to_string(compared) +
             " suites bit-identical between 1 and 4 threads at " + std::to_string(count) + " trajectories";
  for (const auto& d : differing) o.detail += ", differs: " + d;
  o.seconds = now_seconds() - t0;
  return o;
}

// --------------------------------------------------------------- pilot

int pilot_profile(int chunks) {
  ExperimentConfig c = load("profile.json");
  GasParams p = c.params;
  p.master_seed = c.params.master_seed + 1;
  const double radius = 3.0 * mean_free_path(p.n, p.r0);
  const std::int64_t size = scaled(c.n_trajectories);
  std::printf("pilot: %d chunks of %lld trajectories, master_seed %llu, radius %.6g\n", chunks,
              static_cast<long long>(size), static_cast<unsigned long long>(p.master_seed), radius);
  std::map<std::string, std::vector<double>> fractions;
  for (int j = 0; j < chunks; ++j) {
    const Ensemble e = run_ensemble(p, Model::exact, size, c.shells, opts.threads, density_stream_key(p.n), j * size);
    for (const auto& g : c.observables) {
      for (std::size_t ti = 0; ti < p.sample_times.size(); ++ti) {
        const double f = correlation_profile(e.set, g, ti).fraction_within(radius);
        const std::string key = g.name() + " t=" + fmt(p.sample_times[ti], "%.6g");
        fractions[key].push_back(f);
        std::printf("chunk %d %s fraction %.6f\n", j, key.c_str(), f);
        std::fflush(stdout);
      }
    }
  }
  double threshold = 1.0;
  for (const auto& [key, v] : fractions) {
    double mean = 0.0, var = 0.0;
    for (const double f : v) mean += f / static_cast<double>(v.size());
    for (const double f : v) var += (f - mean) * (f - mean) / static_cast<double>(v.size() - 1);
    const double lo = mean - kChunkSigmas * std::sqrt(var);
    std::printf("%s mean %.6f sd %.6f min %.6f mean-3sd %.6f\n", key.c_str(), mean, std::sqrt(var),
                *std::min_element(v.begin(), v.end()), lo);
    threshold = std::min(threshold, lo);
  }
  std::printf("threshold %.4f\n", std::floor(threshold * 1e4) / 1e4);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tmgas acceptance suite"};
  app.add_option("--config-dir", opts.config_dir, "directory holding the acceptance configs")->required();
  app.add_option("--scale", opts.scale, "multiply ensemble sizes (smoke runs only)")->check(CLI::PositiveNumber);
  app.add_option("--threads", opts.threads, "worker threads (0: hardware)")->check(CLI::NonNegativeNumber);
  app.add_option("--only", opts.only, "run only these criteria")->check(CLI::Range(1, 12));
  app.add_option("--pilot-profile", opts.pilot_chunks, "run the localization pilot with this many chunks and exit");
  app.add_option("--summary", opts.summary, "also write the criterion lines to this file");
  CLI11_PARSE(app, argc, argv);
  if (!opts.summary.empty()) std::ofstream(opts.summary, std::ios::trunc);

  try {
    if (opts.pilot_chunks > 0) return pilot_profile(opts.pilot_chunks);
    if (opts.scale != 1.0) std::printf("scaled run (x%g): not an acceptance result\n", opts.scale);

    const ExperimentConfig lemma1 = load("lemma.json");
    const ExperimentConfig lemma2 = load("lemma_k2.json");
    const ExperimentConfig bg_config = load("bg_collapse.json");
    const ExperimentConfig bl_config = load("bl_polynomiality.json");
    const ExperimentConfig profile_config = load("profile.json");
    for (const auto* c : {&lemma2, &bg_config, &bl_config, &profile_config}) {
      require_same_params(lemma1.params, c->params, config_digest(*c));
    }
    if (bg_config.n_trajectories > lemma1.n_trajectories || profile_config.n_trajectories > lemma1.n_trajectories) {
      throw ConfigError("bg and profile ensembles must fit inside the order-1 lemma ensembles");
    }
    Pool pool(lemma1.params, profile_config.shells);

    using Step = std::function<Outcome()>;
    const std::vector<std::pair<std::string, Step>> steps = {
        {"mechanics exactness", [&] { return mechanics_exactness(lemma1.params); }},
        {"free-gas analytics", [&] { return free_gas(lemma1.params); }},
        {"equilibrium stationarity", [&] { return stationarity(lemma1.params); }},
        {"lemma order 1", [&] { return lemma(pool, lemma1, 1, 7200.0, true); }},
        {"lemma order 2", [&] { return lemma(pool, lemma2, 2, 21600.0, false); }},
        {"estimator identity", [&] { return estimator_identity(pool, lemma1); }},
        {"generating function", [&] { return gen_func(pool, lemma1); }},
        {"boltzmann-grad collapse", [&] { return bg(pool, bg_config); }},
        {"truncation contradiction", [&] { return bl_poly(pool, bl_config); }},
        {"molecular-chaos contrast", [&] { return bl_contrast(pool); }},
        {"correlation localization", [&] { return localization(pool, profile_config); }},
        {"determinism", [&] { return determinism(scaled(2000)); }},
    };
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const int id = static_cast<int>(i) + 1;
      if (!wanted(id)) continue;
      try {
        report(id, steps[i].first, steps[i].second());
      } catch (const std::exception& e) {
        report(id, steps[i].first, {false, std::string("error: ") + e.what(), 0.0, 0.0});
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
