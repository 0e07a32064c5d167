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

#include "experiments.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "stats.hpp"

namespace tmgas {

namespace {

std::string fmt(double x, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::string label_for(const Observable& g, const GasParams& p, std::size_t t_index) {
  return g.name() + " t=" + fmt(p.sample_times[t_index]);
}

std::string file_safe(const std::string& s) {
  std::string out;
  for (const char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') {
      out += c;
    } else if (out.empty() || out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

double z_score(double diff, double var) {
  if (var > 0.0) return diff / std::sqrt(var);
  if (diff == 0.0) return 0.0;
  return std::copysign(std::numeric_limits<double>::infinity(), diff);
}

VerificationReport start_report(const ExperimentConfig& config, std::string name, std::string gate) {
  VerificationReport r;
  r.name = std::move(name);
  r.gate = std::move(gate);
  r.config_digest = config_digest(config);
  r.seed = config.params.master_seed;
  return r;
}

void finish(VerificationReport& r) {
  r.pass = std::all_of(r.pairs.begin(), r.pairs.end(), [](const Comparison& c) { return c.passed; });
}

std::vector<double> per_record(const RecordSet& set, const Observable& g, std::size_t t_index, int weight_order) {
  const double V = derive_scales(set.params).V_eff;
  std::vector<double> x(set.records.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& r = set.records[i];
    x[i] = g(r.displacements[t_index]);
    if (weight_order > 0) x[i] *= charlier_weight(weight_order, r.N_init, set.params.n, V);
  }
  return x;
}

void write_manifest(const ExperimentConfig& config, const Ensemble& e, const std::string& tag) {
  if (config.output_dir.empty()) return;
  const std::string dir = config.output_dir + "/ensembles";
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  write_json(make_manifest(config, e), dir + "/" + file_safe(tag) + ".json");
}

Ensemble run_one(const ExperimentConfig& config, const GasParams& p, Model model, const std::vector<double>& shells,
                 std::uint64_t key, const std::string& tag) {
  Ensemble e = run_ensemble(p, model, config.n_trajectories, shells, config.threads, key);
  write_manifest(config, e, tag);
  return e;
}

void check_grid(const std::vector<const RecordSet*>& grid, std::size_t min_size, const char* what) {
  if (grid.size() < min_size) {
    throw PreconditionError(std::string(what) + " needs at least " + std::to_string(min_size) + " densities");
  }
  for (const RecordSet* s : grid) {
    if (!s) throw PreconditionError(std::string(what) + ": missing ensemble");
  }
}

std::vector<const RecordSet*> sorted_grid(std::vector<const RecordSet*> grid) {
  std::sort(grid.begin(), grid.end(), [](const RecordSet* a, const RecordSet* b) { return a->params.n < b->params.n; });
  return grid;
}

std::vector<const RecordSet*> pointers(const std::vector<Ensemble>& es) {
  std::vector<const RecordSet*> out;
  for (const auto& e : es) out.push_back(&e.set);
  return out;
}

}  // namespace

nlohmann::json to_json(const EstimateWithError& e) {
  nlohmann::json j{{"method", e.method_name()}, {"observable", e.observable}, {"t", e.t},
                   {"k", e.k},                  {"value", e.value},           {"std_error", e.std_error},
                   {"n_samples", e.n_samples}};
  if (e.ess) j["ess"] = *e.ess;
  return j;
}

nlohmann::json to_json(const VerificationReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& c : r.pairs) {
    pairs.push_back({{"label", c.label},
                     {"lhs", to_json(c.lhs)},
                     {"rhs", to_json(c.rhs)},
                     {"z", c.z},
                     {"passed", c.passed},
                     {"extras", c.extras}});
  }
  nlohmann::json figures = nlohmann::json::array();
  for (const auto& f : r.figures) figures.push_back(f.name + ".csv");
  return {{"name", r.name},
          {"pass", r.pass},
          {"gate", r.gate},
          {"thresholds",
           {{"agreement_z", kAgreementZ},
            {"rejection_z", kRejectionZ},
            {"bg_relative_tolerance", kBgTolerance},
            {"min_ess_fraction", kMinEssFraction},
            {"additivity_relative_tolerance", kAdditivityTolerance}}},
          {"config_digest", r.config_digest},
          {"seed", r.seed},
          {"pairs", pairs},
          {"notes", r.notes},
          {"figures", figures}};
}

std::string format_table(const VerificationReport& r) {
  std::ostringstream os;
  char line[512];
  os << r.name << "  (seed " << r.seed << ", config " << r.config_digest << ")\n";
  os << "gate: " << r.gate << "\n";
  std::snprintf(line, sizeof line, "%-40s %26s %26s %9s  %s\n", "label", "lhs +- se", "rhs +- se", "z", "ok");
  os << line;
  for (const auto& c : r.pairs) {
    const std::string lhs = fmt(c.lhs.value, "%.5g") + " +- " + fmt(c.lhs.std_error, "%.2g");
    const std::string rhs = fmt(c.rhs.value, "%.5g") + " +- " + fmt(c.rhs.std_error, "%.2g");
    std::snprintf(line, sizeof line, "%-40s %26s %26s %9.3f  %s\n", c.label.c_str(), lhs.c_str(), rhs.c_str(), c.z,
                  c.passed ? "yes" : "NO");
    os << line;
  }
  for (const auto& n : r.notes) os << "note: " << n << "\n";
  os << "result: " << (r.pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

void write_report(const VerificationReport& r, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  write_json(to_json(r), dir + "/report.json");
  for (const auto& f : r.figures) {
    const std::string path = dir + "/" + f.name + ".csv";
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write '" + path + "'");
    os << "x,y,yerr\n";
    for (std::size_t i = 0; i < f.x.size(); ++i) {
      os << fmt(f.x[i], "%.17g") << ',' << fmt(f.y[i], "%.17g") << ',' << fmt(f.yerr[i], "%.17g") << '\n';
    }
    if (!os) throw IoError("failed writing '" + path + "'");
  }
}

std::uint64_t density_stream_key(double n) { return std::bit_cast<std::uint64_t>(n); }

RecordSet head(const RecordSet& set, std::size_t count) {
  RecordSet out{set.params, set.model, set.shell_edges, {}};
  count = std::min(count, set.records.size());
  out.records.assign(set.records.begin(), set.records.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

GasParams at_density(const GasParams& p, double n) {
  GasParams q = p;
  q.n = n;
  return q;
}

std::vector<Ensemble> run_density_grid(const ExperimentConfig& config, Model model, bool with_shells) {
  if (config.density_grid.empty()) throw PreconditionError("config has no density_grid");
  std::vector<double> grid = config.density_grid;
  std::sort(grid.begin(), grid.end());
  std::vector<Ensemble> out;
  for (const double n : grid) {
    out.push_back(run_one(config, at_density(config.params, n), model, with_shells ? config.shells : std::vector<double>{},
                          density_stream_key(n), to_string(model) + "_n" + fmt(n, "%.8g")));
  }
  return out;
}

// ------------------------------------------------------------ verify-lemma

VerificationReport evaluate_lemma(const ExperimentConfig& config, const std::vector<const RecordSet*>& unsorted, int k) {
  if (k != 1 && k != 2) throw InvalidArgument("lemma order must be 1 or 2");
  check_grid(unsorted, 3, "verify-lemma");
  const auto grid = sorted_grid(unsorted);
  if (grid.size() % 2 == 0) throw PreconditionError("verify-lemma needs an odd density grid centred on n");
  const Model model = grid.front()->model;
  const bool contrast = model == Model::bl;
  const RecordSet& center = *grid[grid.size() / 2];

  VerificationReport r = start_report(
      config, contrast ? "verify-lemma (bl contrast)" : "verify-lemma",
      contrast ? "score within 3 SE of 0; for delta_sq the finite difference beyond 5 SE of 0"
               : "all |z| <= 3 and delta-halving bias check passes");
  std::vector<double> densities;
  for (const RecordSet* s : grid) densities.push_back(s->params.n);
  const Stencil stencil = finite_difference_stencil(densities, k);
  const double c_mid = stencil.coefficients[grid.size() / 2];
  const bool bias_available = grid.size() >= 5 && ((grid.size() - 1) / 2) % 2 == 0;
  if (!contrast && !bias_available) r.notes.push_back("delta-halving bias check needs a 5-point grid; not evaluated");

  for (const Observable& g : config.observables) {
    for (std::size_t ti = 0; ti < center.params.sample_times.size(); ++ti) {
      std::vector<std::pair<double, EstimateWithError>> est;
      Figure fig{"plain_" + file_safe(g.name()) + "_t" + std::to_string(ti), {}, {}, {}};
      for (const RecordSet* s : grid) {
        est.emplace_back(s->params.n, plain_estimate(*s, g, ti));
        fig.x.push_back(s->params.n);
        fig.y.push_back(est.back().second.value);
        fig.yerr.push_back(est.back().second.std_error);
      }
      r.figures.push_back(std::move(fig));

      Comparison c;
      c.label = label_for(g, center.params, ti) + " k=" + std::to_string(k);
      c.lhs = score_derivative(center, g, ti, k);
      c.rhs = finite_difference_derivative(est, k);
      double cov = 0.0;
      if (c_mid != 0.0) {
        cov = c_mid * batch_mean_covariance(per_record(center, g, ti, k), per_record(center, g, ti, 0));
      }
      const double var = c.lhs.std_error * c.lhs.std_error + c.rhs.std_error * c.rhs.std_error - 2.0 * cov;
      c.z = z_score(c.lhs.value - c.rhs.value, var);
      c.extras["covariance"] = cov;
      if (contrast) {
        const double z_score_zero = z_score(c.lhs.value, c.lhs.std_error * c.lhs.std_error);
        const double z_fd_zero = z_score(c.rhs.value, c.rhs.std_error * c.rhs.std_error);
        c.extras["z_score_vs_zero"] = z_score_zero;
        c.extras["z_difference_vs_zero"] = z_fd_zero;
        c.passed = std::abs(z_score_zero) <= kAgreementZ;
        if (g.tag == Observable::Tag::delta_sq) {
          c.passed = c.passed && std::abs(z_fd_zero) > kRejectionZ;
        }
      } else {
        c.passed = std::abs(c.z) <= kAgreementZ;
      }
      if (bias_available) {
        const BiasCheck b = delta_halving_check(est, k);
        c.extras["bias_check"] = {{"coarse", b.coarse}, {"fine", b.fine},           {"bias", b.bias},
                                  {"bias_se", b.bias_se}, {"coarse_se", b.coarse_se}, {"passed", b.passed}};
        if (!contrast) c.passed = c.passed && b.passed;
      }
      r.pairs.push_back(std::move(c));
    }
  }
  if (contrast) {
    r.notes.push_back(
        "bl atom counts never touch the path, so the score side vanishes while the density dependence does not: "
        "the lemma fails under molecular chaos");
  }
  finish(r);
  return r;
}

VerificationReport verify_lemma(const ExperimentConfig& config, int k) {
  const auto ensembles = run_density_grid(config, config.model, false);
  return evaluate_lemma(config, pointers(ensembles), k);
}

// ---------------------------------------------------------------- gen-func

VerificationReport evaluate_gen_func(const ExperimentConfig& config, const RecordSet& center,
                                     const std::vector<const RecordSet*>& direct) {
  if (direct.size() != config.u_list.size()) throw PreconditionError("gen-func: one direct ensemble per u required");
  VerificationReport r = start_report(config, "gen-func", "all |z| <= 3 and ESS >= 0.1 * n_samples");
  const double n = center.params.n;
  for (const Observable& g : config.observables) {
    for (std::size_t ti = 0; ti < center.params.sample_times.size(); ++ti) {
      Figure fr{"reweighted_" + file_safe(g.name()) + "_t" + std::to_string(ti), {}, {}, {}};
      Figure fd{"direct_" + file_safe(g.name()) + "_t" + std::to_string(ti), {}, {}, {}};
      for (std::size_t j = 0; j < config.u_list.size(); ++j) {
        const double u = config.u_list[j];
        if (!direct[j]) throw PreconditionError("gen-func: missing direct ensemble");
        const double target = n * (1.0 + u);
        if (std::abs(direct[j]->params.n - target) > 1e-12 * target) {
          throw PreconditionError("gen-func: direct ensemble density does not match (1+u) n for u = " + fmt(u));
        }
        Comparison c;
        c.label = label_for(g, center.params, ti) + " u=" + fmt(u);
        c.lhs = reweight_to_density(center, u, g, ti);
        c.rhs = plain_estimate(*direct[j], g, ti);
        const bool same = direct[j] == &center;
        const double var = c.lhs.std_error * c.lhs.std_error + (same ? 0.0 : c.rhs.std_error * c.rhs.std_error);
        c.z = z_score(c.lhs.value - c.rhs.value, var);
        const double ess_fraction = *c.lhs.ess / static_cast<double>(c.lhs.n_samples);
        c.extras["u"] = u;
        c.extras["ess_fraction"] = ess_fraction;
        c.passed = std::abs(c.z) <= kAgreementZ && ess_fraction >= kMinEssFraction;
        if (ess_fraction < kMinEssFraction) {
          r.notes.push_back("ESS below 0.1 * n_samples for " + c.label + " (" + fmt(ess_fraction) + ")");
        }
        fr.x.push_back(u);
        fr.y.push_back(c.lhs.value);
        fr.yerr.push_back(c.lhs.std_error);
        fd.x.push_back(u);
        fd.y.push_back(c.rhs.value);
        fd.yerr.push_back(c.rhs.std_error);
        r.pairs.push_back(std::move(c));
      }
      r.figures.push_back(std::move(fr));
      r.figures.push_back(std::move(fd));
    }
  }
  finish(r);
  return r;
}

VerificationReport gen_func_check(const ExperimentConfig& config) {
  for (const double u : config.u_list) {
    if (!(u > -1.0) || !(std::abs(u) <= kMaxTilt)) {
      throw InvalidArgument("tilt u = " + fmt(u) + " outside the allowed range -1 < u, |u| <= " + fmt(kMaxTilt));
    }
  }
  const double n = config.params.n;
  const Ensemble center = run_one(config, config.params, Model::exact, {}, density_stream_key(n), "exact_n" + fmt(n, "%.8g"));
  std::vector<Ensemble> tilted;
  tilted.reserve(config.u_list.size());
  std::vector<const RecordSet*> direct;
  for (const double u : config.u_list) {
    if (u == 0.0) {
      direct.push_back(&center.set);
      continue;
    }
    const double target = n * (1.0 + u);
    tilted.push_back(run_one(config, at_density(config.params, target), Model::exact, {}, density_stream_key(target),
                             "exact_n" + fmt(target, "%.8g")));
    direct.push_back(&tilted.back().set);
  }
  return evaluate_gen_func(config, center.set, direct);
}

// ------------------------------------------------------------- bg-collapse

GasParams bg_partner(const GasParams& base, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("bg scale must be positive");
  GasParams p = base;
  p.n = base.n * scale;
  p.r0 = base.r0 / std::sqrt(scale);
  return p;
}

VerificationReport evaluate_bg_collapse(const ExperimentConfig& config, const RecordSet& base, const RecordSet& partner) {
  const GasParams& a = base.params;
  const GasParams& b = partner.params;
  const double la = mean_free_path(a.n, a.r0), lb = mean_free_path(b.n, b.r0);
  const bool equal_lambda = (std::isinf(la) && std::isinf(lb)) || std::abs(la - lb) <= 1e-12 * std::abs(la);
  if (!equal_lambda) throw ConfigError("bg-collapse pair has unequal mean free paths (" + fmt(la) + " vs " + fmt(lb) + ")");
  if (a.M != b.M || a.m != b.m || a.T != b.T || a.L != b.L || a.sample_times != b.sample_times) {
    throw ConfigError("bg-collapse pair must differ only in n and r0");
  }
  VerificationReport r = start_report(config, "bg-collapse", "relative difference of E|Delta|^2 <= 5% at every sample time");
  r.notes.push_back("pair (n, r0) = (" + fmt(a.n) + ", " + fmt(a.r0) + ") vs (" + fmt(b.n) + ", " + fmt(b.r0) +
                    "), lambda = " + fmt(la));
  const Observable g = Observable::delta_sq();
  const bool paired = base.records.size() == partner.records.size();
  const bool moments = base.records.size() >= 1000 && partner.records.size() >= 1000;
  if (!moments) r.notes.push_back("fewer than 1000 records: kurtosis not reported");
  Figure fa{"msd_base", {}, {}, {}}, fb{"msd_partner", {}, {}, {}};
  for (std::size_t ti = 0; ti < a.sample_times.size(); ++ti) {
    Comparison c;
    c.label = label_for(g, a, ti);
    c.lhs = plain_estimate(base, g, ti);
    c.rhs = plain_estimate(partner, g, ti);
    const double cov = paired ? batch_mean_covariance(per_record(base, g, ti, 0), per_record(partner, g, ti, 0)) : 0.0;
    c.z = z_score(c.lhs.value - c.rhs.value,
                  c.lhs.std_error * c.lhs.std_error + c.rhs.std_error * c.rhs.std_error - 2.0 * cov);
    const double scale = std::max(std::abs(c.lhs.value), std::abs(c.rhs.value));
    const double rel = scale > 0.0 ? std::abs(c.lhs.value - c.rhs.value) / scale : 0.0;
    c.extras["relative_difference"] = rel;
    c.extras["covariance"] = cov;
    if (moments) {
      const DisplacementMoments ma = displacement_moments(base, ti, config.params.master_seed);
      const DisplacementMoments mb = displacement_moments(partner, ti, config.params.master_seed);
      c.extras["kurtosis_base"] = {{"value", ma.excess_kurtosis_x}, {"std_error", ma.excess_kurtosis_x_se}};
      c.extras["kurtosis_partner"] = {{"value", mb.excess_kurtosis_x}, {"std_error", mb.excess_kurtosis_x_se}};
      c.extras["kurtosis_difference"] = ma.excess_kurtosis_x - mb.excess_kurtosis_x;
    }
    c.passed = rel <= kBgTolerance;
    fa.x.push_back(a.sample_times[ti]);
    fa.y.push_back(c.lhs.value);
    fa.yerr.push_back(c.lhs.std_error);
    fb.x.push_back(b.sample_times[ti]);
    fb.y.push_back(c.rhs.value);
    fb.yerr.push_back(c.rhs.std_error);
    r.pairs.push_back(std::move(c));
  }
  r.figures.push_back(std::move(fa));
  r.figures.push_back(std::move(fb));
  finish(r);
  return r;
}

VerificationReport bg_collapse(const ExperimentConfig& config) {
  const GasParams partner = bg_partner(config.params, config.bg_scale);
  // Both sides share streams so their difference is not swamped by noise.
  const std::uint64_t key = density_stream_key(config.params.n);
  const Ensemble a = run_one(config, config.params, Model::exact, {}, key, "bg_base");
  const Ensemble b = run_one(config, partner, Model::exact, {}, key, "bg_partner");
  return evaluate_bg_collapse(config, a.set, b.set);
}

// -------------------------------------------------------- bl-polynomiality

EstimateWithError quadratic_curvature(std::vector<std::pair<double, EstimateWithError>> est) {
  if (est.size() < 3) throw PreconditionError("curvature fit needs at least 3 densities");
  std::sort(est.begin(), est.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  const std::size_t m = est.size();
  const double mid = 0.5 * (est.front().first + est.back().first);
  const double h = (est.back().first - est.front().first) / static_cast<double>(m - 1);
  const bool weighted = std::all_of(est.begin(), est.end(), [](const auto& e) { return e.second.std_error > 0.0; });

  std::array<std::array<double, 3>, 3> A{};
  std::vector<std::array<double, 3>> rows(m);
  std::vector<double> w(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double x = (est[i].first - mid) / h;
    rows[i] = {1.0, x, x * x};
    w[i] = weighted ? 1.0 / (est[i].second.std_error * est[i].second.std_error) : 1.0;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) A[a][b] += w[i] * rows[i][a] * rows[i][b];
    }
  }
  // Row 2 of A^-1 via cofactors.
  const double det = A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) -
                     A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
                     A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
  if (det == 0.0) throw PreconditionError("curvature fit is singular");
  const std::array<double, 3> inv_row{(A[1][0] * A[2][1] - A[1][1] * A[2][0]) / det,
                                      -(A[0][0] * A[2][1] - A[0][1] * A[2][0]) / det,
                                      (A[0][0] * A[1][1] - A[0][1] * A[1][0]) / det};
  double c2 = 0.0, var = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double coef = w[i] * (inv_row[0] * rows[i][0] + inv_row[1] * rows[i][1] + inv_row[2] * rows[i][2]);
    c2 += coef * est[i].second.value;
    var += coef * coef * est[i].second.std_error * est[i].second.std_error;
  }
  EstimateWithError e;
  e.method = Method::finite_difference;
  e.k = 2;
  e.value = 2.0 * c2 / (h * h);
  e.std_error = 2.0 * std::sqrt(var) / (h * h);
  e.observable = est.front().second.observable;
  e.t = est.front().second.t;
  for (const auto& x : est) e.n_samples += x.second.n_samples;
  return e;
}

VerificationReport evaluate_bl_polynomiality(
    const ExperimentConfig& config, const std::vector<std::vector<std::pair<double, EstimateWithError>>>& per_time) {
  if (per_time.empty()) throw PreconditionError("bl-polynomiality needs at least one sample time");
  VerificationReport r = start_report(config, "bl-polynomiality", "|z| >= 5 for the curvature in n at the last sample time");
  for (std::size_t ti = 0; ti < per_time.size(); ++ti) {
    if (per_time[ti].size() < 5) throw PreconditionError("bl-polynomiality needs at least 5 densities");
    Comparison c;
    c.lhs = quadratic_curvature(per_time[ti]);
    c.label = c.lhs.observable + " t=" + fmt(c.lhs.t) + " d2/dn2";
    c.rhs.method = Method::plain;
    c.rhs.observable = "linear_in_n";
    c.rhs.t = c.lhs.t;
    c.z = z_score(c.lhs.value, c.lhs.std_error * c.lhs.std_error);
    const bool gated = ti + 1 == per_time.size();
    c.extras["gated"] = gated;
    c.passed = !gated || std::abs(c.z) >= kRejectionZ;
    Figure f{"msd_vs_n_t" + std::to_string(ti), {}, {}, {}};
    for (const auto& [n, e] : per_time[ti]) {
      f.x.push_back(n);
      f.y.push_back(e.value);
      f.yerr.push_back(e.std_error);
    }
    r.figures.push_back(std::move(f));
    r.pairs.push_back(std::move(c));
  }
  finish(r);
  r.notes.push_back(r.pass ? "contradiction demonstrated: the bl law is curved in n, while the s=2 truncation combined "
                             "with the score identity would force it to be linear"
                           : "no contradiction: curvature consistent with zero");
  return r;
}

VerificationReport evaluate_bl_polynomiality(const ExperimentConfig& config, const std::vector<const RecordSet*>& unsorted) {
  check_grid(unsorted, 5, "bl-polynomiality");
  const auto grid = sorted_grid(unsorted);
  const Observable g = Observable::delta_sq();
  std::vector<std::vector<std::pair<double, EstimateWithError>>> per_time(grid.front()->params.sample_times.size());
  for (std::size_t ti = 0; ti < per_time.size(); ++ti) {
    for (const RecordSet* s : grid) per_time[ti].emplace_back(s->params.n, plain_estimate(*s, g, ti));
  }
  VerificationReport r = evaluate_bl_polynomiality(config, per_time);
  if (grid.front()->model != Model::bl) r.notes.push_back("ensembles are not from the bl model");
  return r;
}

VerificationReport bl_polynomiality(const ExperimentConfig& config) {
  if (config.density_grid.size() < 5) throw PreconditionError("bl-polynomiality needs at least 5 densities");
  const auto ensembles = run_density_grid(config, Model::bl, false);
  return evaluate_bl_polynomiality(config, pointers(ensembles));
}

// ----------------------------------------------------------------- profile

VerificationReport evaluate_profile(const ExperimentConfig& config, const RecordSet& set) {
  VerificationReport r = start_report(config, "profile",
                                      "shell sum equals the order-1 integrated cumulant to 1e-12 relative; "
                                      "fraction within 3 lambda >= min_localized_fraction");
  const double radius = 3.0 * mean_free_path(set.params.n, set.params.r0);
  if (!config.min_localized_fraction) r.notes.push_back("min_localized_fraction not set: localization reported only");
  for (const Observable& g : config.observables) {
    for (std::size_t ti = 0; ti < set.params.sample_times.size(); ++ti) {
      const ProfileEstimate prof = correlation_profile(set, g, ti);
      Comparison c;
      c.label = label_for(g, set.params, ti);
      c.lhs = prof.total;
      c.rhs = integrated_cumulant(set, g, ti, 1);
      c.z = z_score(c.lhs.value - c.rhs.value, c.rhs.std_error * c.rhs.std_error);
      const double scale = std::max(std::abs(c.lhs.value), std::abs(c.rhs.value));
      const double rel = scale > 0.0 ? std::abs(c.lhs.value - c.rhs.value) / scale : 0.0;
      const double fraction = prof.fraction_within(radius);
      c.extras["relative_difference"] = rel;
      c.extras["localization_radius"] = radius;
      c.extras["fraction_within_radius"] = fraction;
      nlohmann::json shells = nlohmann::json::array();
      for (std::size_t s = 0; s < prof.per_shell.size(); ++s) {
        shells.push_back({{"outer_radius", s < prof.shell_edges.size() ? nlohmann::json(prof.shell_edges[s]) : nlohmann::json()},
                          {"value", prof.per_shell[s].value},
                          {"std_error", prof.per_shell[s].std_error}});
      }
      c.extras["shells"] = shells;
      c.passed = rel <= kAdditivityTolerance;
      if (config.min_localized_fraction) {
        c.extras["min_localized_fraction"] = *config.min_localized_fraction;
        c.passed = c.passed && fraction >= *config.min_localized_fraction;
      }
      Figure f{"profile_" + file_safe(g.name()) + "_t" + std::to_string(ti), {}, {}, {}};
      for (std::size_t s = 0; s < prof.shell_edges.size(); ++s) {
        f.x.push_back(prof.shell_edges[s]);
        f.y.push_back(prof.per_shell[s].value);
        f.yerr.push_back(prof.per_shell[s].std_error);
      }
      r.figures.push_back(std::move(f));
      r.pairs.push_back(std::move(c));
    }
  }
  finish(r);
  return r;
}

VerificationReport profile(const ExperimentConfig& config) {
  if (config.shells.empty()) throw PreconditionError("profile needs shell edges in the config");
  const double n = config.params.n;
  const Ensemble e = run_one(config, config.params, Model::exact, config.shells, density_stream_key(n),
                             "exact_n" + fmt(n, "%.8g"));
  return evaluate_profile(config, e.set);
}

// ---------------------------------------------------------------- simulate

VerificationReport summarize_ensemble(const ExperimentConfig& config, const Ensemble& ensemble) {
  VerificationReport r = start_report(config, "simulate", "none (ensemble summary)");
  const RecordSet& set = ensemble.set;
  for (const Observable& g : config.observables) {
    for (std::size_t ti = 0; ti < set.params.sample_times.size(); ++ti) {
      Comparison c;
      c.label = label_for(g, set.params, ti);
      c.lhs = set.records.size() >= static_cast<std::size_t>(kBatchCount) ? plain_estimate(set, g, ti) : EstimateWithError{};
      c.rhs = c.lhs;
      r.pairs.push_back(std::move(c));
    }
  }
  r.notes.push_back("records: " + std::to_string(set.records.size()) + ", collisions: " +
                    std::to_string(ensemble.stats.collisions) + ", aborted: " + std::to_string(ensemble.stats.aborted));
  if (set.records.size() < static_cast<std::size_t>(kBatchCount)) {
    r.notes.push_back("fewer records than batches: estimates not computed");
  }
  for (const auto& w : ensemble.stats.warnings) r.notes.push_back("warning: " + w);
  finish(r);
  return r;
}

}  // namespace tmgas
