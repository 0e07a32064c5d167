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

#include "estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stats.hpp"

namespace tmgas {

namespace {

// Score and cumulant estimates are small residuals of terms as large as
// V_eff^2 E[g]; quad precision keeps the two algebraic routes in agreement
// far below double round-off.
using Quad = __float128;

void check_t_index(const RecordSet& set, std::size_t t_index) {
  if (t_index >= set.params.sample_times.size()) {
    throw InvalidArgument("sample time index " + std::to_string(t_index) + " out of range");
  }
}

void check_batchable(const RecordSet& set) {
  if (set.records.size() < static_cast<std::size_t>(kBatchCount)) {
    throw PreconditionError("estimator needs at least " + std::to_string(kBatchCount) + " records, got " +
                            std::to_string(set.records.size()));
  }
}

void check_order(int k) {
  if (k != 1 && k != 2) throw InvalidArgument("unsupported derivative order " + std::to_string(k) + " (only 1 and 2)");
}

void check_counts(const RecordSet& set) {
  for (const auto& r : set.records) {
    if (r.N_init < 0) throw PreconditionError("record lacks N_init");
  }
}

Quad score_weight(int k, std::int64_t N, Quad n, Quad V) {
  const Quad w1 = static_cast<Quad>(N) / n - V;
  if (k == 1) return w1;
  return w1 * w1 - static_cast<Quad>(N) / (n * n);
}

EstimateWithError labelled(const RecordSet& set, const Observable& g, std::size_t t_index, Method method, int k) {
  EstimateWithError e;
  e.method = method;
  e.k = k;
  e.observable = g.name();
  e.t = set.params.sample_times[t_index];
  e.n_samples = static_cast<std::int64_t>(set.records.size());
  return e;
}

// Standard error of a statistic that is linear-fractional in batch sums:
// evaluate it per batch and take the spread of the batch values.
template <class F>
double batch_formula_se(std::size_t n, F&& per_batch) {
  std::vector<double> vals(kBatchCount);
  for (int b = 0; b < kBatchCount; ++b) {
    const std::size_t lo = n * static_cast<std::size_t>(b) / kBatchCount;
    const std::size_t hi = n * static_cast<std::size_t>(b + 1) / kBatchCount;
    vals[static_cast<std::size_t>(b)] = per_batch(lo, hi);
  }
  const double mean = compensated_mean(vals);
  CompensatedSum ss;
  for (const double v : vals) ss.add((v - mean) * (v - mean));
  return std::sqrt(ss.value() / (kBatchCount - 1) / kBatchCount);
}

}  // namespace

std::string to_string(Model m) { return m == Model::exact ? "exact" : "bl"; }

Model model_from_string(const std::string& s) {
  if (s == "exact") return Model::exact;
  if (s == "bl") return Model::bl;
  throw ConfigError("unknown model '" + s + "' (expected exact or bl)");
}

double Observable::operator()(const Vec3& d) const noexcept {
  switch (tag) {
    case Tag::delta_sq:
      return norm2(d);
    case Tag::delta_4: {
      const double r2 = norm2(d);
      return r2 * r2;
    }
    case Tag::cos_q:
      return std::cos(q * d.x);
    case Tag::bin_indicator:
      return (d.x >= lo.x && d.x < hi.x && d.y >= lo.y && d.y < hi.y && d.z >= lo.z && d.z < hi.z) ? 1.0 : 0.0;
  }
  return 0.0;
}

std::string Observable::name() const {
  std::ostringstream os;
  os.precision(6);
  switch (tag) {
    case Tag::delta_sq:
      return "delta_sq";
    case Tag::delta_4:
      return "delta_4";
    case Tag::cos_q:
      os << "cos_q(q=" << q << ")";
      return os.str();
    case Tag::bin_indicator:
      os << "bin_indicator[" << lo.x << "," << lo.y << "," << lo.z << ";" << hi.x << "," << hi.y << "," << hi.z
         << ")";
      return os.str();
  }
  return "?";
}

std::string EstimateWithError::method_name() const {
  switch (method) {
    case Method::plain:
      return "plain";
    case Method::score:
      return "score_" + std::to_string(k);
    case Method::cumulant:
      return "cumulant_" + std::to_string(k);
    case Method::finite_difference:
      return "finite_difference_" + std::to_string(k);
    case Method::reweighted:
      return "reweighted";
  }
  return "?";
}

EstimateWithError plain_estimate(const RecordSet& set, const Observable& g, std::size_t t_index) {
  check_t_index(set, t_index);
  check_batchable(set);
  std::vector<double> x(set.records.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = g(set.records[i].displacements[t_index]);
  const MeanWithError m = batch_means(x);
  EstimateWithError e = labelled(set, g, t_index, Method::plain, 0);
  e.value = m.mean;
  e.std_error = m.std_error;
  return e;
}

Histogram estimate_v0_histogram(const RecordSet& set, std::size_t t_index, const std::array<Axis, 3>& grid) {
  check_t_index(set, t_index);
  if (set.records.size() < 1000) throw PreconditionError("histogram needs at least 1000 records");
  for (const Axis& a : grid) {
    if (a.bins < 1 || !(a.hi > a.lo)) throw InvalidArgument("histogram axis needs bins >= 1 and hi > lo");
  }
  const double half_box = 0.5 * set.params.L;
  Histogram h;
  h.grid = grid;
  const std::size_t nbins = static_cast<std::size_t>(grid[0].bins) * grid[1].bins * grid[2].bins;
  std::vector<std::int64_t> counts(nbins, 0);
  std::int64_t outside = 0;
  for (const auto& r : set.records) {
    const Vec3& d = r.displacements[t_index];
    std::array<int, 3> idx{};
    bool inside = true;
    for (int a = 0; a < 3; ++a) {
      if (std::abs(d[a]) >= half_box) {
        std::ostringstream msg;
        msg << "displacement support reaches L/2 = " << half_box << " (|Delta| component " << std::abs(d[a])
            << "); the periodic box aliases the distribution";
        throw PreconditionError(msg.str());
      }
      const Axis& ax = grid[a];
      const double f = std::floor((d[a] - ax.lo) / (ax.hi - ax.lo) * ax.bins);
      if (!(f >= 0.0 && f < ax.bins)) inside = false;
      idx[a] = inside ? static_cast<int>(f) : 0;
    }
    if (inside) {
      ++counts[h.index(idx[0], idx[1], idx[2])];
    } else {
      ++outside;
    }
  }
  const double n = static_cast<double>(set.records.size());
  h.n_samples = static_cast<std::int64_t>(set.records.size());
  h.mass.resize(nbins);
  h.density.resize(nbins);
  h.density_se.resize(nbins);
  double vol = 1.0;
  for (const Axis& a : grid) vol *= (a.hi - a.lo) / a.bins;
  for (std::size_t b = 0; b < nbins; ++b) {
    const double p = static_cast<double>(counts[b]) / n;
    h.mass[b] = p;
    h.density[b] = p / vol;
    h.density_se[b] = std::sqrt(p * (1.0 - p) / n) / vol;
  }
  h.out_of_range_mass = static_cast<double>(outside) / n;
  return h;
}

double charlier_weight(int k, std::int64_t N, double n, double V_eff) {
  check_order(k);
  if (N < 0) throw InvalidArgument("charlier_weight: negative count");
  if (!(n > 0.0) || !(V_eff > 0.0)) throw InvalidArgument("charlier_weight: need n > 0 and V_eff > 0");
  return static_cast<double>(score_weight(k, N, n, V_eff));
}

EstimateWithError score_derivative(const RecordSet& set, const Observable& g, std::size_t t_index, int k) {
  check_order(k);
  check_t_index(set, t_index);
  check_batchable(set);
  check_counts(set);
  const Quad n = set.params.n;
  const Quad V = derive_scales(set.params).V_eff;
  std::vector<double> x(set.records.size());
  Quad sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& r = set.records[i];
    const Quad term = static_cast<Quad>(g(r.displacements[t_index])) * score_weight(k, r.N_init, n, V);
    sum += term;
    x[i] = static_cast<double>(term);
  }
  EstimateWithError e = labelled(set, g, t_index, Method::score, k);
  e.value = static_cast<double>(sum / static_cast<Quad>(x.size()));
  e.std_error = batch_means(x).std_error;
  return e;
}

EstimateWithError integrated_cumulant(const RecordSet& set, const Observable& g, std::size_t t_index, int k) {
  check_order(k);
  check_t_index(set, t_index);
  check_batchable(set);
  check_counts(set);
  const Quad n = set.params.n;
  const Quad V = derive_scales(set.params).V_eff;
  const std::size_t count = set.records.size();
  std::vector<double> gv(count);
  for (std::size_t i = 0; i < count; ++i) gv[i] = g(set.records[i].displacements[t_index]);

  // n^-1 (E[N g] - n V E[g]) and n^-2 E[N(N-1) g] - 2 V n^-1 E[N g] + V^2 E[g].
  auto factorial_form = [&](std::size_t lo, std::size_t hi) -> Quad {
    Quad s_g = 0, s_ng = 0, s_nng = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      const Quad N = static_cast<Quad>(set.records[i].N_init);
      const Quad gi = gv[i];
      s_g += gi;
      s_ng += N * gi;
      s_nng += N * (N - 1) * gi;
    }
    const Quad m = static_cast<Quad>(hi - lo);
    if (k == 1) return (s_ng / n - V * s_g) / m;
    return (s_nng / (n * n) - 2 * V * s_ng / n + V * V * s_g) / m;
  };

  EstimateWithError e = labelled(set, g, t_index, Method::cumulant, k);
  e.value = static_cast<double>(factorial_form(0, count));
  e.std_error = batch_formula_se(count, [&](std::size_t lo, std::size_t hi) {
    return static_cast<double>(factorial_form(lo, hi));
  });
  return e;
}

Stencil finite_difference_stencil(std::span<const double> x, int k) {
  check_order(k);
  const std::size_t m = x.size();
  if (m < static_cast<std::size_t>(k + 1)) {
    throw PreconditionError("finite difference of order " + std::to_string(k) + " needs at least " +
                            std::to_string(k + 1) + " densities");
  }
  const double spacing = (x[m - 1] - x[0]) / static_cast<double>(m - 1);
  if (!(spacing > 0.0)) throw InvalidArgument("density grid must be strictly increasing");
  for (std::size_t i = 1; i < m; ++i) {
    if (std::abs((x[i] - x[i - 1]) - spacing) > 1e-9 * spacing) throw InvalidArgument("non-uniform density grid");
  }
  Stencil s;
  s.coefficients.assign(m, 0.0);
  const double width = x[m - 1] - x[0];
  if (k == 1) {
    s.coefficients.front() = -1.0 / width;
    s.coefficients.back() = 1.0 / width;
  } else {
    if (m % 2 == 0) throw PreconditionError("second difference needs an odd grid with a center density");
    const double h = 0.5 * width;
    s.coefficients.front() = 1.0 / (h * h);
    s.coefficients[m / 2] = -2.0 / (h * h);
    s.coefficients.back() = 1.0 / (h * h);
  }
  return s;
}

namespace {

void sort_by_density(std::vector<std::pair<double, EstimateWithError>>& est) {
  std::sort(est.begin(), est.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
}

std::pair<double, double> apply_stencil(const std::vector<double>& c,
                                        const std::vector<std::pair<double, EstimateWithError>>& est) {
  double v = 0.0, var = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    v += c[i] * est[i].second.value;
    var += c[i] * c[i] * est[i].second.std_error * est[i].second.std_error;
  }
  return {v, std::sqrt(var)};
}

std::vector<double> densities_of(const std::vector<std::pair<double, EstimateWithError>>& est) {
  std::vector<double> x;
  for (const auto& e : est) x.push_back(e.first);
  return x;
}

}  // namespace

EstimateWithError finite_difference_derivative(std::vector<std::pair<double, EstimateWithError>> estimates, int k) {
  if (estimates.empty()) throw PreconditionError("finite difference needs estimates");
  sort_by_density(estimates);
  const Stencil s = finite_difference_stencil(densities_of(estimates), k);
  const auto [v, se] = apply_stencil(s.coefficients, estimates);
  EstimateWithError e;
  e.method = Method::finite_difference;
  e.k = k;
  e.value = v;
  e.std_error = se;
  e.observable = estimates.front().second.observable;
  e.t = estimates.front().second.t;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (s.coefficients[i] != 0.0) e.n_samples += estimates[i].second.n_samples;
  }
  return e;
}

BiasCheck delta_halving_check(std::vector<std::pair<double, EstimateWithError>> estimates, int k) {
  sort_by_density(estimates);
  const std::size_t m = estimates.size();
  if (m < 5 || m % 2 == 0 || ((m - 1) / 2) % 2 != 0) {
    throw PreconditionError("delta-halving check needs an odd uniform grid whose half-width is an even number of steps");
  }
  const std::vector<double> x = densities_of(estimates);
  finite_difference_stencil(x, k);  // uniformity check
  const std::size_t mid = m / 2;
  const std::size_t half = (m - 1) / 4;
  const std::vector<double> outer{x.front(), x[mid], x.back()};
  const std::vector<double> inner{x[mid - half], x[mid], x[mid + half]};
  const Stencil so = finite_difference_stencil(outer, k);
  const Stencil si = finite_difference_stencil(inner, k);
  std::vector<double> coarse(m, 0.0), fine(m, 0.0), bias(m, 0.0);
  coarse[0] = so.coefficients[0];
  coarse[mid] += so.coefficients[1];
  coarse[m - 1] = so.coefficients[2];
  fine[mid - half] = si.coefficients[0];
  fine[mid] += si.coefficients[1];
  fine[mid + half] = si.coefficients[2];
  // Central differences err by O(delta^2): bias(delta) = 4/3 (D(delta) - D(delta/2)).
  for (std::size_t i = 0; i < m; ++i) bias[i] = 4.0 / 3.0 * (coarse[i] - fine[i]);
  BiasCheck out;
  std::tie(out.coarse, out.coarse_se) = apply_stencil(coarse, estimates);
  out.fine = apply_stencil(fine, estimates).first;
  std::tie(out.bias, out.bias_se) = apply_stencil(bias, estimates);
  out.passed = std::abs(out.bias) <= out.coarse_se + 3.0 * out.bias_se;
  return out;
}

double tilt_weight(double u, std::int64_t N, double n, double V_eff) {
  return std::exp(static_cast<double>(N) * std::log1p(u) - u * n * V_eff);
}

EstimateWithError reweight_to_density(const RecordSet& set, double u, const Observable& g, std::size_t t_index) {
  if (!(u > -1.0) || !(std::abs(u) <= kMaxTilt)) {
    std::ostringstream msg;
    msg << "tilt u = " << u << " outside the allowed range -1 < u, |u| <= " << kMaxTilt;
    throw InvalidArgument(msg.str());
  }
  check_t_index(set, t_index);
  check_batchable(set);
  check_counts(set);
  const double V = derive_scales(set.params).V_eff;
  std::vector<double> x(set.records.size());
  CompensatedSum sw, sw2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& r = set.records[i];
    const double w = tilt_weight(u, r.N_init, set.params.n, V);
    sw.add(w);
    sw2.add(w * w);
    x[i] = w * g(r.displacements[t_index]);
  }
  const MeanWithError m = batch_means(x);
  EstimateWithError e = labelled(set, g, t_index, Method::reweighted, 0);
  e.value = m.mean;
  e.std_error = m.std_error;
  e.ess = sw.value() * sw.value() / sw2.value();
  return e;
}

namespace {

std::vector<Quad> shell_volumes_quad(const GasParams& p, std::span<const double> edges) {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i == 0 && !(edges[0] > p.r0)) throw InvalidArgument("first shell edge must exceed r0");
    if (i > 0 && !(edges[i] > edges[i - 1])) throw InvalidArgument("shell edges must be strictly increasing");
  }
  if (!edges.empty() && edges.back() > 0.5 * p.L) throw InvalidArgument("shell edges must not exceed L/2");
  const Quad four_thirds_pi = Quad(4) / 3 * static_cast<Quad>(std::numbers::pi);
  std::vector<Quad> vol;
  Quad inner = p.r0, used = 0;
  for (const double e : edges) {
    const Quad outer = e;
    vol.push_back(four_thirds_pi * (outer * outer * outer - inner * inner * inner));
    used += vol.back();
    inner = outer;
  }
  vol.push_back(static_cast<Quad>(derive_scales(p).V_eff) - used);
  return vol;
}

}  // namespace

std::vector<double> shell_volumes(const GasParams& params, std::span<const double> edges) {
  std::vector<double> out;
  for (const Quad v : shell_volumes_quad(params, edges)) out.push_back(static_cast<double>(v));
  return out;
}

double ProfileEstimate::fraction_within(double radius) const {
  double inside = 0.0, total = 0.0;
  for (std::size_t s = 0; s < per_shell.size(); ++s) {
    const double a = std::abs(per_shell[s].value);
    total += a;
    if (s < shell_edges.size() && shell_edges[s] <= radius) inside += a;
  }
  return total > 0.0 ? inside / total : 0.0;
}

ProfileEstimate correlation_profile(const RecordSet& set, const Observable& g, std::size_t t_index) {
  check_t_index(set, t_index);
  check_batchable(set);
  check_counts(set);
  for (const auto& r : set.records) {
    if (!r.has_shells()) throw PreconditionError("correlation profile needs shell counts (exact-model records)");
    if (r.shell_counts[t_index].size() != set.shell_edges.size() + 1) {
      throw PreconditionError("record shell layout does not match the shell edges");
    }
  }
  const std::vector<Quad> vol = shell_volumes_quad(set.params, set.shell_edges);
  const Quad n = set.params.n;
  const std::size_t count = set.records.size();
  std::vector<double> gv(count);
  Quad s_g = 0;
  for (std::size_t i = 0; i < count; ++i) {
    gv[i] = g(set.records[i].displacements[t_index]);
    s_g += gv[i];
  }

  ProfileEstimate out;
  out.shell_edges = set.shell_edges;
  Quad total = 0;
  std::vector<double> x(count), x_total(count, 0.0);
  for (std::size_t s = 0; s < vol.size(); ++s) {
    Quad s_ng = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const Quad N_s = static_cast<Quad>(set.records[i].shell_counts[t_index][s]);
      s_ng += N_s * gv[i];
      x[i] = static_cast<double>((N_s / n - vol[s]) * gv[i]);
      x_total[i] += x[i];
    }
    const Quad value = (s_ng / n - vol[s] * s_g) / static_cast<Quad>(count);
    total += value;
    EstimateWithError e = labelled(set, g, t_index, Method::cumulant, 1);
    e.value = static_cast<double>(value);
    e.std_error = batch_means(x).std_error;
    out.per_shell.push_back(e);
  }
  out.total = labelled(set, g, t_index, Method::cumulant, 1);
  out.total.value = static_cast<double>(total);
  out.total.std_error = batch_means(x_total).std_error;
  return out;
}

DisplacementMoments displacement_moments(const RecordSet& set, std::size_t t_index, std::uint64_t bootstrap_seed) {
  check_t_index(set, t_index);
  if (set.records.size() < 1000) throw PreconditionError("displacement moments need at least 1000 records");
  const std::size_t n = set.records.size();
  std::vector<Vec3> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = set.records[i].displacements[t_index];

  // mean(3), covariance(9), excess kurtosis of Delta_x.
  auto statistic = [&](auto&& index_of, std::size_t m) {
    std::array<CompensatedSum, 3> s1;
    for (std::size_t j = 0; j < m; ++j) {
      const Vec3& v = d[index_of(j)];
      for (int a = 0; a < 3; ++a) s1[a].add(v[a]);
    }
    std::array<double, 3> mu{};
    for (int a = 0; a < 3; ++a) mu[a] = s1[a].value() / static_cast<double>(m);
    std::array<std::array<CompensatedSum, 3>, 3> s2;
    CompensatedSum s4;
    for (std::size_t j = 0; j < m; ++j) {
      const Vec3& v = d[index_of(j)];
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) s2[a][b].add((v[a] - mu[a]) * (v[b] - mu[b]));
      }
      const double c = v.x - mu[0];
      s4.add(c * c * c * c);
    }
    std::vector<double> out;
    for (int a = 0; a < 3; ++a) out.push_back(mu[a]);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) out.push_back(s2[a][b].value() / static_cast<double>(m));
    }
    const double m2 = s2[0][0].value() / static_cast<double>(m);
    const double m4 = s4.value() / static_cast<double>(m);
    out.push_back(m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0);
    return out;
  };

  const std::vector<double> full = statistic([](std::size_t j) { return j; }, n);
  const std::vector<double> se =
      bootstrap_std_errors(n, kBootstrapResamples, bootstrap_seed, [&](std::span<const std::size_t> idx) {
        return statistic([idx](std::size_t j) { return idx[j]; }, idx.size());
      });
  DisplacementMoments out;
  out.n_samples = static_cast<std::int64_t>(n);
  for (int a = 0; a < 3; ++a) {
    out.mean[a] = full[a];
    out.mean_se[a] = se[a];
    for (int b = 0; b < 3; ++b) {
      out.cov[a][b] = full[3 + 3 * a + b];
      out.cov_se[a][b] = se[3 + 3 * a + b];
    }
  }
  out.excess_kurtosis_x = full[12];
  out.excess_kurtosis_x_se = se[12];
  return out;
}

}  // namespace tmgas
