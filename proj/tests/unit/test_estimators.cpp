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

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include <boost/math/special_functions/gamma.hpp>

#include "ensemble.hpp"
#include "estimators.hpp"
#include "stats.hpp"

using namespace tmgas;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense small box: ~40 atoms, about ten collisions per trajectory.
GasParams small_box() {
  GasParams p;
  p.n = 0.08;
  p.L = 8.0;
  const double tau = derive_scales(p).tau;
  p.sample_times = {5 * tau, 10 * tau};
  return p;
}

const RecordSet& exact_small() {
  static const RecordSet set = run_ensemble(small_box(), Model::exact, 20000, {1.5, 2.0, 3.0, 4.0}, 1, 77).set;
  return set;
}

const RecordSet& bl_default() {
  static const RecordSet set = [] {
    GasParams p;
    const double tau = derive_scales(p).tau;
    p.sample_times = {5 * tau, 10 * tau};
    return run_ensemble(p, Model::bl, 20000, {}, 1, 78).set;
  }();
  return set;
}

RecordSet free_gas(std::int64_t n, std::vector<double> times) {
  GasParams p;
  p.r0 = 0.0;
  p.sample_times = std::move(times);
  return run_ensemble(p, Model::exact, n, {}, 1, 79).set;
}

double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

std::vector<Observable> observables() {
  return {Observable::delta_sq(), Observable::delta_4(), Observable::cos_q(0.2),
          Observable::bin({-1.0, -kInf, -kInf}, {3.0, kInf, kInf})};
}

// Poisson expectation of f(N) by direct summation over the mass function.
template <class F>
long double poisson_sum(double lambda, F&& f) {
  const double width = 40.0 * std::sqrt(lambda) + 40.0;
  const auto lo = static_cast<std::int64_t>(std::max(0.0, lambda - width));
  const auto hi = static_cast<std::int64_t>(lambda + width);
  long double s = 0.0L;
  for (std::int64_t k = lo; k <= hi; ++k) {
    const long double logp = k * std::log((long double)lambda) - lambda - std::lgamma((long double)k + 1.0L);
    s += std::exp(logp) * f(k);
  }
  return s;
}

}  // namespace

TEST_CASE("Charlier weights: orthogonality by direct summation") {
  for (const auto& [n, V] : {std::pair{0.08, 507.81}, std::pair{0.02, 215995.81}}) {
    const double lambda = n * V;
    auto w = [&](int k) { return [=](std::int64_t N) { return (long double)charlier_weight(k, N, n, V); }; };
    const long double scale1 = V / n, scale2 = 2.0L * V * V / (n * n);
    CHECK(std::abs((double)(poisson_sum(lambda, w(1)) / std::sqrt(scale1))) < 1e-9);
    CHECK(std::abs((double)(poisson_sum(lambda, w(2)) / std::sqrt(scale2))) < 1e-9);
    CHECK((double)(poisson_sum(lambda, [&](std::int64_t N) { return w(1)(N) * w(1)(N); }) / scale1) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK((double)(poisson_sum(lambda, [&](std::int64_t N) { return w(2)(N) * w(2)(N); }) / scale2) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs((double)(poisson_sum(lambda, [&](std::int64_t N) { return w(1)(N) * w(2)(N); }) /
                            std::sqrt(scale1 * scale2))) < 1e-9);
  }
  CHECK_THROWS_AS(charlier_weight(3, 10, 0.1, 100.0), InvalidArgument);
}

TEST_CASE("Charlier weights: Monte Carlo moments over Poisson draws") {
  const double n = 0.02, V = 215995.81;
  Xoshiro256pp rng = make_stream(5, 0, 0);
  std::poisson_distribution<std::int64_t> pois(n * V);
  const int draws = 1000000;
  std::vector<double> w1(draws), w2(draws), w11(draws), w12(draws);
  for (int i = 0; i < draws; ++i) {
    const std::int64_t N = pois(rng);
    w1[i] = charlier_weight(1, N, n, V);
    w2[i] = charlier_weight(2, N, n, V);
    w11[i] = w1[i] * w1[i];
    w12[i] = w1[i] * w2[i];
  }
  for (const auto* x : {&w1, &w2, &w12}) {
    const MeanWithError m = batch_means(*x);
    CHECK(std::abs(m.mean) <= 4 * m.std_error);
  }
  const MeanWithError m11 = batch_means(w11);
  CHECK(std::abs(m11.mean - V / n) <= 4 * m11.std_error);
}

TEST_CASE("score and integrated cumulant agree to round-off") {
  const RecordSet& set = exact_small();
  for (const auto& g : observables()) {
    for (std::size_t t = 0; t < 2; ++t) {
      for (int k = 1; k <= 2; ++k) {
        const EstimateWithError s = score_derivative(set, g, t, k);
        const EstimateWithError c = integrated_cumulant(set, g, t, k);
        CHECK(rel_diff(s.value, c.value) <= 1e-12);
        CHECK(s.method_name() == "score_" + std::to_string(k));
        CHECK(c.method_name() == "cumulant_" + std::to_string(k));
        CHECK(c.std_error > 0.0);
      }
    }
  }
}

TEST_CASE("normalization derivative") {
  const RecordSet& set = exact_small();
  const Observable all = Observable::bin({-kInf, -kInf, -kInf}, {kInf, kInf, kInf});
  const Observable left = Observable::bin({-kInf, -kInf, -kInf}, {0.0, kInf, kInf});
  const Observable right = Observable::bin({0.0, -kInf, -kInf}, {kInf, kInf, kInf});
  for (int k = 1; k <= 2; ++k) {
    const EstimateWithError one = score_derivative(set, all, 1, k);
    CHECK(std::abs(one.value) <= 4 * one.std_error);
    const double parts = score_derivative(set, left, 1, k).value + score_derivative(set, right, 1, k).value;
    CHECK(std::abs(parts - one.value) <= 1e-12 * std::abs(one.std_error));
    const double cparts = integrated_cumulant(set, left, 1, k).value + integrated_cumulant(set, right, 1, k).value;
    CHECK(std::abs(cparts - integrated_cumulant(set, all, 1, k).value) <= 1e-12 * std::abs(one.std_error));
  }
}

TEST_CASE("bl counts are decoupled from the path") {
  const RecordSet& set = bl_default();
  for (const auto& g : {Observable::delta_sq(), Observable::cos_q(1.0 / 15.9155)}) {
    for (std::size_t t = 0; t < 2; ++t) {
      const EstimateWithError s = score_derivative(set, g, t, 1);
      CHECK(std::abs(s.value) <= 3 * s.std_error);
      const EstimateWithError c = integrated_cumulant(set, g, t, 1);
      CHECK(std::abs(c.value) <= 3 * c.std_error);
    }
  }
}

TEST_CASE("finite differences on exact polynomials") {
  auto make = [](std::vector<double> xs, auto f) {
    std::vector<std::pair<double, EstimateWithError>> out;
    for (double x : xs) {
      EstimateWithError e;
      e.value = f(x);
      e.std_error = 0.01;
      e.n_samples = 100;
      out.emplace_back(x, e);
    }
    return out;
  };
  const std::vector<double> grid{0.018, 0.02, 0.022};
  const auto line = make(grid, [](double n) { return 3.0 + 50.0 * n; });
  CHECK(std::abs(finite_difference_derivative(line, 2).value) <= 1e-6);
  CHECK(finite_difference_derivative(line, 1).value == doctest::Approx(50.0).epsilon(1e-12));
  const auto para = make(grid, [](double n) { return 7.0 * n * n; });
  CHECK(finite_difference_derivative(para, 2).value == doctest::Approx(14.0).epsilon(1e-9));
  const EstimateWithError fd = finite_difference_derivative(para, 1);
  CHECK(fd.std_error == doctest::Approx(std::sqrt(2.0) * 0.01 / 0.004));
  CHECK(fd.method_name() == "finite_difference_1");
  CHECK_THROWS_AS(finite_difference_derivative(make({0.018, 0.02, 0.0225}, [](double) { return 1.0; }), 1),
                  InvalidArgument);
  CHECK_THROWS_AS(finite_difference_derivative(make({0.018, 0.02}, [](double) { return 1.0; }), 2), PreconditionError);

  // Halving check: quadratics have no central-difference bias, cubics a known one.
  const std::vector<double> five{0.018, 0.019, 0.02, 0.021, 0.022};
  const BiasCheck q = delta_halving_check(make(five, [](double n) { return 7.0 * n * n; }), 1);
  CHECK(std::abs(q.bias) <= 1e-9);
  CHECK(q.passed);
  const BiasCheck c = delta_halving_check(make(five, [](double n) { return 1e6 * n * n * n; }), 1);
  // D(delta) = 3 n^2 + f''' delta^2 / 6 with delta = 0.002.
  CHECK(c.bias == doctest::Approx(1e6 * 0.002 * 0.002).epsilon(1e-6));
  CHECK(c.coarse == doctest::Approx(1e6 * (3 * 0.0004 + 0.002 * 0.002)).epsilon(1e-9));
}

TEST_CASE("reweighting") {
  const RecordSet& set = exact_small();
  const Observable g = Observable::delta_sq();
  const EstimateWithError plain = plain_estimate(set, g, 1);
  const EstimateWithError same = reweight_to_density(set, 0.0, g, 1);
  CHECK(same.value == plain.value);
  CHECK(same.std_error == plain.std_error);
  CHECK(*same.ess == doctest::Approx(static_cast<double>(set.records.size())).epsilon(1e-12));
  const Observable one = Observable::bin({-kInf, -kInf, -kInf}, {kInf, kInf, kInf});
  for (const double u : {-0.2, 0.2}) {
    const EstimateWithError w = reweight_to_density(set, u, one, 0);
    CHECK(std::abs(w.value - 1.0) <= 3 * w.std_error);
    CHECK(*w.ess < static_cast<double>(set.records.size()));
    CHECK(w.method_name() == "reweighted");
  }
  CHECK_THROWS_AS(reweight_to_density(set, -0.9, g, 0), InvalidArgument);
  CHECK_THROWS_AS(reweight_to_density(set, 0.31, g, 0), InvalidArgument);

  // Tilting by u and then by -u/(1+u) from the tilted density is the identity.
  const double V = derive_scales(set.params).V_eff, n = set.params.n;
  for (const double u : {-0.3, -0.1, 0.25}) {
    const double back = -u / (1.0 + u);
    for (std::int64_t N = 0; N < 120; N += 7) {
      CHECK(tilt_weight(u, N, n, V) * tilt_weight(back, N, n * (1.0 + u), V) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("displacement histogram") {
  const double t = 3.0;
  const RecordSet set = free_gas(20000, {t});
  const std::array<Axis, 3> grid{Axis{-6, 6, 24}, Axis{-6, 6, 1}, Axis{-6, 6, 1}};
  const Histogram h = estimate_v0_histogram(set, 0, grid);
  double total = h.out_of_range_mass;
  for (double m : h.mass) total += m;
  CHECK(std::abs(total - 1.0) <= 1e-12);

  // Delta_x marginal against N(0, T t^2 / M), chi-square over the bins.
  const double sigma = t * std::sqrt(1.0 / 5.0);
  auto cdf = [&](double x) { return 0.5 * std::erfc(-x / (sigma * std::sqrt(2.0))); };
  const double inside = cdf(6) - cdf(-6);
  double chi2 = 0.0;
  for (int b = 0; b < 24; ++b) {
    const double lo = -6 + 0.5 * b, expected = (cdf(lo + 0.5) - cdf(lo)) / inside;
    const double observed = h.mass[h.index(b, 0, 0)] / (1.0 - h.out_of_range_mass);
    chi2 += 20000.0 * (observed - expected) * (observed - expected) / expected;
  }
  CHECK(boost::math::gamma_q(0.5 * 23, 0.5 * chi2) > 0.01);
  std::vector<double> dx;
  for (const auto& r : set.records) dx.push_back(r.displacements[0].x);
  CHECK(ks_test_normal(dx, 0.0, sigma).p_value > 0.01);

  // All records identical: one occupied bin.
  RecordSet delta = set;
  for (auto& r : delta.records) r.displacements[0] = {0.1, 0.2, 0.3};
  const Histogram d = estimate_v0_histogram(delta, 0, {Axis{-1, 1, 4}, Axis{-1, 1, 4}, Axis{-1, 1, 4}});
  int occupied = 0;
  for (double m : d.mass) occupied += m > 0.0;
  CHECK(occupied == 1);
  CHECK(d.mass[d.index(2, 2, 2)] == 1.0);

  const RecordSet far = free_gas(1000, {200.0});
  CHECK_THROWS_AS(estimate_v0_histogram(far, 0, grid), PreconditionError);
  CHECK_THROWS_AS(estimate_v0_histogram(free_gas(999, {1.0}), 0, grid), PreconditionError);
}

TEST_CASE("correlation profile") {
  const RecordSet& set = exact_small();
  for (const auto& g : {Observable::delta_sq(), Observable::cos_q(0.2)}) {
    for (std::size_t t = 0; t < 2; ++t) {
      const ProfileEstimate p = correlation_profile(set, g, t);
      REQUIRE(p.per_shell.size() == 5);
      double sum = 0.0;
      for (const auto& s : p.per_shell) sum += s.value;
      CHECK(rel_diff(sum, p.total.value) <= 1e-12);
      CHECK(rel_diff(p.total.value, integrated_cumulant(set, g, t, 1).value) <= 1e-12);
      CHECK(p.fraction_within(100.0) <= 1.0);
    }
  }
  const Observable one = Observable::bin({-kInf, -kInf, -kInf}, {kInf, kInf, kInf});
  for (const auto& s : correlation_profile(set, one, 1).per_shell) CHECK(std::abs(s.value) <= 4 * s.std_error);
  CHECK_THROWS_AS(correlation_profile(bl_default(), one, 0), PreconditionError);

  const auto vol = shell_volumes(set.params, set.shell_edges);
  double v = 0.0;
  for (double x : vol) v += x;
  CHECK(v == doctest::Approx(derive_scales(set.params).V_eff).epsilon(1e-14));
  CHECK_THROWS_AS(shell_volumes(set.params, std::vector<double>{0.5}), InvalidArgument);
  CHECK_THROWS_AS(shell_volumes(set.params, std::vector<double>{2.0, 5.0}), InvalidArgument);
}

TEST_CASE("displacement moments") {
  const RecordSet set = free_gas(5000, {2.0});
  const DisplacementMoments m = displacement_moments(set, 0, 1);
  CHECK(std::abs(m.excess_kurtosis_x) <= 4 * m.excess_kurtosis_x_se);
  for (int a = 0; a < 3; ++a) {
    CHECK(std::abs(m.mean[a]) <= 4 * m.mean_se[a]);
    CHECK(std::abs(m.cov[a][a] - 4.0 / 5.0) <= 4 * m.cov_se[a][a]);
  }
  CHECK(m.n_samples == 5000);
  const DisplacementMoments exact = displacement_moments(exact_small(), 1, 1);
  for (int a = 0; a < 3; ++a) CHECK(std::abs(exact.mean[a]) <= 4 * exact.mean_se[a]);
}
