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

#include "stats.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "rng.hpp"

namespace tmgas {

double compensated_mean(std::span<const double> values) {
  CompensatedSum s;
  for (const double v : values) s.add(v);
  return values.empty() ? 0.0 : s.value() / static_cast<double>(values.size());
}

namespace {

std::vector<double> batch_averages(std::span<const double> values, int batches) {
  const std::size_t n = values.size();
  std::vector<double> out(static_cast<std::size_t>(batches));
  for (int b = 0; b < batches; ++b) {
    const std::size_t lo = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(batches);
    const std::size_t hi = n * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(batches);
    out[static_cast<std::size_t>(b)] = compensated_mean(values.subspan(lo, hi - lo));
  }
  return out;
}

}  // namespace

MeanWithError batch_means(std::span<const double> values, int batches) {
  if (batches < 2) throw InvalidArgument("batch_means: need at least two batches");
  if (values.size() < static_cast<std::size_t>(batches)) {
    throw InvalidArgument("batch_means: " + std::to_string(values.size()) + " samples is fewer than " +
                          std::to_string(batches) + " batches");
  }
  MeanWithError out;
  out.n = static_cast<std::int64_t>(values.size());
  out.mean = compensated_mean(values);
  const std::vector<double> avg = batch_averages(values, batches);
  const double center = compensated_mean(avg);
  CompensatedSum ss;
  for (const double a : avg) ss.add((a - center) * (a - center));
  out.std_error = std::sqrt(ss.value() / (batches - 1) / batches);
  return out;
}

double batch_mean_covariance(std::span<const double> x, std::span<const double> y, int batches) {
  if (x.size() != y.size()) throw InvalidArgument("batch_mean_covariance: length mismatch");
  if (x.size() < static_cast<std::size_t>(batches)) throw InvalidArgument("batch_mean_covariance: too few samples");
  const std::vector<double> ax = batch_averages(x, batches);
  const std::vector<double> ay = batch_averages(y, batches);
  const double mx = compensated_mean(ax);
  const double my = compensated_mean(ay);
  CompensatedSum s;
  for (int b = 0; b < batches; ++b) s.add((ax[b] - mx) * (ay[b] - my));
  return s.value() / (batches - 1) / batches;
}

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test_normal(std::vector<double> samples, double mean, double sigma) {
  if (samples.empty()) throw InvalidArgument("ks_test_normal: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-(samples[i] - mean) / (sigma * std::sqrt(2.0)));
    d = std::max({d, cdf - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cdf});
  }
  const double sqrt_n = std::sqrt(n);
  return {d, kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)};
}

std::vector<double> bootstrap_std_errors(
    std::size_t n, int resamples, std::uint64_t seed,
    const std::function<std::vector<double>(std::span<const std::size_t>)>& statistic) {
  if (n == 0 || resamples < 2) throw InvalidArgument("bootstrap_std_errors: empty input or too few resamples");
  std::vector<std::vector<double>> draws;
  draws.reserve(static_cast<std::size_t>(resamples));
  std::vector<std::size_t> idx(n);
  for (int r = 0; r < resamples; ++r) {
    Xoshiro256pp rng = make_stream(seed, 0xB007, static_cast<std::uint64_t>(r));
    for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
    draws.push_back(statistic(idx));
  }
  const std::size_t dim = draws.front().size();
  std::vector<double> se(dim);
  std::vector<double> column(draws.size());
  for (std::size_t k = 0; k < dim; ++k) {
    for (std::size_t r = 0; r < draws.size(); ++r) column[r] = draws[r][k];
    const double mean = compensated_mean(column);
    CompensatedSum ss;
    for (const double s : column) ss.add((s - mean) * (s - mean));
    se[k] = std::sqrt(ss.value() / (resamples - 1));
  }
  return se;
}

}  // namespace tmgas
