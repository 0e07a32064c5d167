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

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace tmgas {

/// Neumaier-compensated running sum; order-dependent by construction, so
/// callers always feed values in trajectory-index order.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_{0.0};
  double comp_{0.0};
};

double compensated_mean(std::span<const double> values);

inline constexpr int kBatchCount = 20;

struct MeanWithError {
  double mean{0.0};
  double std_error{0.0};
  std::int64_t n{0};
};

/// Mean of `values` with a batch-means standard error over `batches`
/// contiguous batches (sizes differ by at most one). Requires
/// values.size() >= batches.
MeanWithError batch_means(std::span<const double> values, int batches = kBatchCount);

/// Covariance of the two sample means of paired values, estimated from
/// their batch means.
double batch_mean_covariance(std::span<const double> x, std::span<const double> y, int batches = kBatchCount);

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

struct KsResult {
  double statistic{0.0};
  double p_value{0.0};
};

/// One-sample KS test of `samples` against N(mean, sigma^2), with Stephens'
/// finite-n correction of the asymptotic p-value.
KsResult ks_test_normal(std::vector<double> samples, double mean, double sigma);

/// Bootstrap standard errors of a vector-valued `statistic` evaluated on
/// resampled index sets of size n. Deterministic given `seed`.
std::vector<double> bootstrap_std_errors(
    std::size_t n, int resamples, std::uint64_t seed,
    const std::function<std::vector<double>(std::span<const std::size_t>)>& statistic);

inline constexpr int kBootstrapResamples = 200;

}  // namespace tmgas
