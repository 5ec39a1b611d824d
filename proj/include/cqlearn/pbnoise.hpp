// Copyright 2026 The cqlearn developers
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

#include <span>
#include <vector>

#include "cqlearn/errors.hpp"

namespace cqlearn::pbnoise {

/// Sum of independent, generally non-identical Bernoulli(p_i) variables,
/// with its exact probability mass function over {0, ..., n}.
///
/// The pmf is built by the O(n^2) convolution recurrence; results are
/// deterministic bit for bit, which FFT-based alternatives would not give.
struct PBDistribution {
  std::vector<double> probs;  // p_i, each in [0, 1]
  std::vector<double> pmf;    // n + 1 entries, sums to 1 within 1e-12
  double mean = 0.0;          // sum p_i
  double variance = 0.0;      // sum p_i (1 - p_i)

  size_t n() const { return probs.size(); }
  double stddev() const;
  /// Exact Pr[T > t] (strict), compensated summation.
  double tail_above(double t) const;
};

PBDistribution pb_pmf(std::span<const double> probs);

/// Exponential random variable with rate lambda (mean 1/lambda).
struct ExponentialNoise {
  double lambda;
  explicit ExponentialNoise(double lambda_in) : lambda(lambda_in) {
    if (!(lambda > 0)) throw contract_error("ExponentialNoise: lambda must be positive");
  }
  /// Pr[X > s]; equals 1 for s <= 0.
  double survival(double s) const;
};

/// Pr(T + X > theta_n), the acceptance probability of the smoothed
/// threshold event.
double smoothed_tail(const PBDistribution& pb, const ExponentialNoise& noise, double theta_n);

/// Law of T conditioned on T + X <= theta_n. Throws degenerate_error when
/// the rejection probability underflows.
std::vector<double> conditional_pmf_reject(const PBDistribution& pb, const ExponentialNoise& noise,
                                           double theta_n);

/// BC(P, Q) = sum_x sqrt(P(x) Q(x)), in [0, 1].
double bhattacharyya(std::span<const double> p, std::span<const double> q);

/// d_chi2(P, Q) = sum_x Q(x) (1 - P(x)/Q(x))^2. Requires P(x) = 0 wherever
/// Q(x) = 0.
double chi_squared(std::span<const double> p, std::span<const double> q);

/// Multiplicative tail bounds exp(-eps^2 mean / 3) (upper deviation) and
/// exp(-eps^2 mean / 2) (lower deviation).
struct ChernoffBounds {
  double upper;
  double lower;
};
ChernoffBounds chernoff_bounds(double mean, double eps);

/// exp(-n lambda (theta - pbar - e lambda / 2)), the closed-form ceiling on
/// Pr(T + X > theta n).
double acceptance_upper_bound(size_t n, double lambda, double theta, double mean_prob);

/// Both sides of the chi-square gentleness inequality
///   d_chi2((T | reject), T) <= C (Pr[B] stddev[T] lambda)^2,
/// evaluated exactly, with the calibration constant supplied by the caller.
struct GentlenessReport {
  double p_accept = 0.0;   // Pr[B]
  double chi2 = 0.0;       // left-hand side
  double bound_rhs = 0.0;  // (Pr[B] stddev lambda)^2, before the constant
  double ratio = 0.0;      // chi2 / bound_rhs (0 when both vanish)
  bool ok = false;         // chi2 <= c_cal * bound_rhs
};
GentlenessReport gentleness_check(const PBDistribution& pb, const ExponentialNoise& noise,
                                  double theta_n, double c_cal = 10.0);

}  // namespace cqlearn::pbnoise
