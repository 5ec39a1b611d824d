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

#include "cqlearn/pbnoise.hpp"

#include <cmath>
#include <vector>

#include "cqlearn/rng.hpp"
#include "cqlearn/stats.hpp"
#include "doctest.h"

using namespace cqlearn;
using namespace cqlearn::pbnoise;

namespace {

// Independent oracle: pmf by exhaustive enumeration over all 2^n outcomes.
std::vector<double> enumerate_pmf(const std::vector<double>& probs) {
  const size_t n = probs.size();
  std::vector<double> pmf(n + 1, 0.0);
  for (uint64_t mask = 0; mask < (uint64_t{1} << n); ++mask) {
    double w = 1.0;
    int ones = 0;
    for (size_t i = 0; i < n; ++i) {
      if (mask & (uint64_t{1} << i)) {
        w *= probs[i];
        ++ones;
      } else {
        w *= 1.0 - probs[i];
      }
    }
    pmf[ones] += w;
  }
  return pmf;
}

double binom_coeff_pmf(int n, int k, double p) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                  k * std::log(p) + (n - k) * std::log(1 - p));
}

}  // namespace

TEST_CASE("pmf simple cases") {
  auto pb = pb_pmf(std::vector<double>{0.5});
  CHECK(pb.pmf[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pb.pmf[1] == doctest::Approx(0.5).epsilon(1e-14));

  auto det = pb_pmf(std::vector<double>{1.0, 0.0});
  CHECK(det.pmf[0] == 0.0);
  CHECK(det.pmf[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(det.pmf[2] == 0.0);

  auto two = pb_pmf(std::vector<double>{0.3, 0.7});
  CHECK(std::abs(two.pmf[0] - 0.21) < 1e-14);
  CHECK(std::abs(two.pmf[1] - 0.58) < 1e-14);
  CHECK(std::abs(two.pmf[2] - 0.21) < 1e-14);

  CHECK_THROWS_AS(pb_pmf(std::vector<double>{1.2}), contract_error);
}

TEST_CASE("pmf equals enumeration oracle up to n = 16") {
  CounterRng rng(100, 0);
  for (int n = 1; n <= 16; ++n) {
    std::vector<double> probs(n);
    for (auto& p : probs) p = rng.uniform();
    auto pb = pb_pmf(probs);
    auto oracle = enumerate_pmf(probs);
    for (int k = 0; k <= n; ++k) CHECK(std::abs(pb.pmf[k] - oracle[k]) < 1e-12);
  }
}

TEST_CASE("pmf equals binomial for identical probabilities, n <= 200") {
  for (int n : {10, 50, 200}) {
    for (double p : {0.1, 0.5, 0.83}) {
      std::vector<double> probs(n, p);
      auto pb = pb_pmf(probs);
      for (int k = 0; k <= n; ++k) {
        CHECK(std::abs(pb.pmf[k] - binom_coeff_pmf(n, k, p)) < 1e-12);
      }
    }
  }
}

TEST_CASE("pmf invariants: normalization, mean, variance") {
  CounterRng rng(101, 0);
  for (int rep = 0; rep < 100; ++rep) {
    int n = 1 + static_cast<int>(rng.uniform_int(60));
    std::vector<double> probs(n);
    for (auto& p : probs) p = rng.uniform();
    auto pb = pb_pmf(probs);
    KahanSum total, mean, m2;
    for (size_t k = 0; k < pb.pmf.size(); ++k) {
      CHECK(pb.pmf[k] >= 0.0);
      total.add(pb.pmf[k]);
      mean.add(pb.pmf[k] * k);
      m2.add(pb.pmf[k] * k * k);
    }
    CHECK(std::abs(total.value() - 1.0) < 1e-12);
    CHECK(std::abs(mean.value() - pb.mean) < 1e-10);
    CHECK(std::abs(m2.value() - mean.value() * mean.value() - pb.variance) < 1e-10);
  }
}

TEST_CASE("smoothed tail closed forms") {
  auto pb = pb_pmf(std::vector<double>{0.0});
  ExponentialNoise noise(1.0);
  CHECK(smoothed_tail(pb, noise, -0.5) == 1.0);
  CHECK(std::abs(smoothed_tail(pb, noise, 1.0) - std::exp(-1.0)) < 1e-14);
}

TEST_CASE("smoothed tail monotonicity") {
  CounterRng rng(102, 0);
  for (int rep = 0; rep < 200; ++rep) {
    int n = 2 + static_cast<int>(rng.uniform_int(20));
    std::vector<double> probs(n);
    for (auto& p : probs) p = rng.uniform();
    ExponentialNoise noise(0.05 + 0.9 * rng.uniform());
    auto pb = pb_pmf(probs);
    double ta = rng.uniform() * n, tb = ta + rng.uniform() * n;
    CHECK(smoothed_tail(pb, noise, tb) <= smoothed_tail(pb, noise, ta) + 1e-12);

    // raising one p_i raises the tail
    size_t i = rng.uniform_int(n);
    std::vector<double> up = probs;
    up[i] = up[i] + (1.0 - up[i]) * rng.uniform();
    CHECK(smoothed_tail(pb_pmf(up), noise, ta) >= smoothed_tail(pb, noise, ta) - 1e-12);
  }
}

TEST_CASE("conditional pmf under rejection") {
  auto pb = pb_pmf(std::vector<double>{0.0});
  ExponentialNoise noise(1.0);
  auto cond = conditional_pmf_reject(pb, noise, 1.0);
  CHECK(cond[0] == doctest::Approx(1.0).epsilon(1e-14));

  // theta far above the support: conditional equals unconditional
  auto pb2 = pb_pmf(std::vector<double>{0.4, 0.6, 0.2});
  auto cond2 = conditional_pmf_reject(pb2, noise, 1e6);
  for (size_t k = 0; k < pb2.pmf.size(); ++k) CHECK(std::abs(cond2[k] - pb2.pmf[k]) < 1e-12);

  // matches elementwise renormalized product
  CounterRng rng(103, 0);
  for (int rep = 0; rep < 100; ++rep) {
    int n = 1 + static_cast<int>(rng.uniform_int(30));
    std::vector<double> probs(n);
    for (auto& p : probs) p = rng.uniform();
    auto pb3 = pb_pmf(probs);
    ExponentialNoise nz(0.1 + 0.8 * rng.uniform());
    double theta_n = rng.uniform() * n;
    auto cond3 = conditional_pmf_reject(pb3, nz, theta_n);
    double z = 0;
    for (size_t k = 0; k <= static_cast<size_t>(n); ++k)
      z += pb3.pmf[k] * (1.0 - nz.survival(theta_n - static_cast<double>(k)));
    KahanSum total;
    for (size_t k = 0; k <= static_cast<size_t>(n); ++k) {
      double expect = pb3.pmf[k] * (1.0 - nz.survival(theta_n - static_cast<double>(k))) / z;
      CHECK(std::abs(cond3[k] - expect) < 1e-12);
      total.add(cond3[k]);
    }
    CHECK(std::abs(total.value() - 1.0) < 1e-12);

    // rejection shifts mass downward
    double cond_mean = 0, raw_mean = 0;
    for (size_t k = 0; k <= static_cast<size_t>(n); ++k) {
      cond_mean += k * cond3[k];
      raw_mean += k * pb3.pmf[k];
    }
    CHECK(cond_mean <= raw_mean + 1e-10);
  }

  auto impossible = pb_pmf(std::vector<double>{1.0});
  CHECK_THROWS_AS(conditional_pmf_reject(impossible, noise, -5.0), degenerate_error);
}

TEST_CASE("Bhattacharyya and chi-square") {
  std::vector<double> p{0.5, 0.5}, q{0.25, 0.75};
  CHECK(std::abs(bhattacharyya(p, p) - 1.0) < 1e-14);
  CHECK(chi_squared(p, p) == doctest::Approx(0.0));
  CHECK(std::abs(bhattacharyya(p, q) - 0.5 * (std::sqrt(0.5) + std::sqrt(1.5))) < 1e-14);
  CHECK(std::abs(chi_squared(p, q) - (0.25 + 1.0 / 12.0)) < 1e-14);

  std::vector<double> a{1.0, 0.0}, b{0.0, 1.0};
  CHECK_THROWS_AS(chi_squared(a, b), contract_error);

  // 1 - BC(P, Q) <= chi2(P, Q) on random pmf pairs with shared support
  CounterRng rng(104, 0);
  for (int rep = 0; rep < 500; ++rep) {
    int n = 2 + static_cast<int>(rng.uniform_int(10));
    std::vector<double> pp(n), qq(n);
    double sp = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
      pp[i] = 0.01 + rng.uniform();
      qq[i] = 0.01 + rng.uniform();
      sp += pp[i];
      sq += qq[i];
    }
    for (int i = 0; i < n; ++i) {
      pp[i] /= sp;
      qq[i] /= sq;
    }
    CHECK(1.0 - bhattacharyya(pp, qq) <= chi_squared(pp, qq) + 1e-12);
  }
}

TEST_CASE("Chernoff bound values") {
  auto b0 = chernoff_bounds(100.0, 0.0);
  CHECK(b0.upper == doctest::Approx(1.0));
  CHECK(b0.lower == doctest::Approx(1.0));
  auto b = chernoff_bounds(100.0, 0.3);
  CHECK(b.upper == doctest::Approx(std::exp(-3.0)).epsilon(1e-12));
  CHECK(b.lower == doctest::Approx(std::exp(-4.5)).epsilon(1e-12));
}

TEST_CASE("Chernoff bounds dominate exact PB tails") {
  CounterRng rng(105, 0);
  for (int rep = 0; rep < 200; ++rep) {
    int n = 5 + static_cast<int>(rng.uniform_int(100));
    std::vector<double> probs(n);
    for (auto& p : probs) p = rng.uniform();
    auto pb = pb_pmf(probs);
    double eps = 0.05 + 0.9 * rng.uniform();
    auto bounds = chernoff_bounds(pb.mean, eps);
    double upper_tail = pb.tail_above((1.0 + eps) * pb.mean) -
                        0.0;  // strict Pr[T > (1+eps) mean] <= Pr[T >= ...]
    double lower_tail = 0.0;
    for (size_t k = 0; k < pb.pmf.size(); ++k)
      if (static_cast<double>(k) <= (1.0 - eps) * pb.mean) lower_tail += pb.pmf[k];
    CHECK(upper_tail <= bounds.upper + 1e-12);
    CHECK(lower_tail <= bounds.lower + 1e-12);
  }
}

TEST_CASE("acceptance probability upper bound holds on random instances") {
  CounterRng rng(106, 0);
  for (int rep = 0; rep < 500; ++rep) {
    int n = 2 + static_cast<int>(rng.uniform_int(80));
    std::vector<double> probs(n);
    for (auto& p : probs) p = rng.uniform();
    auto pb = pb_pmf(probs);
    double lambda = 1e-3 + 0.998 * rng.uniform();
    ExponentialNoise noise(lambda);
    double theta = rng.uniform();
    double tail = smoothed_tail(pb, noise, theta * n);
    double bound = acceptance_upper_bound(n, lambda, theta, pb.mean / n);
    CHECK(tail <= bound + 1e-12);
  }
}

TEST_CASE("gentleness check") {
  // all-zero probabilities: chi2 = 0 passes trivially
  auto pz = pb_pmf(std::vector<double>(10, 0.0));
  ExponentialNoise nz(0.5);
  auto rep0 = gentleness_check(pz, nz, 5.0, 10.0);
  CHECK(rep0.chi2 == doctest::Approx(0.0));
  CHECK(rep0.ok);

  // spec'd spot instance: n = 50 uniform p = 0.5, 1/lambda = 2 stddev, theta = 0.8
  auto pb = pb_pmf(std::vector<double>(50, 0.5));
  ExponentialNoise noise(1.0 / (2.0 * pb.stddev()));
  auto rep = gentleness_check(pb, noise, 0.8 * 50, 10.0);
  CHECK(rep.p_accept < 0.25);
  CHECK(rep.ok);

  // hypothesis violations are named errors
  CHECK_THROWS_AS(gentleness_check(pb, ExponentialNoise(2.0), 40.0, 10.0), precondition_error);
  CHECK_THROWS_AS(gentleness_check(pb, noise, 10.0, 10.0), precondition_error);  // Pr[B] >= 1/4
}

TEST_CASE("gentleness sweep: no violations across 1000 random admissible instances") {
  CounterRng rng(107, 0);
  int done = 0;
  double max_ratio = 0.0;
  while (done < 1000) {
    int n = 5 + static_cast<int>(rng.uniform_int(120));
    std::vector<double> probs(n);
    for (auto& p : probs) p = rng.uniform();
    auto pb = pb_pmf(probs);
    double inv_lambda = std::max({1.0, pb.stddev()}) * (1.0 + 3.0 * rng.uniform());
    ExponentialNoise noise(1.0 / inv_lambda);
    double theta_n = pb.mean + (2.0 + 6.0 * rng.uniform()) * std::max(1.0, pb.stddev());
    double pa = smoothed_tail(pb, noise, theta_n);
    if (!(pa < 0.25) || pa < 1e-280) continue;
    auto rep = gentleness_check(pb, noise, theta_n, 10.0);
    CHECK(rep.ok);
    max_ratio = std::max(max_ratio, rep.ratio);
    ++done;
  }
  MESSAGE("empirical max chi2 / rhs ratio: ", max_ratio);
  CHECK(max_ratio <= 10.0);
}
