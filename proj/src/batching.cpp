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

#include "cqlearn/batching.hpp"

#include <cmath>
#include <numeric>

#include "cqlearn/errors.hpp"
#include "cqlearn/stats.hpp"

namespace cqlearn::batching {

BatchPlan draw_batches(int64_t n, int k, int l, CounterRng& rng) {
  if (k <= 0 || l <= 0) throw contract_error("draw_batches: K and l must be positive");
  const int64_t need = static_cast<int64_t>(k) * l;
  if (need > n) throw contract_error("draw_batches: K*l exceeds the population size n");
  BatchPlan plan;
  plan.n = n;
  plan.k = k;
  plan.l = l;
  plan.meets_population_margin = n >= 3 * need;

  // Partial Fisher-Yates: the first K*l entries of a uniformly random
  // permutation of [0, n).
  std::vector<int64_t> pool(static_cast<size_t>(n));
  std::iota(pool.begin(), pool.end(), int64_t{0});
  for (int64_t i = 0; i < need; ++i) {
    int64_t j = i + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n - i)));
    std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
  }
  plan.indices.resize(static_cast<size_t>(k));
  for (int s = 0; s < k; ++s) {
    plan.indices[static_cast<size_t>(s)].assign(
        pool.begin() + static_cast<int64_t>(s) * l, pool.begin() + static_cast<int64_t>(s + 1) * l);
  }
  return plan;
}

double deviation_bound(int k, int m, int l, double eps) {
  return 2.0 * k * m * std::exp(-2.0 * l * eps * eps / 4.0);
}

WithoutReplacementReport verify_without_replacement(
    const std::vector<std::vector<double>>& populations, int k, int l, double eps, int trials,
    CounterRng& rng) {
  if (populations.empty()) throw contract_error("verify_without_replacement: need populations");
  const int64_t n = static_cast<int64_t>(populations[0].size());
  const int m = static_cast<int>(populations.size());
  std::vector<double> means(populations.size());
  for (size_t c = 0; c < populations.size(); ++c) {
    if (static_cast<int64_t>(populations[c].size()) != n)
      throw contract_error("verify_without_replacement: populations must share one size");
    means[c] = kahan_total(populations[c]) / static_cast<double>(n);
  }

  int64_t exceed = 0;
  double max_dev = 0.0;
  for (int t = 0; t < trials; ++t) {
    CounterRng trial_rng = rng.substream(static_cast<uint64_t>(t));
    BatchPlan plan = draw_batches(n, k, l, trial_rng);
    double worst = 0.0;
    for (int s = 0; s < k; ++s) {
      for (size_t c = 0; c < populations.size(); ++c) {
        double acc = 0.0;
        for (int64_t idx : plan.batch(s)) acc += populations[c][static_cast<size_t>(idx)];
        worst = std::max(worst, std::abs(acc / l - means[c]));
      }
    }
    max_dev = std::max(max_dev, worst);
    if (worst >= eps) ++exceed;
  }

  WithoutReplacementReport rep;
  rep.empirical_freq = static_cast<double>(exceed) / trials;
  rep.bound = deviation_bound(k, m, l, eps);
  rep.se = binomial_se(rep.empirical_freq, trials);
  rep.max_observed_deviation = max_dev;
  rep.pass = rep.empirical_freq <= std::min(1.0, rep.bound) + 3.0 * rep.se;
  return rep;
}

}  // namespace cqlearn::batching
