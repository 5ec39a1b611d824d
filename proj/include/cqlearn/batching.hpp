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

#include <cstdint>
#include <span>
#include <vector>

#include "cqlearn/rng.hpp"

namespace cqlearn::batching {

/// K disjoint batches of l indices each, sampled without replacement from
/// [0, n). Drawn as one global partial shuffle sliced into K segments, which
/// is equal in law to sequential without-replacement draws.
struct BatchPlan {
  int64_t n = 0;
  int k = 0;
  int l = 0;
  /// Population comfortably larger than the draw (n >= 3 K l). Advisory:
  /// the concentration bound degrades gracefully below it.
  bool meets_population_margin = true;
  std::vector<std::vector<int64_t>> indices;  // k lists of l distinct values

  const std::vector<int64_t>& batch(int s) const { return indices[static_cast<size_t>(s)]; }
};

BatchPlan draw_batches(int64_t n, int k, int l, CounterRng& rng);

/// Concentration ceiling 2 K m exp(-2 l eps^2 / 4) for the maximum batch-mean
/// deviation over m populations and K batches. May exceed 1; reported as-is.
double deviation_bound(int k, int m, int l, double eps);

struct WithoutReplacementReport {
  double empirical_freq = 0.0;
  double bound = 0.0;
  double se = 0.0;
  bool pass = false;
  double max_observed_deviation = 0.0;
};

/// Monte-Carlo frequency of the event
///   max over populations c and batches s of |batch mean - population mean| >= eps
/// compared against deviation_bound. Passes when the frequency does not
/// exceed the bound by more than three standard errors.
WithoutReplacementReport verify_without_replacement(
    const std::vector<std::vector<double>>& populations, int k, int l, double eps, int trials,
    CounterRng& rng);

}  // namespace cqlearn::batching
