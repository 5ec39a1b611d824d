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

namespace cqlearn {

/// Counter-based pseudorandom generator. Every output is a pure function of
/// (seed, stream, step), so (seed, stream, step) recorded in a report fully
/// determines all sampled values, independent of thread scheduling. Streams
/// derived with `stream()` are statistically independent.
class CounterRng {
 public:
  CounterRng() : CounterRng(1, 0) {}
  CounterRng(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {}

  uint64_t seed() const { return seed_; }
  uint64_t stream_id() const { return stream_; }
  uint64_t step() const { return ctr_; }

  /// Independent generator for substream `idx` of this stream.
  CounterRng substream(uint64_t idx) const;

  uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [0, n).
  uint64_t uniform_int(uint64_t n);
  bool bernoulli(double p);
  /// Exponential with rate lambda (mean 1/lambda).
  double exponential(double lambda);
  /// Standard normal (Box-Muller, cached spare).
  double gaussian();
  /// Exact Binomial(n, p) sample; O(min(n, stddev)) expected time.
  int64_t binomial(int64_t n, double p);
  /// Exact multinomial over `probs` (need not be normalized).
  std::vector<int64_t> multinomial(int64_t n, std::span<const double> probs);
  /// Categorical draw from unnormalized weights.
  size_t categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = uniform_int(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t seed_, stream_;
  uint64_t ctr_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cqlearn
