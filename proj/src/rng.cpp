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

#include "cqlearn/rng.hpp"

#include <cmath>
#include <limits>

#include "cqlearn/errors.hpp"

namespace cqlearn {

namespace {

inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t hash3(uint64_t a, uint64_t b, uint64_t c) {
  uint64_t h = mix64(a);
  h = mix64(h ^ (b + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (c + 0xd6e8feb86659fd93ULL));
  return h;
}

}  // namespace

CounterRng CounterRng::substream(uint64_t idx) const {
  return CounterRng(seed_, hash3(stream_, idx, 0x5851f42d4c957f2dULL));
}

uint64_t CounterRng::next_u64() { return hash3(seed_, stream_, ctr_++); }

double CounterRng::uniform() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t CounterRng::uniform_int(uint64_t n) {
  if (n == 0) throw contract_error("uniform_int: n must be positive");
  // rejection to remove modulo bias
  uint64_t threshold = (0 - n) % n;
  for (;;) {
    uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

bool CounterRng::bernoulli(double p) { return uniform() < p; }

double CounterRng::exponential(double lambda) {
  if (lambda <= 0) throw contract_error("exponential: lambda must be positive");
  double u = uniform();
  return -std::log1p(-u) / lambda;
}

double CounterRng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform(), u2 = uniform();
  while (u1 <= 0) u1 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 6.283185307179586476925287 * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

int64_t CounterRng::binomial(int64_t n, double p) {
  if (n < 0 || p < 0.0 || p > 1.0) throw contract_error("binomial: need n >= 0 and p in [0,1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - binomial(n, 1.0 - p);
  if (n <= 32) {
    int64_t k = 0;
    for (int64_t i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
    return k;
  }
  // Inverse CDF walk outward from the mode; expected O(stddev) steps.
  const double q = 1.0 - p;
  const int64_t mode = static_cast<int64_t>((n + 1) * p);
  double logf_mode = std::lgamma(static_cast<double>(n + 1)) -
                     std::lgamma(static_cast<double>(mode + 1)) -
                     std::lgamma(static_cast<double>(n - mode + 1)) +
                     mode * std::log(p) + (n - mode) * std::log(q);
  double f_mode = std::exp(logf_mode);
  double u = uniform();
  // pmf ratios: f(k+1)/f(k) = (n-k)/(k+1) * p/q ; f(k-1)/f(k) = k/(n-k+1) * q/p
  double acc = f_mode;
  if (u < acc) return mode;
  double f_up = f_mode, f_dn = f_mode;
  int64_t up = mode, dn = mode;
  for (;;) {
    bool moved = false;
    if (up < n) {
      f_up *= (static_cast<double>(n - up) / static_cast<double>(up + 1)) * (p / q);
      ++up;
      acc += f_up;
      if (u < acc) return up;
      moved = true;
    }
    if (dn > 0) {
      f_dn *= (static_cast<double>(dn) / static_cast<double>(n - dn + 1)) * (q / p);
      --dn;
      acc += f_dn;
      if (u < acc) return dn;
      moved = true;
    }
    if (!moved) return mode;  // numerical leftover mass; return the mode
  }
}

std::vector<int64_t> CounterRng::multinomial(int64_t n, std::span<const double> probs) {
  std::vector<int64_t> out(probs.size(), 0);
  double total = 0.0;
  for (double p : probs) total += p;
  int64_t left = n;
  for (size_t i = 0; i + 1 < probs.size(); ++i) {
    if (left == 0 || total <= 0) break;
    double p = probs[i] / total;
    if (p > 1.0) p = 1.0;
    int64_t k = binomial(left, p);
    out[i] = k;
    left -= k;
    total -= probs[i];
  }
  if (!probs.empty()) out[probs.size() - 1] = left;
  return out;
}

size_t CounterRng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0) throw contract_error("categorical: total weight must be positive");
  double u = uniform() * total;
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

}  // namespace cqlearn
