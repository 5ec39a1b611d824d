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

#include "cqlearn/stats.hpp"

namespace cqlearn::pbnoise {

double PBDistribution::stddev() const { return std::sqrt(variance); }

double PBDistribution::tail_above(double t) const {
  KahanSum s;
  for (size_t k = 0; k < pmf.size(); ++k) {
    if (static_cast<double>(k) > t) s.add(pmf[k]);
  }
  return s.value();
}

PBDistribution pb_pmf(std::span<const double> probs) {
  PBDistribution out;
  out.probs.assign(probs.begin(), probs.end());
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw contract_error("pb_pmf: every p_i must lie in [0, 1]");
  }
  const size_t n = probs.size();
  out.pmf.assign(n + 1, 0.0);
  out.pmf[0] = 1.0;
  size_t len = 1;
  for (size_t i = 0; i < n; ++i) {
    const double p = probs[i], q = 1.0 - probs[i];
    out.pmf[len] = out.pmf[len - 1] * p;
    for (size_t k = len - 1; k > 0; --k) {
      out.pmf[k] = out.pmf[k] * q + out.pmf[k - 1] * p;
    }
    out.pmf[0] *= q;
    ++len;
  }
  KahanSum mean, var;
  for (double p : probs) {
    mean.add(p);
    var.add(p * (1.0 - p));
  }
  out.mean = mean.value();
  out.variance = var.value();
  return out;
}

double ExponentialNoise::survival(double s) const {
  return s <= 0.0 ? 1.0 : std::exp(-lambda * s);
}

double smoothed_tail(const PBDistribution& pb, const ExponentialNoise& noise, double theta_n) {
  KahanSum acc;
  for (size_t t = 0; t < pb.pmf.size(); ++t) {
    acc.add(pb.pmf[t] * noise.survival(theta_n - static_cast<double>(t)));
  }
  double v = acc.value();
  return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

std::vector<double> conditional_pmf_reject(const PBDistribution& pb, const ExponentialNoise& noise,
                                           double theta_n) {
  std::vector<double> w(pb.pmf.size());
  KahanSum z;
  for (size_t t = 0; t < pb.pmf.size(); ++t) {
    w[t] = pb.pmf[t] * (1.0 - noise.survival(theta_n - static_cast<double>(t)));
    z.add(w[t]);
  }
  double norm = z.value();
  if (norm <= 1e-300)
    throw degenerate_error("conditional_pmf_reject: rejection probability underflows");
  for (double& x : w) x /= norm;
  return w;
}

double bhattacharyya(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw contract_error("bhattacharyya: support mismatch");
  KahanSum acc;
  for (size_t i = 0; i < p.size(); ++i) acc.add(std::sqrt(p[i] * q[i]));
  double v = acc.value();
  return v > 1.0 ? 1.0 : v;
}

double chi_squared(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw contract_error("chi_squared: support mismatch");
  KahanSum acc;
  for (size_t i = 0; i < p.size(); ++i) {
    if (q[i] <= 0.0) {
      if (p[i] > 0.0)
        throw contract_error("chi_squared: P has mass where Q vanishes (undefined)");
      continue;
    }
    double r = 1.0 - p[i] / q[i];
    acc.add(q[i] * r * r);
  }
  return acc.value();
}

ChernoffBounds chernoff_bounds(double mean, double eps) {
  if (mean < 0) throw contract_error("chernoff_bounds: mean must be nonnegative");
  return {std::exp(-eps * eps * mean / 3.0), std::exp(-eps * eps * mean / 2.0)};
}

double acceptance_upper_bound(size_t n, double lambda, double theta, double mean_prob) {
  double exponent =
      -static_cast<double>(n) * lambda * (theta - mean_prob - std::exp(1.0) * lambda / 2.0);
  return std::exp(exponent);
}

GentlenessReport gentleness_check(const PBDistribution& pb, const ExponentialNoise& noise,
                                  double theta_n, double c_cal) {
  const double mean_noise = 1.0 / noise.lambda;
  if (mean_noise < 1.0 || mean_noise < pb.stddev())
    throw precondition_error(
        "gentleness_check: noise mean 1/lambda must be at least max(1, stddev[T])");
  GentlenessReport rep;
  rep.p_accept = smoothed_tail(pb, noise, theta_n);
  if (!(rep.p_accept < 0.25))
    throw precondition_error("gentleness_check: Pr[B] must be below 1/4");
  std::vector<double> cond = conditional_pmf_reject(pb, noise, theta_n);
  rep.chi2 = chi_squared(cond, pb.pmf);
  double rhs_root = rep.p_accept * pb.stddev() * noise.lambda;
  rep.bound_rhs = rhs_root * rhs_root;
  rep.ratio = rep.bound_rhs > 0 ? rep.chi2 / rep.bound_rhs : 0.0;
  rep.ok = rep.chi2 <= c_cal * rep.bound_rhs;
  return rep;
}

}  // namespace cqlearn::pbnoise
