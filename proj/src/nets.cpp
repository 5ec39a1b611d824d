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

#include "cqlearn/nets.hpp"

#include <cmath>

#include "cqlearn/stats.hpp"

namespace cqlearn::nets {

using qcore::ComplexMatrix;

NormIndex default_norm_index(concepts::ConceptKind kind) {
  return kind == concepts::ConceptKind::State ? NormIndex::TraceNorm : NormIndex::OperatorNorm;
}

double pseudometric(const Concept& c1, const Concept& c2, const std::vector<Label>& labels,
                    NormIndex q) {
  if (labels.empty()) throw contract_error("pseudometric: need at least one label");
  KahanSum acc;
  for (const Label& x : labels) {
    ComplexMatrix diff = c1(x) - c2(x);
    acc.add(q == NormIndex::TraceNorm ? qcore::trace_norm(diff) : qcore::operator_norm(diff));
  }
  return acc.value() / static_cast<double>(labels.size());
}

double EmpiricalNet::max_assignment_distance() const {
  double worst = 0;
  for (double d : distances) worst = std::max(worst, d);
  return worst;
}

EmpiricalNet build_empirical_net(const ConceptClass& cls, const std::vector<Label>& labels,
                                 double eps, NormIndex q, int sample_budget, CounterRng& rng) {
  if (eps <= 0) throw contract_error("build_empirical_net: eps must be positive");
  std::vector<Concept> candidates;
  bool sampled = false;
  if (cls.finite()) {
    candidates = cls.members();
  } else {
    if (sample_budget < 1)
      throw contract_error("build_empirical_net: sample budget must be positive for infinite classes");
    for (int i = 0; i < sample_budget; ++i) candidates.push_back(cls.sample(rng));
    sampled = true;
  }
  const size_t n_cand = candidates.size();

  // Repeated labels only reweight the pseudometric; evaluate each distinct
  // label once.
  std::vector<Label> distinct;
  std::vector<double> weight;
  for (const Label& x : labels) {
    bool found = false;
    for (size_t j = 0; j < distinct.size(); ++j) {
      if (distinct[j] == x) {
        weight[j] += 1.0;
        found = true;
        break;
      }
    }
    if (!found) {
      distinct.push_back(x);
      weight.push_back(1.0);
    }
  }
  for (double& w : weight) w /= static_cast<double>(labels.size());

  // Cache evaluations once; the greedy pass and audit reuse them.
  std::vector<std::vector<ComplexMatrix>> evals(n_cand);
  for (size_t c = 0; c < n_cand; ++c) {
    evals[c].reserve(distinct.size());
    for (const Label& x : distinct) evals[c].push_back(candidates[c](x));
  }
  auto dist = [&](size_t a, size_t b) {
    KahanSum acc;
    for (size_t i = 0; i < distinct.size(); ++i) {
      ComplexMatrix diff = evals[a][i] - evals[b][i];
      acc.add(weight[i] *
              (q == NormIndex::TraceNorm ? qcore::trace_norm(diff) : qcore::operator_norm(diff)));
    }
    return acc.value();
  };

  EmpiricalNet net;
  net.eps = eps;
  net.q = q;
  net.labels = labels;
  net.audited_on_sample_only = sampled;
  net.assignment.assign(n_cand, -1);
  net.distances.assign(n_cand, std::numeric_limits<double>::infinity());

  // Greedy internal net: adopt the lowest-index uncovered candidate.
  for (size_t c = 0; c < n_cand; ++c) {
    if (net.distances[c] <= eps) continue;
    int center = static_cast<int>(net.members.size());
    net.members.push_back(candidates[c]);
    net.member_index.push_back(static_cast<int>(c));
    for (size_t o = 0; o < n_cand; ++o) {
      double d = dist(c, o);
      if (d < net.distances[o]) {
        net.distances[o] = d;
        net.assignment[o] = center;
      }
    }
  }
  return net;
}

ParameterNet parameter_net(const concepts::ParameterFamily& family, double eps_param) {
  if (eps_param <= 0) throw contract_error("parameter_net: eps must be positive");
  ParameterNet out;
  out.family = family.name;
  out.eps_param = eps_param;
  out.induced_concept_eps = family.induced_eps(eps_param);

  std::vector<std::vector<double>> axes;
  for (const auto& [lo, hi] : family.boxes) {
    std::vector<double> pts;
    if (hi <= lo) {
      pts.push_back(lo);
    } else {
      int steps = static_cast<int>(std::ceil((hi - lo) / eps_param - 1e-12));
      for (int j = 0; j <= steps; ++j) pts.push_back(std::min(hi, lo + j * eps_param));
    }
    axes.push_back(std::move(pts));
  }
  std::vector<double> cur(axes.size());
  std::vector<size_t> idx(axes.size(), 0);
  for (;;) {
    for (size_t a = 0; a < axes.size(); ++a) cur[a] = axes[a][idx[a]];
    out.points.push_back(cur);
    size_t a = 0;
    while (a < axes.size() && ++idx[a] == axes[a].size()) {
      idx[a] = 0;
      ++a;
    }
    if (a == axes.size()) break;
  }
  return out;
}

CoveringBoundReport bound_lqc(int m, int l, double eps) {
  if (m < 2 || l < 1 || eps <= 0) throw contract_error("bound_lqc: need m >= 2, l >= 1, eps > 0");
  CoveringBoundReport r;
  r.family = "lqc";
  r.log10_bound = l * (std::log10(static_cast<double>(m)) + 32.0 * std::log10(6.0 * l / eps));
  return r;
}

CoveringBoundReport bound_brickwork(int m, int l, double eps) {
  if (m < 2 || l < 1 || eps <= 0)
    throw contract_error("bound_brickwork: need m >= 2, l >= 1, eps > 0");
  CoveringBoundReport r;
  r.family = "brickwork";
  r.log10_bound = 32.0 * m * l * std::log10(6.0 * m * l / eps);
  return r;
}

CoveringBoundReport bound_full_unitary(int m, double eps) {
  if (m < 1 || eps <= 0) throw contract_error("bound_full_unitary: need m >= 1, eps > 0");
  CoveringBoundReport r;
  r.family = "full_unitary";
  r.log10_bound = std::exp2(2.0 * m + 2.0) * std::log10(6.0 / eps);
  return r;
}

CoveringBoundReport bound_fatshatter(int64_t n, double range_bound, double eps, double fat_dim) {
  if (n < 1 || range_bound <= 0 || eps <= 0 || fat_dim <= 0)
    throw contract_error("bound_fatshatter: need n >= 1, B > 0, eps > 0, D > 0");
  CoveringBoundReport r;
  r.family = "fat_shattering";
  double inner = 4.0 * n * range_bound * range_bound / (eps * eps);
  double expo = fat_dim * std::log2(4.0 * std::exp(1.0) * range_bound * n / (fat_dim * eps));
  r.log10_bound = std::log10(2.0) + expo * std::log10(inner);
  return r;
}

CoveringBoundReport bound_ball(double radius, double eps, double dims) {
  if (radius <= 0 || eps <= 0 || dims <= 0)
    throw contract_error("bound_ball: need R > 0, eps > 0, K > 0");
  CoveringBoundReport r;
  r.family = "ball";
  r.log10_bound = dims * std::log10(1.0 + 2.0 * radius / eps);
  return r;
}

double uniform_convergence_bound(int64_t n, double eps, double log_cover, double loss_range) {
  if (n < 1 || loss_range <= 0)
    throw contract_error("uniform_convergence_bound: need n >= 1 and a positive loss range");
  double exponent = log_cover - static_cast<double>(n) * eps * eps / (32.0 * loss_range * loss_range);
  return 4.0 * std::exp(exponent);
}

}  // namespace cqlearn::nets
