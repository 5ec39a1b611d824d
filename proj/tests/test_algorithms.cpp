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

#include "cqlearn/algorithms.hpp"

#include <cmath>

#include "doctest.h"

using namespace cqlearn;
using namespace cqlearn::algorithms;
using qcore::ComplexMatrix;
using simstate::CommutingGroup;
using simstate::CommutingInstance;

namespace {

/// Commuting instance over qubit sites assembled from group specs:
/// (site count, probability of value 1, per-concept masks).
CommutingInstance make_instance(const std::vector<int64_t>& counts,
                                const std::vector<double>& p1,
                                const std::vector<std::vector<uint32_t>>& concept_group_masks) {
  CommutingInstance inst;
  inst.d = 2;
  inst.n_sites = 0;
  for (size_t g = 0; g < counts.size(); ++g) {
    CommutingGroup grp;
    grp.count = counts[g];
    grp.probs = {1.0 - p1[g], p1[g]};
    inst.groups.push_back(grp);
    for (int64_t i = 0; i < counts[g]; ++i)
      inst.site_group.push_back(static_cast<int32_t>(g));
    inst.n_sites += counts[g];
  }
  inst.concept_masks = concept_group_masks;
  return inst;
}

}  // namespace

TEST_CASE("threshold search accepts an all-identity concept immediately") {
  CounterRng rng(1, 0);
  std::vector<qcore::DensityMatrix> sites;
  std::vector<qcore::Projector> projs;
  for (int i = 0; i < 5; ++i) {
    sites.push_back(qcore::random_density(2, rng));
    projs.emplace_back(qcore::identity(2));
  }
  simstate::ProductState ps(sites, simstate::Backend::Dense);
  ThresholdedConceptList concepts;
  concepts.site_projectors = {projs};
  concepts.thetas = {0.5};
  AlgorithmConfig cfg;
  int hits = 0;
  for (int t = 0; t < 50; ++t) {
    auto run = threshold_search(ps, concepts, cfg, rng);
    if (run.accepted_concept && *run.accepted_concept == 0) ++hits;
  }
  CHECK(hits == 50);
}

TEST_CASE("threshold search passes on a zero-overlap concept") {
  // mu = 0, theta = 0.9: acceptance bounded by exp(-sqrt(n) 0.8 / D + e/(2 D^2))
  CounterRng rng(2, 0);
  const int64_t n = 400;
  auto inst = make_instance({n}, {0.4}, {{0u}});  // mask 0: never accepts
  CommutingInstanceModel model(inst);
  AlgorithmConfig cfg;
  cfg.eps = 0.1;
  int none = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    auto handle = model.whole_state(CounterRng(7, static_cast<uint64_t>(t)));
    std::vector<SearchItem> items{{0, false, 0.9}};
    auto res = threshold_search(*handle, items, cfg.eps, cfg.noise_scale, rng);
    if (!res.accepted_item) ++none;
  }
  double bound = std::exp(-std::sqrt(static_cast<double>(n)) * 0.8 / cfg.noise_scale +
                          std::exp(1.0) / (2.0 * cfg.noise_scale * cfg.noise_scale));
  CHECK(static_cast<double>(trials - none) / trials <= bound + 3.0 * std::sqrt(bound) + 0.03);
}

TEST_CASE("erm finds the risk-free concept") {
  // m = 1, identity projectors: mu = 1; the estimate must land in [1 - 6 eps, 1]
  auto inst = make_instance({4000}, {0.5}, {{3u}});  // mask 3: always accepts
  CommutingInstanceModel model(inst);
  AlgorithmConfig cfg;
  cfg.eps = 0.1;
  cfg.delta = 0.25;
  cfg.t_rounds = 3;
  cfg.k_repeats = 4;
  cfg.block_size = 160;  // 6 T k l = 11520 <= n? need n >= 6*3*4*160 = 11520
  auto inst2 = make_instance({12000}, {0.5}, {{3u}});
  CommutingInstanceModel model2(inst2);
  CounterRng rng(3, 0);
  auto res = erm_projector(model2, cfg, rng);
  CHECK(res.c_star == 0);
  CHECK(res.mu_hat >= 1.0 - 6.0 * cfg.eps);
  CHECK(res.mu_hat <= 1.0 + 1e-12);
  CHECK_FALSE(res.degenerate);
}

TEST_CASE("erm sizing error names the inequality") {
  auto inst = make_instance({100}, {0.5}, {{3u}});
  CommutingInstanceModel model(inst);
  AlgorithmConfig cfg;
  cfg.t_rounds = 3;
  cfg.k_repeats = 4;
  cfg.block_size = 160;
  CounterRng rng(4, 0);
  CHECK_THROWS_WITH_AS(erm_projector(model, cfg, rng),
                       doctest::Contains("n >= 6 T k l"), precondition_error);
}

TEST_CASE("erm on a degenerate tie accepts any concept") {
  // both concepts at mu = 0.5 exactly
  auto inst = make_instance({12000}, {0.5}, {{2u}, {1u}});
  CommutingInstanceModel model(inst);
  AlgorithmConfig cfg;
  cfg.eps = 0.1;
  cfg.t_rounds = 3;
  cfg.k_repeats = 4;
  cfg.block_size = 160;
  CounterRng rng(5, 0);
  auto res = erm_projector(model, cfg, rng);
  CHECK(res.mu_hat >= 0.5 - 6.0 * cfg.eps);
  CHECK(res.mu_hat <= 0.5 + 6.0 * cfg.eps);
}

TEST_CASE("bad-estimate search flags a displaced estimate") {
  // two concepts: concept 0 reads value-1 sites of group 0 (mu = 0.35),
  // concept 1 reads value-1 sites of group 1 (mu = 0.2); the estimate for
  // concept 1 is displaced by +0.3
  auto inst = make_instance({100000, 100000}, {0.7, 0.4}, {{2u, 0u}, {0u, 2u}});
  simstate::SimConfig sim;
  sim.particles = 20000;
  CommutingInstanceModel model(inst, sim);
  double mu0 = model.concept_mean(0);
  double mu1 = model.concept_mean(1);
  CHECK(mu0 == doctest::Approx(0.35));
  CHECK(mu1 == doctest::Approx(0.2));

  AlgorithmConfig cfg;
  cfg.eps = 0.1;
  cfg.sim = sim;
  const int k = 5, l = 4000;

  int found = 0, misid = 0;
  const int runs = 60;
  for (int run = 0; run < runs; ++run) {
    CounterRng rrng(100 + run, 0);
    auto plan = batching::draw_batches(inst.n_sites, 2 * k, l, rrng);
    std::vector<double> lambdas{mu0, mu1 + 0.3};
    auto bad = search_bad_estimate(model, plan.indices, lambdas, cfg, rrng);
    if (bad) {
      ++found;
      if (bad->concept_id != 1) ++misid;
      else CHECK_FALSE(bad->upward);  // estimate above truth: downward correction
    }
  }
  CHECK(found >= static_cast<int>(0.75 * runs));
  CHECK(misid <= runs / 10);

  // exact estimates: the check almost never passes
  int spurious = 0;
  for (int run = 0; run < runs; ++run) {
    CounterRng rrng(500 + run, 0);
    auto plan = batching::draw_batches(inst.n_sites, 2 * k, l, rrng);
    std::vector<double> lambdas{mu0, mu1};
    if (search_bad_estimate(model, plan.indices, lambdas, cfg, rrng)) ++spurious;
  }
  CHECK(spurious <= runs / 6);
}

TEST_CASE("risk estimation drives every estimate within tolerance (commuting)") {
  // six concepts with spread means; commuting estimator; known truth
  std::vector<std::vector<uint32_t>> masks{{2u, 0u, 0u}, {0u, 2u, 0u}, {0u, 0u, 2u},
                                           {2u, 2u, 0u}, {3u, 0u, 0u}, {1u, 0u, 0u}};
  auto inst = make_instance({20000, 20000, 20000}, {0.9, 0.5, 0.2}, masks);
  CommutingInstanceModel model(inst);
  AlgorithmConfig cfg;
  cfg.eps = 0.1;
  cfg.delta = 0.25;
  cfg.t_rounds = 8;
  cfg.k_repeats = 3;
  cfg.block_size = 600;  // 6*8*3*600 = 86400 > 60000? -> violates; use n >= that
  auto inst_big = make_instance({30000, 30000, 30000}, {0.9, 0.5, 0.2}, masks);
  CommutingInstanceModel model_big(inst_big);
  cfg.q_copies = 12;

  int ok_runs = 0;
  const int runs = 20;
  for (int run = 0; run < runs; ++run) {
    CounterRng rng(200 + run, 0);
    auto res = ere_shadow(model_big, cfg, rng);
    double worst = 0;
    for (int c = 0; c < model_big.concept_count(); ++c)
      worst = std::max(worst, std::abs(res.estimates[static_cast<size_t>(c)] -
                                       model_big.concept_mean(c)));
    if (worst <= 2.0 * cfg.eps) ++ok_runs;
    CHECK(res.updates <= cfg.t_rounds);
    for (const auto& step : res.trace)
      if (step.found_bad) CHECK(step.update_prob < 1.0 + 1e-12);
  }
  CHECK(ok_runs >= static_cast<int>(0.7 * runs));
}

TEST_CASE("hypothesis selection post-processing") {
  // realizable: hypothesis 0 matches the truth exactly
  std::vector<std::vector<double>> nu{{0.6, 0.3}, {0.9, 0.7}};
  std::vector<double> mu{0.6, 0.3};
  auto sel = select_hypothesis(nu, mu);
  CHECK(sel.k_star == 0);
  CHECK(sel.deltas[0] == doctest::Approx(0.0));

  // symmetric tie: lowest index wins
  std::vector<std::vector<double>> nu2{{0.5}, {0.7}};
  std::vector<double> mu2{0.6};
  CHECK(select_hypothesis(nu2, mu2).k_star == 0);
}

TEST_CASE("pure-state learner") {
  CounterRng rng(7, 0);
  Eigen::VectorXcd e0(2), e1(2);
  e0 << 1, 0;
  e1 << 0, 1;
  ComplexMatrix s0 = e0 * e0.adjoint();
  ComplexMatrix s1 = e1 * e1.adjoint();
  concepts::Concept c0(concepts::ConceptKind::State, 2, [s0](const concepts::Label&) { return s0; });
  concepts::Concept c1(concepts::ConceptKind::State, 2, [s1](const concepts::Label&) { return s1; });

  // singleton class: returns the only member
  concepts::ConceptClass single(concepts::ConceptKind::State, 2, std::vector<concepts::Concept>{c0});
  std::vector<std::pair<concepts::Label, Eigen::VectorXcd>> data{{concepts::Label::real(0
), e0}};
  CHECK(pure_state_realizable_learner(data, single, rng).chosen == 0);

  // two orthogonal constant concepts: near-certain identification
  // (the exact per-run error at 10 samples is about 1.3%; 15 samples give a
  // comfortable margin for the >= 0.99 claim)
  concepts::ConceptClass both(concepts::ConceptKind::State, 2,
                              std::vector<concepts::Concept>{c0, c1});
  int correct = 0;
  const int runs = 200;
  for (int run = 0; run < runs; ++run) {
    std::vector<std::pair<concepts::Label, Eigen::VectorXcd>> d15;
    for (int i = 0; i < 15; ++i) d15.emplace_back(concepts::Label::real(i), e0);
    auto res = pure_state_realizable_learner(d15, both, rng);
    if (res.chosen == 0) ++correct;
  }
  CHECK(correct >= static_cast<int>(0.99 * runs));
}

TEST_CASE("config schedule defaults") {
  AlgorithmConfig cfg;
  cfg.eps = 0.1;
  cfg.delta = 0.25;
  CHECK(cfg.resolved_t() == static_cast<int>(std::ceil(std::log2(5.0))) + 2);
  int t = cfg.resolved_t();
  CHECK(cfg.resolved_k() ==
        static_cast<int>(std::ceil(std::log(2.0 * t / 0.25) / std::log(1.0 / 0.97))));
  CHECK(sizing_warning(100, 8, 0.1, cfg).find("advisory") != std::string::npos);
  CHECK(sizing_warning(3000000, 8, 0.1, cfg).empty());
}

TEST_CASE("threshold search trace consistency: accepted items have positive probability") {
  CounterRng rng(30, 0);
  auto inst = make_instance({400, 400}, {0.6, 0.3}, {{2u, 2u}, {2u, 0u}, {0u, 2u}});
  CommutingInstanceModel model(inst);
  AlgorithmConfig cfg;
  for (int t = 0; t < 40; ++t) {
    auto handle = model.whole_state(CounterRng(31, static_cast<uint64_t>(t)));
    std::vector<SearchItem> items{{0, false, 0.5}, {1, false, 0.4}, {2, false, 0.3}};
    auto res = threshold_search(*handle, items, cfg.eps, cfg.noise_scale, rng);
    if (res.accepted_item) {
      CHECK(res.accept_probs[static_cast<size_t>(*res.accepted_item)] > 0.0);
      CHECK(res.accept_probs.size() == static_cast<size_t>(*res.accepted_item) + 1);
    }
  }
}

TEST_CASE("erm replay audit: correct subcalls keep the interval around max mu") {
  std::vector<std::vector<uint32_t>> masks{{2u, 0u}, {0u, 2u}, {3u, 2u}};
  auto inst = make_instance({15000, 15000}, {0.8, 0.4}, masks);
  CommutingInstanceModel model(inst);
  double mu_max = 0;
  for (int c = 0; c < 3; ++c) mu_max = std::max(mu_max, model.concept_mean(c));
  AlgorithmConfig cfg;
  cfg.eps = 0.1;
  cfg.t_rounds = 3;
  cfg.k_repeats = 4;
  cfg.block_size = 400;
  for (int run = 0; run < 25; ++run) {
    CounterRng rng(900 + run, 0);
    auto res = erm_projector(model, cfg, rng);
    // replay: a step is individually correct when its interval move is
    // consistent with the known maximum
    double low = 0.0, high = 1.0, theta = 0.5;
    int failures = 0;
    bool all_correct = true;
    for (const auto& step : res.trace) {
      // reproduce the interval dynamics from the trace
      if (step.check_passed) {
        if (mu_max < theta - 2.0 * cfg.eps) all_correct = false;
        low = theta - 2.0 * cfg.eps;
        theta = 0.5 * (high + low);
        failures = 0;
      } else {
        ++failures;
        if (failures >= cfg.k_repeats) {
          if (mu_max > theta) all_correct = false;
          high = theta;
          theta = 0.5 * (high + low);
          failures = 0;
        }
      }
    }
    if (all_correct) {
      CHECK(low <= mu_max + 1e-12);
      CHECK(mu_max <= high + 6.0 * cfg.eps + 1e-12);
    }
  }
}

TEST_CASE("algorithm outcomes are bit-reproducible from (seed, stream)") {
  std::vector<std::vector<uint32_t>> masks{{2u, 0u}, {0u, 2u}};
  auto inst = make_instance({12000, 12000}, {0.75, 0.35}, masks);
  CommutingInstanceModel model(inst);
  AlgorithmConfig cfg;
  cfg.eps = 0.1;
  cfg.t_rounds = 3;
  cfg.k_repeats = 3;
  cfg.block_size = 300;
  CounterRng r1(77, 5), r2(77, 5);
  auto a = erm_projector(model, cfg, r1);
  auto b = erm_projector(model, cfg, r2);
  CHECK(a.c_star == b.c_star);
  CHECK(a.mu_hat == b.mu_hat);
  CHECK(a.trace.size() == b.trace.size());

  CounterRng e1(78, 6), e2(78, 6);
  cfg.q_copies = 8;
  auto ea = ere_shadow(model, cfg, e1);
  auto eb = ere_shadow(model, cfg, e2);
  CHECK(ea.estimates == eb.estimates);
  CHECK(ea.updates == eb.updates);
}
