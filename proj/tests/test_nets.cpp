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

#include "cqlearn/batching.hpp"
#include "cqlearn/serialization.hpp"

#include "doctest.h"

using namespace cqlearn;
using namespace cqlearn::nets;
using concepts::Concept;
using concepts::ConceptClass;
using concepts::ConceptKind;
using concepts::Label;
using qcore::ComplexMatrix;

namespace {

Concept constant_state(const qcore::DensityMatrix& rho) {
  ComplexMatrix m = rho.mat();
  return Concept(ConceptKind::State, m.rows(), [m](const Label&) { return m; });
}

std::vector<Label> unit_labels(int n) {
  std::vector<Label> out;
  for (int i = 0; i < n; ++i) out.push_back(Label::real(i));
  return out;
}

}  // namespace

TEST_CASE("pseudometric basics") {
  Eigen::VectorXcd e0(2), e1(2);
  e0 << 1, 0;
  e1 << 0, 1;
  Concept a = constant_state(qcore::pure_state(e0));
  Concept b = constant_state(qcore::pure_state(e1));
  auto labels = unit_labels(3);
  CHECK(pseudometric(a, a, labels, NormIndex::TraceNorm) == doctest::Approx(0.0));
  // orthogonal pure states: trace norm of the difference is 2
  CHECK(pseudometric(a, b, labels, NormIndex::TraceNorm) == doctest::Approx(2.0).epsilon(1e-12));

  // random pair vs direct per-label summation
  CounterRng rng(1, 0);
  Concept c = constant_state(qcore::random_density(2, rng));
  Concept d = constant_state(qcore::random_density(2, rng));
  double direct = 0;
  for (const auto& x : labels) direct += qcore::trace_norm(c(x) - d(x));
  direct /= labels.size();
  CHECK(pseudometric(c, d, labels, NormIndex::TraceNorm) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("greedy net: degenerate cases") {
  CounterRng rng(2, 0);
  Eigen::VectorXcd e0(2);
  e0 << 1, 0;
  Concept a = constant_state(qcore::pure_state(e0));
  auto labels = unit_labels(2);

  ConceptClass one(ConceptKind::State, 2, std::vector<Concept>{a});
  auto net1 = build_empirical_net(one, labels, 0.1, NormIndex::TraceNorm, 0, rng);
  CHECK(net1.size() == 1);

  // two concepts at pseudodistance zero collapse to one member
  ConceptClass two(ConceptKind::State, 2, std::vector<Concept>{a, a});
  auto net2 = build_empirical_net(two, labels, 0.1, NormIndex::TraceNorm, 0, rng);
  CHECK(net2.size() == 1);
}

TEST_CASE("greedy net covers a finite class (exhaustive audit)") {
  CounterRng rng(3, 0);
  std::vector<Concept> members;
  for (int i = 0; i < 20; ++i) members.push_back(constant_state(qcore::random_density(2, rng)));
  ConceptClass cls(ConceptKind::State, 2, members);
  auto labels = unit_labels(2);
  const double eps = 0.1;
  auto net = build_empirical_net(cls, labels, eps, NormIndex::TraceNorm, 0, rng);
  CHECK_FALSE(net.audited_on_sample_only);

  // brute-force audit: every member within eps of some net member
  for (const auto& c : members) {
    double best = 1e9;
    for (const auto& m : net.members)
      best = std::min(best, pseudometric(c, m, labels, NormIndex::TraceNorm));
    CHECK(best <= eps + 1e-12);
  }
  CHECK(net.max_assignment_distance() <= eps + 1e-12);
}

TEST_CASE("net size is monotone in eps on the same candidate set") {
  CounterRng rng(4, 0);
  std::vector<Concept> members;
  for (int i = 0; i < 40; ++i) members.push_back(constant_state(qcore::random_density(2, rng)));
  ConceptClass cls(ConceptKind::State, 2, members);
  auto labels = unit_labels(2);
  size_t prev = 0;
  for (double eps : {0.4, 0.2, 0.1, 0.05}) {
    auto net = build_empirical_net(cls, labels, eps, NormIndex::TraceNorm, 0, rng);
    CHECK(net.size() >= prev);
    prev = net.size();
  }
}

TEST_CASE("loss-Lipschitz transfer") {
  // |R(g1) - R(g2)| <= (1/2)||g1 - g2||_{1,1,x} for states and
  // <= ||g1 - g2||_{1,inf,x} for projectors
  CounterRng rng(5, 0);
  auto labels = unit_labels(4);
  for (int rep = 0; rep < 200; ++rep) {
    Concept g1 = constant_state(qcore::random_density(2, rng));
    Concept g2 = constant_state(qcore::random_density(2, rng));
    std::vector<std::pair<Label, qcore::DensityMatrix>> dataset;
    for (const auto& x : labels) dataset.emplace_back(x, qcore::random_density(2, rng));
    double gap = std::abs(concepts::empirical_risk(g1, dataset) -
                          concepts::empirical_risk(g2, dataset));
    CHECK(gap <= 0.5 * pseudometric(g1, g2, labels, NormIndex::TraceNorm) + 1e-10);

    qcore::Projector p1 = qcore::random_projector(2, 1, rng);
    qcore::Projector p2 = qcore::random_projector(2, 1, rng);
    Concept h1(ConceptKind::Projector, 2, [m = p1.mat()](const Label&) { return m; });
    Concept h2(ConceptKind::Projector, 2, [m = p2.mat()](const Label&) { return m; });
    double gap_p = std::abs(concepts::empirical_risk(h1, dataset) -
                            concepts::empirical_risk(h2, dataset));
    CHECK(gap_p <= pseudometric(h1, h2, labels, NormIndex::OperatorNorm) + 1e-10);
  }
}

TEST_CASE("parameter grids") {
  concepts::ParameterFamily fam;
  fam.name = "toy";
  fam.boxes = {{0.0, 1.0}};
  fam.build = [](std::span<const double>) {
    return constant_state(qcore::maximally_mixed(2));
  };
  fam.induced_eps = [](double e) { return 2.0 * e; };
  auto net = parameter_net(fam, 0.25);
  CHECK(net.points.size() == 5);
  CHECK(net.points.front()[0] == doctest::Approx(0.0));
  CHECK(net.points.back()[0] == doctest::Approx(1.0));
  CHECK(net.induced_concept_eps == doctest::Approx(0.5));
}

TEST_CASE("covering bound calculators") {
  // ball bound: (1 + 2R/eps)^K = 3^4 = 81
  CHECK(std::pow(10.0, bound_ball(1.0, 1.0, 4.0).log10_bound) == doctest::Approx(81.0).epsilon(1e-9));

  CHECK(bound_full_unitary(1, 6.0).log10_bound == doctest::Approx(0.0));

  double lqc = bound_lqc(4, 2, 0.5).log10_bound;
  CHECK(lqc == doctest::Approx(2.0 * (std::log10(4.0) + 32.0 * std::log10(24.0))).epsilon(1e-12));
  CHECK(std::abs(lqc - 89.54) < 0.01);

  double fat = bound_fatshatter(16, 1.0, 1.0, 1.0).log10_bound;
  double expect = std::log10(2.0) + std::log2(64.0 * std::exp(1.0)) * std::log10(64.0);
  CHECK(fat == doctest::Approx(expect).epsilon(1e-12));

  double brick = bound_brickwork(2, 1, 0.5).log10_bound;
  CHECK(brick == doctest::Approx(64.0 * std::log10(24.0)).epsilon(1e-12));
}

TEST_CASE("uniform convergence bound") {
  // vacuous at eps -> 0
  CHECK(uniform_convergence_bound(100, 1e-9, 0.0, 1.0) >= 1.0);
  // spot value 4 e^{5 - 12.5}
  CHECK(uniform_convergence_bound(10000, 0.2, 5.0, 1.0) ==
        doctest::Approx(4.0 * std::exp(-7.5)).epsilon(1e-12));
  // monotone decreasing in n
  CHECK(uniform_convergence_bound(2000, 0.2, 5.0, 1.0) <
        uniform_convergence_bound(1000, 0.2, 5.0, 1.0));
}

TEST_CASE("Gibbs parameter net: grid points within eps obey the certified radius") {
  CounterRng rng(6, 0);
  std::vector<concepts::RealFunctionFamily::Basis> basis{
      {concepts::RealFunctionFamily::Feature::Linear, 0, 1.0}};
  std::vector<Label> grid;
  for (int i = 0; i <= 8; ++i) grid.push_back(Label::real(i / 8.0));
  concepts::RealFunctionFamily gfam(basis, {{-1.0, 1.0}}, 1.0, 1.0, grid);

  ComplexMatrix h0 = qcore::random_hermitian(2, 1.0, rng);
  std::vector<qcore::HermitianMatrix> dict{
      qcore::HermitianMatrix(qcore::random_hermitian(2, 0.8, rng), 0.8)};
  auto cls = concepts::make_gibbs_class(qcore::HermitianMatrix(h0, 1.0), dict, {{-1.0, 1.0}}, gfam);
  const auto& fam = *cls.parameter_family();

  const double eps_param = 0.5;
  auto pnet = parameter_net(fam, eps_param);
  auto labels = grid;
  // audit: pairs of grid points within eps_param in every coordinate stay
  // within the induced concept-space radius
  int audited = 0;
  for (size_t a = 0; a < pnet.points.size(); ++a) {
    for (size_t b = a + 1; b < pnet.points.size(); ++b) {
      double dp = 0;
      for (size_t j = 0; j < pnet.points[a].size(); ++j)
        dp = std::max(dp, std::abs(pnet.points[a][j] - pnet.points[b][j]));
      if (dp > eps_param + 1e-12) continue;
      Concept ca = fam.build(pnet.points[a]);
      Concept cb = fam.build(pnet.points[b]);
      double dist = pseudometric(ca, cb, labels, NormIndex::TraceNorm);
      CHECK(dist <= pnet.induced_concept_eps + 1e-9);
      ++audited;
    }
  }
  CHECK(audited > 0);
}

TEST_CASE("serialization round trips") {
  CounterRng rng(10, 0);
  auto rho = qcore::random_density(3, rng);
  auto j = cqlearn::serialization::to_json(rho);
  CHECK(j["dim"] == 3);
  auto back = cqlearn::serialization::density_from_json(j);
  CHECK((back.mat() - rho.mat()).cwiseAbs().maxCoeff() < 1e-15);

  auto p = qcore::random_projector(3, 2, rng);
  auto jp = cqlearn::serialization::to_json(p);
  CHECK((cqlearn::serialization::projector_from_json(jp).mat() - p.mat()).cwiseAbs().maxCoeff() <
        1e-15);

  auto plan = cqlearn::batching::draw_batches(30, 2, 5, rng);
  auto jb = cqlearn::serialization::to_json(plan, 10);
  CHECK(jb["n"] == 30);
  CHECK(jb["indices"].size() == 2);

  std::vector<Concept> members{constant_state(qcore::random_density(2, rng)),
                               constant_state(qcore::random_density(2, rng))};
  ConceptClass cls(ConceptKind::State, 2, members);
  auto net = build_empirical_net(cls, unit_labels(2), 0.05, NormIndex::TraceNorm, 0, rng);
  auto jn = cqlearn::serialization::to_json(net);
  CHECK(jn["eps"] == 0.05);
  CHECK(jn["members"].size() == net.size());
}
