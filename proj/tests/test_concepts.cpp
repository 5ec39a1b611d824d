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

#include "cqlearn/concepts.hpp"

#include <cmath>

#include "doctest.h"

using namespace cqlearn;
using namespace cqlearn::concepts;
using qcore::ComplexMatrix;

namespace {

RealFunctionFamily simple_gfam(double bound = 1.0) {
  std::vector<RealFunctionFamily::Basis> basis{
      {RealFunctionFamily::Feature::Linear, 0, 1.0}};
  std::vector<Label> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(Label::real(i / 10.0));
  return RealFunctionFamily(basis, {{-bound, bound}}, bound, 1.0, grid);
}



}  // namespace

TEST_CASE("losses") {
  Concept id_proj(ConceptKind::Projector, 2, [](const Label&) { return qcore::identity(2); });
  CHECK(loss(id_proj, Label::real(0), qcore::maximally_mixed(2)) == doctest::Approx(0.0));

  ComplexMatrix p0 = ComplexMatrix::Zero(2, 2);
  p0(0, 0) = 1.0;
  Concept proj0(ConceptKind::Projector, 2, [p0](const Label&) { return p0; });
  CHECK(loss(proj0, Label::real(0), qcore::maximally_mixed(2)) == doctest::Approx(0.5));

  Concept mixed_state(ConceptKind::State, 2,
                      [](const Label&) { return qcore::maximally_mixed(2).mat(); });
  CHECK(loss(mixed_state, Label::real(0), qcore::maximally_mixed(2)) == doctest::Approx(0.0));
}

TEST_CASE("empirical and true risk") {
  ComplexMatrix p0 = ComplexMatrix::Zero(2, 2);
  p0(0, 0) = 1.0;
  Concept proj0(ConceptKind::Projector, 2, [p0](const Label&) { return p0; });

  Eigen::VectorXcd e0(2), e1(2);
  e0 << 1, 0;
  e1 << 0, 1;
  std::vector<std::pair<Label, qcore::DensityMatrix>> dataset{
      {Label::real(0), qcore::pure_state(e0)},   // loss 0
      {Label::real(1), qcore::pure_state(e1)}};  // loss 1
  CHECK(empirical_risk(proj0, dataset) == doctest::Approx(0.5));

  // two-point source with hand-set losses 0.2 / 0.4
  CQSource src;
  src.support = {Label::real(0), Label::real(1)};
  src.support_probs = {0.5, 0.5};
  src.channel = [&](const Label& x) {
    double a = x.reals[0] < 0.5 ? 0.8 : 0.6;
    ComplexMatrix rho = ComplexMatrix::Zero(2, 2);
    rho(0, 0) = a;
    rho(1, 1) = 1 - a;
    return qcore::DensityMatrix(rho);
  };
  src.sample_label = [](CounterRng& rng) { return Label::real(rng.bernoulli(0.5) ? 1.0 : 0.0); };
  CounterRng rng(1, 0);
  auto est = true_risk(proj0, src, 0, rng);
  CHECK(est.value == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(est.se == 0.0);

  // Monte-Carlo agreement on the same instance without declared support
  CQSource src_mc = src;
  src_mc.support.clear();
  src_mc.support_probs.clear();
  auto mc = true_risk(proj0, src_mc, 40000, rng);
  CHECK(std::abs(mc.value - 0.3) < 4.0 * mc.se + 1e-3);
}

TEST_CASE("circuit classes") {
  CounterRng rng(2, 0);
  CircuitSpec spec{CircuitArch::LQC, 2, 3};
  auto prep = [](const Label& x) {
    Eigen::VectorXcd v(4);
    v.setZero();
    v(static_cast<int>(x.reals[0]) % 4) = 1.0;
    return ComplexMatrix(v * v.adjoint());
  };
  auto cls = make_circuit_class(spec, prep, ConceptKind::State);
  for (int rep = 0; rep < 50; ++rep) {
    Concept c = cls.sample(rng);
    Label x = Label::real(static_cast<double>(rng.uniform_int(4)));
    qcore::DensityMatrix out = c.eval_state(x);
    // unitary conjugation preserves the spectrum of the pure input
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(out.mat(), Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(1.0).epsilon(1e-9));
  }

  // brickwork and full unitary also produce valid outputs
  auto prep8 = [](const Label& x) {
    Eigen::VectorXcd v(8);
    v.setZero();
    v(static_cast<int>(x.reals[0]) % 8) = 1.0;
    return ComplexMatrix(v * v.adjoint());
  };
  auto brick = make_circuit_class({CircuitArch::Brickwork, 3, 2}, prep8, ConceptKind::State);
  CHECK_NOTHROW(brick.sample(rng).eval_state(Label::real(1)));
  auto full = make_circuit_class({CircuitArch::FullUnitary, 2, 1}, prep, ConceptKind::State);
  CHECK_NOTHROW(full.sample(rng).eval_state(Label::real(2)));
  CHECK_THROWS_AS(make_circuit_class({CircuitArch::LQC, 20, 1}, prep, ConceptKind::State),
                  capacity_error);
}

TEST_CASE("data-dependent circuit continuity") {
  // |g - g'| <= eps/(4 b e k') forces per-gate distance <= eps/(2 k')
  CounterRng rng(3, 0);
  const double b = 1.0;
  const int kprime = 2;
  for (int rep = 0; rep < 200; ++rep) {
    double eps = 0.05 + 0.4 * rng.uniform();
    ComplexMatrix h = qcore::random_hermitian(4, b, rng);
    qcore::HermitianMatrix hm(h, b);
    double g = rng.uniform();
    double gp = g + (rng.uniform() - 0.5) * 2.0 * eps / (4.0 * b * std::exp(1.0) * kprime);
    gp = std::clamp(gp, 0.0, 1.0);
    ComplexMatrix u = qcore::matrix_exp_hermitian(hm, g);
    ComplexMatrix up = qcore::matrix_exp_hermitian(hm, gp);
    CHECK(qcore::operator_norm(u - up) <= eps / (2.0 * kprime) + 1e-9);
  }

  // g == 0 on every slot reduces to the fixed-circuit class behavior
  auto gfam = simple_gfam();
  auto prep = [](const Label&) {
    Eigen::VectorXcd v(4);
    v.setZero();
    v(0) = 1.0;
    return ComplexMatrix(v * v.adjoint());
  };
  std::vector<qcore::HermitianMatrix> hams{qcore::HermitianMatrix(ComplexMatrix::Zero(4, 4), 0.0)};
  auto cls = make_data_dependent_circuit_class({CircuitArch::LQC, 2, 2}, {0}, hams, gfam, prep,
                                               ConceptKind::State);
  CHECK_NOTHROW(cls.sample(rng).eval_state(Label::real(0.3)));
}

TEST_CASE("Gibbs class") {
  auto gfam = simple_gfam();
  ComplexMatrix h0 = ComplexMatrix::Zero(2, 2);
  h0(1, 1) = 1.5;
  std::vector<qcore::HermitianMatrix> dict{
      qcore::HermitianMatrix(ComplexMatrix::Identity(2, 2), 1.0)};
  auto cls = make_gibbs_class(qcore::HermitianMatrix(h0, 1.5), dict, {{-0.5, 0.5}}, gfam);
  CHECK(cls.parameter_family().has_value());

  // g == 0: diagonal closed form (1/(1+e^-E), e^-E/(1+e^-E))
  auto c0 = cls.parameter_family()->build(std::vector<double>{0.3, 0.0});
  auto rho = c0.eval_state(Label::real(0.0));
  double z = 1.0 + std::exp(-1.5);
  CHECK(std::abs(rho.mat()(0, 0).real() - 1.0 / z) < 1e-12);
  CHECK(std::abs(rho.mat()(1, 1).real() - std::exp(-1.5) / z) < 1e-12);

  // trivial Hamiltonian: maximally mixed
  auto cls_trivial = make_gibbs_class(qcore::HermitianMatrix(ComplexMatrix::Zero(2, 2), 0.0), dict,
                                      {{0.0, 0.0}}, gfam);
  auto mixed = cls_trivial.parameter_family()->build(std::vector<double>{0.0, 0.0});
  CHECK((mixed.eval_state(Label::real(0.7)).mat() - qcore::maximally_mixed(2).mat())
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  // every sampled output has strictly positive eigenvalues
  CounterRng rng(4, 0);
  for (int rep = 0; rep < 100; ++rep) {
    auto c = cls.sample(rng);
    auto out = c.eval_state(Label::real(rng.uniform()));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(out.mat(), Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("phase-shift class preserves spectra") {
  auto gfam = simple_gfam();
  CounterRng rng(5, 0);
  std::vector<qcore::HermitianMatrix> dict{
      qcore::HermitianMatrix(qcore::random_hermitian(2, 1.0, rng), 1.0)};
  auto probe = [](const Label&) { return qcore::maximally_mixed(2).mat(); };
  auto cls2 = make_phaseshift_class(dict, {{-1.0, 1.0}}, gfam, probe, ConceptKind::State);
  for (int rep = 0; rep < 50; ++rep) {
    auto c = cls2.sample(rng);
    auto out = c.eval_state(Label::real(rng.uniform()));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(out.mat(), Eigen::EigenvaluesOnly);
    CHECK(std::abs(es.eigenvalues()(0) - 0.5) < 1e-10);
    CHECK(std::abs(es.eigenvalues()(1) - 0.5) < 1e-10);
  }
}

TEST_CASE("low-energy class") {
  auto gfam = simple_gfam();
  ComplexMatrix h0 = ComplexMatrix::Zero(3, 3);
  h0(1, 1) = 2.0;
  h0(2, 2) = 4.0;
  const double energy = 1.0, delta = 0.25;
  std::vector<qcore::HermitianMatrix> dict{
      qcore::HermitianMatrix(ComplexMatrix::Identity(3, 3) * 0.2, 0.2)};
  auto cls =
      make_lowenergy_class(qcore::HermitianMatrix(h0, 4.0), dict, {{-1.0, 1.0}}, gfam, energy, delta);
  auto c0 = cls.parameter_family()->build(std::vector<double>{1.0, 0.0});
  auto p = c0.eval_projector(Label::real(0.0));
  CHECK(p.rank() == 1);

  // gap violation is rejected
  CHECK_THROWS_AS(make_lowenergy_class(qcore::HermitianMatrix(h0, 4.0), dict, {{-1.0, 1.0}}, gfam,
                                       2.1, delta),
                  precondition_error);
}

TEST_CASE("restriction count") {
  ComplexMatrix p0 = ComplexMatrix::Zero(2, 2);
  p0(0, 0) = 1.0;
  Concept a(ConceptKind::Projector, 2, [p0](const Label&) { return p0; });
  Concept b(ConceptKind::Projector, 2, [p0](const Label&) { return p0; });  // duplicate
  Concept c(ConceptKind::Projector, 2,
            [](const Label&) { return ComplexMatrix(qcore::identity(2)); });
  ConceptClass cls(ConceptKind::Projector, 2, std::vector<Concept>{a, b, c});
  std::vector<Label> labels{Label::real(0), Label::real(1)};
  CHECK(restriction_count(cls, labels) == 2);
  ConceptClass single(ConceptKind::Projector, 2, std::vector<Concept>{a});
  CHECK(restriction_count(single, labels) == 1);
}

TEST_CASE("generated concepts pass the invariants of their kind") {
  CounterRng rng(6, 0);
  auto gfam = simple_gfam();
  ComplexMatrix h0 = qcore::random_hermitian(2, 1.0, rng);
  std::vector<qcore::HermitianMatrix> dict{
      qcore::HermitianMatrix(qcore::random_hermitian(2, 0.5, rng), 0.5)};
  auto gibbs = make_gibbs_class(qcore::HermitianMatrix(h0, 1.0), dict, {{-1.0, 1.0}}, gfam);
  for (int rep = 0; rep < 200; ++rep) {
    CHECK_NOTHROW(gibbs.sample(rng).eval_state(Label::real(rng.uniform())));
  }
}

TEST_CASE("class descriptors load from plain text") {
  auto gibbs = load_concept_class(
      "family = gibbs\n"
      "dim = 2\n"
      "seed = 3   # dictionary draw\n"
      "weight_lo = -0.5\nweight_hi = 0.5\n");
  CHECK(gibbs.kind() == ConceptKind::State);
  CHECK(gibbs.dim() == 2);
  CounterRng rng(1, 0);
  CHECK_NOTHROW(gibbs.sample(rng).eval_state(Label::real(0.5)));

  auto circuit = load_concept_class("family = circuit_lqc\nqubits = 2\ndepth = 2\n");
  CHECK(circuit.dim() == 4);
  CHECK_NOTHROW(circuit.sample(rng).eval_state(Label::real(1)));

  auto low = load_concept_class("family = low_energy\ndim = 3\nenergy = 1.0\ndelta = 0.2\n");
  CHECK(low.kind() == ConceptKind::Projector);
  CHECK_NOTHROW(low.sample(rng).eval_projector(Label::real(0.3)));

  // identical descriptors name identical classes
  auto a = load_concept_class("family = phase_shift\nseed = 9\n");
  auto b = load_concept_class("family = phase_shift\nseed = 9\n");
  CounterRng ra(2, 0), rb(2, 0);
  CHECK((a.sample(ra)(Label::real(0.2)) - b.sample(rb)(Label::real(0.2))).cwiseAbs().maxCoeff() <
        1e-15);

  CHECK_THROWS_AS(load_concept_class("family = unknown\n"), contract_error);
  CHECK_THROWS_AS(load_concept_class("dim = 2\n"), contract_error);
}

TEST_CASE("1000 random (concept, label) draws per family pass their kind invariants") {
  CounterRng rng(99, 0);
  auto gfam = simple_gfam();
  ComplexMatrix h0 = qcore::random_hermitian(2, 1.0, rng);
  std::vector<qcore::HermitianMatrix> dict{
      qcore::HermitianMatrix(qcore::random_hermitian(2, 0.5, rng), 0.5)};
  auto gibbs = make_gibbs_class(qcore::HermitianMatrix(h0, 1.0), dict, {{-1.0, 1.0}}, gfam);
  auto phase = make_phaseshift_class(
      dict, {{-1.0, 1.0}}, gfam, [](const Label&) { return qcore::maximally_mixed(2).mat(); },
      ConceptKind::State);
  ComplexMatrix hgap = ComplexMatrix::Zero(3, 3);
  hgap(1, 1) = 2.0;
  hgap(2, 2) = 4.0;
  std::vector<qcore::HermitianMatrix> small{
      qcore::HermitianMatrix(ComplexMatrix::Identity(3, 3) * 0.2, 0.2)};
  auto low = make_lowenergy_class(qcore::HermitianMatrix(hgap, 4.0), small, {{-1.0, 1.0}}, gfam,
                                  1.0, 0.25);
  auto prep = [](const Label& x) {
    Eigen::VectorXcd v(4);
    v.setZero();
    v(static_cast<int>(x.reals[0]) % 4) = 1.0;
    return ComplexMatrix(v * v.adjoint());
  };
  auto circ = make_circuit_class({CircuitArch::LQC, 2, 2}, prep, ConceptKind::State);

  for (int draw = 0; draw < 1000; ++draw) {
    Label x = Label::real(rng.uniform());
    CHECK_NOTHROW(gibbs.sample(rng).eval_state(x));
    CHECK_NOTHROW(phase.sample(rng).eval_state(x));
    CHECK_NOTHROW(low.sample(rng).eval_projector(x));
    CHECK_NOTHROW(circ.sample(rng).eval_state(Label::real(rng.uniform_int(4))));
  }
}
