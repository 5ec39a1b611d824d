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

#include "cqlearn/qcore.hpp"

#include <cmath>

#include "doctest.h"

using namespace cqlearn;
using namespace cqlearn::qcore;

namespace {

DensityMatrix ket0() {
  ComplexVector v(2);
  v << 1, 0;
  return pure_state(v);
}
DensityMatrix ket1() {
  ComplexVector v(2);
  v << 0, 1;
  return pure_state(v);
}
DensityMatrix ket_plus() {
  ComplexVector v(2);
  v << 1, 1;
  return pure_state(v);
}

}  // namespace

TEST_CASE("trace distance on pure states") {
  CHECK(trace_distance(ket0(), ket0()) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(trace_distance(ket0(), ket1()) == doctest::Approx(1.0).epsilon(1e-12));
  // pure-state closed form sqrt(1 - |<psi|phi>|^2) = 1/sqrt(2)
  CHECK(std::abs(trace_distance(ket0(), ket_plus()) - 0.7071067811865476) < 1e-12);
}

TEST_CASE("fidelity on pure states") {
  CHECK(fidelity(ket0(), ket0()) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fidelity(ket0(), ket1()) == doctest::Approx(0.0).epsilon(1e-10));
  // |<psi|phi>| = 1/sqrt(2)
  CHECK(std::abs(fidelity(ket0(), ket_plus()) - 0.7071067811865476) < 1e-10);
}

TEST_CASE("Bures distance") {
  CHECK(bures_distance(ket0(), ket0()) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(bures_distance(ket0(), ket1()) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK(std::abs(bures_distance(ket0(), ket_plus()) - std::sqrt(2.0 * (1.0 - 1.0 / std::sqrt(2.0)))) <
        1e-10);
}

TEST_CASE("dimension mismatch rejected") {
  CHECK_THROWS_AS(trace_distance(ket0(), maximally_mixed(3)), contract_error);
  CHECK_THROWS_AS(fidelity(ket0(), maximally_mixed(3)), contract_error);
}

TEST_CASE("Helstrom projector for orthogonal pure states") {
  Projector a = helstrom_projector(ket0(), ket1());
  CHECK((a.mat() - ket0().mat()).cwiseAbs().maxCoeff() < 1e-10);
  Projector zero = helstrom_projector(ket0(), ket0());
  CHECK(zero.mat().cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Helstrom identity on random pairs, d in {2,3,4}") {
  CounterRng rng(2024, 0);
  for (int d = 2; d <= 4; ++d) {
    for (int rep = 0; rep < 1000; ++rep) {
      DensityMatrix si = random_density(d, rng);
      DensityMatrix sj = random_density(d, rng);
      Projector a = helstrom_projector(si, sj);
      double lhs = trace_distance(si, sj);
      double rhs = ((si.mat() - sj.mat()) * a.mat()).trace().real();
      CHECK(std::abs(lhs - rhs) < 1e-9);
    }
  }
}

TEST_CASE("matrix exponential closed forms") {
  ComplexMatrix zero = ComplexMatrix::Zero(2, 2);
  HermitianMatrix h0(zero, 0.0);
  CHECK((matrix_exp_hermitian(h0, 1.0) - identity(2)).cwiseAbs().maxCoeff() < 1e-12);

  ComplexMatrix diag = ComplexMatrix::Zero(2, 2);
  diag(1, 1) = M_PI;
  HermitianMatrix h(diag, M_PI);
  ComplexMatrix u = matrix_exp_hermitian(h, 1.0, ExpMode::Imaginary);
  CHECK(std::abs(u(0, 0) - std::complex<double>(1, 0)) < 1e-12);
  CHECK(std::abs(u(1, 1) - std::complex<double>(-1, 0)) < 1e-9);
}

TEST_CASE("matrix exponential perturbation bound") {
  // ||e^{iH} - e^{iH'}|| <= ||H - H'|| e^{||H - H'||} e^{||H||}
  CounterRng rng(7, 1);
  for (int rep = 0; rep < 1000; ++rep) {
    ComplexMatrix h = random_hermitian(3, 1.5, rng);
    ComplexMatrix hp = random_hermitian(3, 1.5, rng);
    ComplexMatrix eh = matrix_exp_hermitian(HermitianMatrix(h, 1.5), 1.0);
    ComplexMatrix ehp = matrix_exp_hermitian(HermitianMatrix(hp, 1.5), 1.0);
    double lhs = operator_norm(eh - ehp);
    double dn = operator_norm(h - hp);
    double rhs = dn * std::exp(dn) * std::exp(operator_norm(h));
    CHECK(lhs <= rhs + 1e-9);
  }
}

TEST_CASE("Gibbs normalization bound on random pairs") {
  // || e^{-H}/Tr - e^{-H'}/Tr ||_1 <= 2 (e^{||H-H'||} - 1)
  CounterRng rng(8, 1);
  for (int rep = 0; rep < 1000; ++rep) {
    ComplexMatrix h = random_hermitian(3, 2.0, rng);
    ComplexMatrix hp = h + random_hermitian(3, 0.5, rng);
    DensityMatrix g = gibbs_state(h);
    DensityMatrix gp = gibbs_state(hp);
    double lhs = trace_norm(g.mat() - gp.mat());
    double rhs = 2.0 * (std::exp(operator_norm(h - hp)) - 1.0);
    CHECK(lhs <= rhs + 1e-9);
  }
}

TEST_CASE("Weyl perturbation on random Hermitian pairs") {
  CounterRng rng(9, 1);
  for (int rep = 0; rep < 1000; ++rep) {
    ComplexMatrix a = random_hermitian(4, 2.0, rng);
    ComplexMatrix b = a + random_hermitian(4, 0.7, rng);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> ea(a, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eb(b, Eigen::EigenvaluesOnly);
    double maxdiff = (ea.eigenvalues() - eb.eigenvalues()).cwiseAbs().maxCoeff();
    CHECK(maxdiff <= operator_norm(a - b) + 1e-10);
  }
}

TEST_CASE("spectral projector perturbation with a forced gap") {
  // For ||A - B|| <= eps and A free of eigenvalues in (theta-2eps, theta+2eps),
  // the spectral projectors below theta-eps satisfy ||E-F|| <= (pi/4eps)||A-B||.
  CounterRng rng(10, 1);
  const double eps = 0.1;
  const double theta = 0.0;
  int tested = 0;
  for (int rep = 0; rep < 2000 && tested < 1000; ++rep) {
    ComplexMatrix u = random_unitary(4, rng);
    Eigen::VectorXd ev(4);
    // eigenvalues pushed out of the forbidden band around theta
    for (int i = 0; i < 4; ++i) {
      double mag = 2.0 * eps + 2.0 * rng.uniform();
      ev(i) = (rng.uniform() < 0.5 ? -mag : mag);
    }
    ComplexMatrix a = u * ev.cast<std::complex<double>>().asDiagonal() * u.adjoint();
    a = (a + a.adjoint()) * 0.5;
    ComplexMatrix pert = random_hermitian(4, eps, rng);
    ComplexMatrix b = a + pert;
    Projector e = low_energy_projector_raw(a, theta - eps);
    Projector f = low_energy_projector_raw(b, theta - eps);
    double lhs = operator_norm(e.mat() - f.mat());
    double rhs = (M_PI / (4.0 * eps)) * operator_norm(a - b);
    CHECK(lhs <= rhs + 1e-9);
    ++tested;
  }
  CHECK(tested == 1000);
}

TEST_CASE("low-energy projector basics") {
  ComplexMatrix h = ComplexMatrix::Zero(2, 2);
  h(1, 1) = 1.0;
  Projector p = low_energy_projector_raw(h, 0.5);
  CHECK((p.mat() - ket0().mat()).cwiseAbs().maxCoeff() < 1e-12);
  Projector none = low_energy_projector_raw(h, -1.0);
  CHECK(none.mat().cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(low_energy_projector_raw(h, 1.0 + 1e-12), degenerate_error);
}

TEST_CASE("low-energy projector rank equals eigenvalue count") {
  CounterRng rng(11, 1);
  for (int rep = 0; rep < 200; ++rep) {
    ComplexMatrix h = random_hermitian(5, 3.0, rng);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
    // mid-gap threshold between two consecutive eigenvalues
    int cut = 1 + static_cast<int>(rng.uniform_int(3));
    double lo = es.eigenvalues()(cut - 1), hi = es.eigenvalues()(cut);
    if (hi - lo < 1e-6) continue;
    double energy = 0.5 * (lo + hi);
    Projector p = low_energy_projector_raw(h, energy);
    CHECK(p.rank() == cut);
  }
}

TEST_CASE("norms") {
  CHECK(operator_norm(identity(3)) == doctest::Approx(1.0));
  CHECK(trace_norm(identity(3)) == doctest::Approx(3.0));

  CounterRng rng(12, 1);
  // rank-1 uv^dag has trace norm ||u|| ||v||
  ComplexVector u(3), v(3);
  for (int i = 0; i < 3; ++i) {
    u(i) = std::complex<double>(rng.gaussian(), rng.gaussian());
    v(i) = std::complex<double>(rng.gaussian(), rng.gaussian());
  }
  ComplexMatrix m = u * v.adjoint();
  CHECK(trace_norm(m) == doctest::Approx(u.norm() * v.norm()).epsilon(1e-10));

  for (int rep = 0; rep < 200; ++rep) {
    ComplexMatrix r(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = std::complex<double>(rng.gaussian(), rng.gaussian());
    double n1 = schatten_norm(r, 1), n2 = schatten_norm(r, 2),
           ninf = schatten_norm(r, std::numeric_limits<double>::infinity());
    CHECK(n1 >= n2 - 1e-12);
    CHECK(n2 >= ninf - 1e-12);
    CHECK(operator_norm(r) == doctest::Approx(ninf).epsilon(1e-10));
  }
}

TEST_CASE("Fuchs-van de Graaf: trace distance below Bures distance") {
  CounterRng rng(13, 1);
  for (int rep = 0; rep < 1000; ++rep) {
    DensityMatrix a = random_density(3, rng);
    DensityMatrix b = random_density(3, rng);
    CHECK(trace_distance(a, b) <= bures_distance(a, b) + 1e-9);
  }
}

TEST_CASE("invariant validation catches bad inputs") {
  ComplexMatrix notherm(2, 2);
  notherm << 1.0, std::complex<double>(0, 1), 0.0, 0.0;
  CHECK_THROWS_AS((void)DensityMatrix{notherm}, contract_error);
  ComplexMatrix half = identity(2) * 0.5;
  CHECK_NOTHROW((void)DensityMatrix{half});
  CHECK_THROWS_AS((void)Projector{half}, contract_error);
  CHECK_THROWS_AS((void)HermitianMatrix(identity(2), 0.5), contract_error);
}

TEST_CASE("random generators produce valid objects") {
  CounterRng rng(14, 1);
  for (int rep = 0; rep < 50; ++rep) {
    ComplexMatrix u = random_unitary(4, rng);
    CHECK(operator_norm(u * u.adjoint() - identity(4)) < 1e-10);
    CHECK_NOTHROW(random_density(4, rng));
    CHECK_NOTHROW(random_pure(4, rng));
    CHECK_NOTHROW(random_projector(4, 2, rng));
  }
}
