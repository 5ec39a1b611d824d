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

#include <algorithm>
#include <cmath>
#include <limits>

namespace cqlearn::qcore {

namespace {

using Eigen::Index;
using SAES = Eigen::SelfAdjointEigenSolver<ComplexMatrix>;

void require_square(const ComplexMatrix& m, const char* who) {
  if (m.rows() != m.cols()) throw contract_error(std::string(who) + ": matrix must be square");
  if (m.rows() == 0) throw contract_error(std::string(who) + ": dimension must be positive");
}

void require_same_dim(const ComplexMatrix& a, const ComplexMatrix& b, const char* who) {
  if (a.rows() != b.rows()) throw contract_error(std::string(who) + ": dimension mismatch");
}

// Eigenvalues of (m + m^dagger)/2; the symmetrization suppresses roundoff
// asymmetry without changing Hermitian inputs.
Eigen::VectorXd herm_eigenvalues(const ComplexMatrix& m) {
  SAES es(((m + m.adjoint()) * 0.5).eval(), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
  SAES es(((m + m.adjoint()) * 0.5).eval());
  Eigen::VectorXd ev = es.eigenvalues();
  for (Index i = 0; i < ev.size(); ++i) {
    // roundoff negatives in (-kTolPsd, 0) are clamped before the square root
    ev(i) = ev(i) > 0 ? std::sqrt(ev(i)) : 0.0;
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

bool is_hermitian(const ComplexMatrix& m, double tol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

void require_finite(const ComplexMatrix& m) {
  if (!m.allFinite()) throw contract_error("matrix entries must be finite");
}

DensityMatrix::DensityMatrix(ComplexMatrix m) : mat_(std::move(m)) {
  require_square(mat_, "DensityMatrix");
  require_finite(mat_);
  if (!is_hermitian(mat_)) throw contract_error("DensityMatrix: not Hermitian within 1e-10");
  Eigen::VectorXd ev = herm_eigenvalues(mat_);
  if (ev.minCoeff() < -kTolPsd)
    throw contract_error("DensityMatrix: negative eigenvalue below -1e-10");
  if (std::abs(mat_.trace().real() - 1.0) > kTolTrace || std::abs(mat_.trace().imag()) > kTolTrace)
    throw contract_error("DensityMatrix: trace must be 1 within 1e-10");
}

Projector::Projector(ComplexMatrix m) : mat_(std::move(m)) {
  require_square(mat_, "Projector");
  require_finite(mat_);
  if (!is_hermitian(mat_)) throw contract_error("Projector: not Hermitian within 1e-10");
  if (operator_norm(mat_ * mat_ - mat_) > kTolIdempotent)
    throw contract_error("Projector: not idempotent within 1e-9");
}

Eigen::Index Projector::rank() const {
  return static_cast<Index>(std::llround(mat_.trace().real()));
}

Projector Projector::complement() const {
  return Projector(ComplexMatrix::Identity(dim(), dim()) - mat_);
}

HermitianMatrix::HermitianMatrix(ComplexMatrix m, double norm_bound)
    : mat_(std::move(m)), norm_bound_(norm_bound) {
  require_square(mat_, "HermitianMatrix");
  require_finite(mat_);
  if (norm_bound_ < 0) throw contract_error("HermitianMatrix: norm bound must be nonnegative");
  if (!is_hermitian(mat_)) throw contract_error("HermitianMatrix: not Hermitian within 1e-10");
  if (operator_norm(mat_) > norm_bound_ + 1e-9)
    throw contract_error("HermitianMatrix: operator norm exceeds declared bound");
}

double trace_distance_raw(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_dim(a, b, "trace_distance");
  return 0.5 * trace_norm(a - b);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  double d = trace_distance_raw(a.mat(), b.mat());
  return std::clamp(d, 0.0, 1.0);
}

double fidelity_raw(const ComplexMatrix& a, const ComplexMatrix& b) {
  // Extended precision: the square root of a near-singular state amplifies
  // rounding as eps / sqrt(lambda), which double precision cannot keep
  // below the 1e-8 contract on post-measurement states.
  require_same_dim(a, b, "fidelity");
  using LdMatrix = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;
  auto sqrt_ld = [](const LdMatrix& m) {
    LdMatrix h = (m + m.adjoint()) * static_cast<long double>(0.5);
    Eigen::SelfAdjointEigenSolver<LdMatrix> es(h);
    Eigen::Matrix<long double, Eigen::Dynamic, 1> ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = ev(i) > 0 ? std::sqrt(ev(i)) : 0;
    return LdMatrix(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint());
  };
  LdMatrix al = a.cast<std::complex<long double>>();
  LdMatrix bl = b.cast<std::complex<long double>>();
  LdMatrix prod = sqrt_ld(al) * sqrt_ld(bl);
  Eigen::JacobiSVD<LdMatrix> svd(prod);
  long double sum = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) sum += svd.singularValues()(i);
  return static_cast<double>(sum);
}

double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  return std::clamp(fidelity_raw(a.mat(), b.mat()), 0.0, 1.0);
}

double bures_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return std::sqrt(std::max(0.0, 2.0 * (1.0 - fidelity(a, b))));
}

Projector positive_part_projector(const ComplexMatrix& hermitian) {
  require_square(hermitian, "positive_part_projector");
  if (!is_hermitian(hermitian, 1e-9))
    throw contract_error("positive_part_projector: input must be Hermitian");
  SAES es(((hermitian + hermitian.adjoint()) * 0.5).eval());
  const Eigen::VectorXd& ev = es.eigenvalues();
  ComplexMatrix p = ComplexMatrix::Zero(hermitian.rows(), hermitian.cols());
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > kTolPositivePart) {
      p.noalias() += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
    }
  }
  return Projector(std::move(p));
}

Projector helstrom_projector(const DensityMatrix& si, const DensityMatrix& sj) {
  require_same_dim(si.mat(), sj.mat(), "helstrom_projector");
  return positive_part_projector(si.mat() - sj.mat());
}

ComplexMatrix matrix_exp_hermitian(const HermitianMatrix& h, double scale, ExpMode mode) {
  SAES es(h.mat());
  const Eigen::VectorXd& ev = es.eigenvalues();
  ComplexVector phases(ev.size());
  for (Index i = 0; i < ev.size(); ++i) {
    if (mode == ExpMode::Imaginary) {
      phases(i) = std::exp(std::complex<double>(0.0, scale * ev(i)));
    } else {
      phases(i) = std::exp(std::complex<double>(-scale * ev(i), 0.0));
    }
  }
  ComplexMatrix out = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  if (mode == ExpMode::Imaginary) {
    ComplexMatrix gram = out * out.adjoint();
    if (operator_norm(gram - ComplexMatrix::Identity(out.rows(), out.cols())) > 1e-9)
      throw degenerate_error("matrix_exp_hermitian: result failed unitarity check");
  } else {
    if (herm_eigenvalues(out).minCoeff() < -1e-9)
      throw degenerate_error("matrix_exp_hermitian: result failed positivity check");
  }
  return out;
}

DensityMatrix gibbs_state(const ComplexMatrix& hamiltonian) {
  require_square(hamiltonian, "gibbs_state");
  if (!is_hermitian(hamiltonian, 1e-9))
    throw contract_error("gibbs_state: Hamiltonian must be Hermitian");
  SAES es(((hamiltonian + hamiltonian.adjoint()) * 0.5).eval());
  Eigen::VectorXd ev = es.eigenvalues();
  // shift by the ground energy for a stable exponential
  double e0 = ev.minCoeff();
  Eigen::VectorXd w(ev.size());
  for (Index i = 0; i < ev.size(); ++i) w(i) = std::exp(-(ev(i) - e0));
  w /= w.sum();
  ComplexMatrix rho =
      es.eigenvectors() * w.cast<std::complex<double>>().asDiagonal() * es.eigenvectors().adjoint();
  return DensityMatrix((rho + rho.adjoint()) * 0.5);
}

Projector low_energy_projector_raw(const ComplexMatrix& hermitian, double energy) {
  require_square(hermitian, "low_energy_projector");
  if (!is_hermitian(hermitian, 1e-9))
    throw contract_error("low_energy_projector: input must be Hermitian");
  SAES es(((hermitian + hermitian.adjoint()) * 0.5).eval());
  const Eigen::VectorXd& ev = es.eigenvalues();
  ComplexMatrix p = ComplexMatrix::Zero(hermitian.rows(), hermitian.cols());
  for (Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i) - energy) < kTolSpectralGap)
      throw degenerate_error("low_energy_projector: eigenvalue within 1e-8 of the threshold");
    if (ev(i) < energy) {
      p.noalias() += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
    }
  }
  return Projector(std::move(p));
}

Projector low_energy_projector(const HermitianMatrix& h, double energy) {
  return low_energy_projector_raw(h.mat(), energy);
}

ComplexMatrix sqrt_psd(const ComplexMatrix& m) {
  require_square(m, "sqrt_psd");
  return psd_sqrt(m);
}

double operator_norm(const ComplexMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(0);
}

double trace_norm(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues().sum();
}

double schatten_norm(const ComplexMatrix& m, double q) {
  if (q < 1.0) throw contract_error("schatten_norm: q must be >= 1");
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  const auto& sv = svd.singularValues();
  if (std::isinf(q)) return sv.size() ? sv(0) : 0.0;
  double acc = 0.0;
  for (Index i = 0; i < sv.size(); ++i) acc += std::pow(sv(i), q);
  return std::pow(acc, 1.0 / q);
}

ComplexMatrix identity(Index d) { return ComplexMatrix::Identity(d, d); }

DensityMatrix maximally_mixed(Index d) {
  return DensityMatrix(ComplexMatrix::Identity(d, d) / static_cast<double>(d));
}

DensityMatrix pure_state(const ComplexVector& psi) {
  double n2 = psi.squaredNorm();
  if (n2 <= 0) throw contract_error("pure_state: zero vector");
  ComplexVector v = psi / std::sqrt(n2);
  return DensityMatrix(v * v.adjoint());
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

ComplexMatrix random_unitary(Index d, CounterRng& rng) {
  ComplexMatrix g(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = std::complex<double>(rng.gaussian(), rng.gaussian());
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < d; ++i) {
    std::complex<double> rii = r(i, i);
    double a = std::abs(rii);
    q.col(i) *= (a > 0 ? rii / a : 1.0);
  }
  return q;
}

DensityMatrix random_density(Index d, CounterRng& rng) {
  ComplexMatrix g(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = std::complex<double>(rng.gaussian(), rng.gaussian());
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix((rho + rho.adjoint()) * 0.5);
}

DensityMatrix random_pure(Index d, CounterRng& rng) {
  ComplexVector v(d);
  for (Index i = 0; i < d; ++i) v(i) = std::complex<double>(rng.gaussian(), rng.gaussian());
  return pure_state(v);
}

Projector random_projector(Index d, Index rank, CounterRng& rng) {
  if (rank < 0 || rank > d) throw contract_error("random_projector: rank out of range");
  ComplexMatrix u = random_unitary(d, rng);
  ComplexMatrix p = ComplexMatrix::Zero(d, d);
  for (Index i = 0; i < rank; ++i) p.noalias() += u.col(i) * u.col(i).adjoint();
  return Projector((p + p.adjoint()) * 0.5);
}

ComplexMatrix random_hermitian(Index d, double norm_bound, CounterRng& rng) {
  ComplexMatrix g(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = std::complex<double>(rng.gaussian(), rng.gaussian());
  ComplexMatrix h = (g + g.adjoint()) * 0.5;
  double nrm = operator_norm(h);
  if (nrm > 0) h *= (norm_bound / nrm) * rng.uniform();
  return h;
}

DensityMatrix random_diagonal_density(Index d, CounterRng& rng) {
  Eigen::VectorXd w(d);
  double total = 0;
  for (Index i = 0; i < d; ++i) {
    w(i) = -std::log(1.0 - rng.uniform());
    total += w(i);
  }
  ComplexMatrix rho = ComplexMatrix::Zero(d, d);
  for (Index i = 0; i < d; ++i) rho(i, i) = w(i) / total;
  return DensityMatrix(std::move(rho));
}

}  // namespace cqlearn::qcore
