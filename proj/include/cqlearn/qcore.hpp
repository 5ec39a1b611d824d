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

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "cqlearn/errors.hpp"
#include "cqlearn/rng.hpp"

namespace cqlearn::qcore {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Tolerance ladder. A single eigendecomposition backend (Eigen's
// SelfAdjointEigenSolver) serves every spectral operation.
inline constexpr double kTolHermitian = 1e-10;
inline constexpr double kTolPsd = 1e-10;
inline constexpr double kTolTrace = 1e-10;
inline constexpr double kTolIdempotent = 1e-9;
inline constexpr double kTolPositivePart = 1e-12;
inline constexpr double kTolSpectralGap = 1e-8;

bool is_hermitian(const ComplexMatrix& m, double tol = kTolHermitian);
void require_finite(const ComplexMatrix& m);

/// Positive semi-definite, unit-trace operator.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m);
  const ComplexMatrix& mat() const { return mat_; }
  Eigen::Index dim() const { return mat_.rows(); }

 private:
  ComplexMatrix mat_;
};

/// Hermitian idempotent operator.
class Projector {
 public:
  explicit Projector(ComplexMatrix m);
  const ComplexMatrix& mat() const { return mat_; }
  Eigen::Index dim() const { return mat_.rows(); }
  Eigen::Index rank() const;
  Projector complement() const;

 private:
  ComplexMatrix mat_;
};

/// Hermitian operator with a declared operator-norm bound.
class HermitianMatrix {
 public:
  HermitianMatrix(ComplexMatrix m, double norm_bound);
  const ComplexMatrix& mat() const { return mat_; }
  double norm_bound() const { return norm_bound_; }
  Eigen::Index dim() const { return mat_.rows(); }

 private:
  ComplexMatrix mat_;
  double norm_bound_;
};

// --- distances ---------------------------------------------------------

/// d_tr = (1/2) ||a - b||_1.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);
/// F = || sqrt(a) sqrt(b) ||_1, in [0, 1].
double fidelity(const DensityMatrix& a, const DensityMatrix& b);
/// sqrt(2 (1 - F(a, b))).
double bures_distance(const DensityMatrix& a, const DensityMatrix& b);

// Raw-matrix variants for evolved states that are kept unwrapped.
double trace_distance_raw(const ComplexMatrix& a, const ComplexMatrix& b);
double fidelity_raw(const ComplexMatrix& a, const ComplexMatrix& b);

// --- spectral operations -----------------------------------------------

/// Projector onto the strictly positive part of si - sj. Realizes
/// d_tr(si, sj) = Tr(si A) - Tr(sj A). Eigenvalues below kTolPositivePart
/// are excluded, so ties break toward smaller rank.
Projector helstrom_projector(const DensityMatrix& si, const DensityMatrix& sj);
Projector positive_part_projector(const ComplexMatrix& hermitian);

enum class ExpMode { Imaginary, Real };

/// exp(i * scale * H) for Imaginary mode (unitary result),
/// exp(-scale * H) for Real mode (positive result).
ComplexMatrix matrix_exp_hermitian(const HermitianMatrix& h, double scale,
                                   ExpMode mode = ExpMode::Imaginary);

/// Normalized Gibbs state exp(-H) / Tr[exp(-H)].
DensityMatrix gibbs_state(const ComplexMatrix& hamiltonian);

/// Spectral projector onto eigenvalues strictly below `energy`. Throws
/// degenerate_error if any eigenvalue is within kTolSpectralGap of `energy`.
Projector low_energy_projector(const HermitianMatrix& h, double energy);
Projector low_energy_projector_raw(const ComplexMatrix& hermitian, double energy);

// --- norms --------------------------------------------------------------

double operator_norm(const ComplexMatrix& m);
double trace_norm(const ComplexMatrix& m);
/// Schatten q-norm; q = infinity() gives the operator norm.
double schatten_norm(const ComplexMatrix& m, double q);

/// Square root of a PSD matrix; roundoff negatives in (-1e-10, 0) are
/// clamped to zero first.
ComplexMatrix sqrt_psd(const ComplexMatrix& m);

// --- small constructors --------------------------------------------------

ComplexMatrix identity(Eigen::Index d);
DensityMatrix maximally_mixed(Eigen::Index d);
DensityMatrix pure_state(const ComplexVector& psi);
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// --- seeded random objects ------------------------------------------------

ComplexMatrix random_unitary(Eigen::Index d, CounterRng& rng);
DensityMatrix random_density(Eigen::Index d, CounterRng& rng);
DensityMatrix random_pure(Eigen::Index d, CounterRng& rng);
Projector random_projector(Eigen::Index d, Eigen::Index rank, CounterRng& rng);
ComplexMatrix random_hermitian(Eigen::Index d, double norm_bound, CounterRng& rng);
/// Random density matrix diagonal in the computational basis.
DensityMatrix random_diagonal_density(Eigen::Index d, CounterRng& rng);

}  // namespace cqlearn::qcore
