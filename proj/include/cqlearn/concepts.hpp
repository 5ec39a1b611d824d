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

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cqlearn/qcore.hpp"
#include "cqlearn/rng.hpp"

namespace cqlearn::concepts {

/// Classical label: a real vector, a bitstring, or both.
struct Label {
  std::vector<double> reals;
  std::vector<uint8_t> bits;

  static Label real(double x) { return Label{{x}, {}}; }
  static Label index(int i) { return Label{{static_cast<double>(i)}, {}}; }
  bool operator==(const Label&) const = default;
};

enum class ConceptKind { Projector, State };

/// Deterministic operator-valued function of a label. Evaluation is pure;
/// repeated calls at the same label are bitwise identical.
class Concept {
 public:
  Concept(ConceptKind kind, Eigen::Index dim,
          std::function<qcore::ComplexMatrix(const Label&)> eval, std::string params = {})
      : kind_(kind), dim_(dim), eval_(std::move(eval)), params_(std::move(params)) {}

  ConceptKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  const std::string& params() const { return params_; }

  qcore::ComplexMatrix operator()(const Label& x) const { return eval_(x); }
  qcore::DensityMatrix eval_state(const Label& x) const;
  qcore::Projector eval_projector(const Label& x) const;

 private:
  ConceptKind kind_;
  Eigen::Index dim_;
  std::function<qcore::ComplexMatrix(const Label&)> eval_;
  std::string params_;
};

/// Real-valued feature expansion g(x) = sum_j c_j phi_j(x) with box-bounded
/// coefficients. The range bound B is validated on a grid; the
/// fat-shattering parameter is declared, not computed.
class RealFunctionFamily {
 public:
  enum class Feature { Const, Linear, Cos, Sin };
  struct Basis {
    Feature type;
    int coord = 0;      // index into Label::reals
    double freq = 1.0;  // for Cos/Sin
  };

  RealFunctionFamily(std::vector<Basis> basis, std::vector<std::pair<double, double>> boxes,
                     double range_bound, double fat_shattering,
                     std::vector<Label> validation_grid);

  size_t dim() const { return basis_.size(); }
  double range_bound() const { return range_bound_; }
  double fat_shattering() const { return fat_shattering_; }
  const std::vector<std::pair<double, double>>& boxes() const { return boxes_; }

  double eval(std::span<const double> coeffs, const Label& x) const;
  std::vector<double> sample_coeffs(CounterRng& rng) const;

 private:
  std::vector<Basis> basis_;
  std::vector<std::pair<double, double>> boxes_;
  double range_bound_;
  double fat_shattering_;
};

/// One-dimensional scalar-parameter description of an infinite family, used
/// by the net machinery: coefficient boxes, a builder, and the map from a
/// parameter-grid spacing to the certified concept-space radius.
struct ParameterFamily {
  std::string name;
  std::vector<std::pair<double, double>> boxes;
  std::function<Concept(std::span<const double>)> build;
  std::function<double(double)> induced_eps;  // parameter eps -> concept eps
};

/// Finite list of concepts, or a seeded sampler plus an optional scalar
/// parameter family for certified nets.
class ConceptClass {
 public:
  ConceptClass(ConceptKind kind, Eigen::Index dim, std::vector<Concept> members)
      : kind_(kind), dim_(dim), members_(std::move(members)) {}
  ConceptClass(ConceptKind kind, Eigen::Index dim, std::function<Concept(CounterRng&)> sampler,
               std::optional<ParameterFamily> params = std::nullopt)
      : kind_(kind), dim_(dim), sampler_(std::move(sampler)), params_(std::move(params)) {}

  ConceptKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  bool finite() const { return !members_.empty(); }
  const std::vector<Concept>& members() const { return members_; }
  size_t size() const { return members_.size(); }
  Concept sample(CounterRng& rng) const;
  const std::optional<ParameterFamily>& parameter_family() const { return params_; }

 private:
  ConceptKind kind_;
  Eigen::Index dim_;
  std::vector<Concept> members_;
  std::function<Concept(CounterRng&)> sampler_;
  std::optional<ParameterFamily> params_;
};

/// Sampleable label distribution paired with the unknown channel x -> rho(x).
/// The channel is oracle data: learning algorithms never call it; validation
/// harnesses do.
struct CQSource {
  std::function<Label(CounterRng&)> sample_label;
  std::function<qcore::DensityMatrix(const Label&)> channel;
  bool realizable = false;
  // Finite label support with probabilities enables exact true risks.
  std::vector<Label> support;
  std::vector<double> support_probs;

  bool finite_support() const { return !support.empty(); }
};

/// L_p(Pi, rho) = 1 - Tr[rho Pi] for projector concepts;
/// L_s(sigma, rho) = d_tr(sigma, rho) for state concepts.
double loss(const Concept& c, const Label& x, const qcore::DensityMatrix& rho);

double empirical_risk(const Concept& c,
                      const std::vector<std::pair<Label, qcore::DensityMatrix>>& dataset);

struct RiskEstimate {
  double value = 0.0;
  double se = 0.0;  // zero for exact (finite-support) evaluation
};
RiskEstimate true_risk(const Concept& c, const CQSource& source, int mc_samples, CounterRng& rng);

// --- concrete families ------------------------------------------------------

enum class CircuitArch { LQC, Brickwork, FullUnitary };

struct CircuitSpec {
  CircuitArch arch = CircuitArch::LQC;
  int qubits = 1;
  int depth = 1;  // gate count for LQC, layer count for Brickwork
};

/// Circuits of the given architecture conjugating a label-dependent input.
ConceptClass make_circuit_class(const CircuitSpec& spec,
                                std::function<qcore::ComplexMatrix(const Label&)> input_prep,
                                ConceptKind kind, int dense_cap_bits = 14);

/// Fixed-architecture circuits with label-dependent gates exp(i H_j g_j(x))
/// inserted after the base gates at the given slots.
ConceptClass make_data_dependent_circuit_class(
    const CircuitSpec& spec, std::vector<int> insert_slots,
    std::vector<qcore::HermitianMatrix> slot_hamiltonians, const RealFunctionFamily& gfam,
    std::function<qcore::ComplexMatrix(const Label&)> input_prep, ConceptKind kind,
    int dense_cap_bits = 14);

/// Gibbs states of H0 + g(x) (w . V): state-valued.
ConceptClass make_gibbs_class(const qcore::HermitianMatrix& h0,
                              std::vector<qcore::HermitianMatrix> dictionary,
                              std::vector<std::pair<double, double>> weight_boxes,
                              const RealFunctionFamily& gfam);

/// Conjugation by exp(i H g(x)) of a label-dependent probe.
ConceptClass make_phaseshift_class(std::vector<qcore::HermitianMatrix> dictionary,
                                   std::vector<std::pair<double, double>> weight_boxes,
                                   const RealFunctionFamily& gfam,
                                   std::function<qcore::ComplexMatrix(const Label&)> probe,
                                   ConceptKind kind);

/// Spectral projectors below E of H0 + g(x) V, under the gap promise that H0
/// has no eigenvalues in [E - 2 delta, E + 2 delta] and |g| ||V|| < delta.
ConceptClass make_lowenergy_class(const qcore::HermitianMatrix& h0,
                                  std::vector<qcore::HermitianMatrix> dictionary,
                                  std::vector<std::pair<double, double>> weight_boxes,
                                  const RealFunctionFamily& gfam, double energy, double delta);

/// Number of distinct restrictions of a finite class to the given labels
/// (distinct when some per-label operator distance exceeds 1e-9).
int restriction_count(const ConceptClass& cls, const std::vector<Label>& labels);

/// Build a class from a plain-text descriptor of key = value lines.
/// Families: gibbs | phase_shift | low_energy | circuit_lqc |
/// circuit_brickwork | circuit_full. Dictionary matrices and fixed gates are
/// drawn from the descriptor's seed, so a descriptor names one class.
ConceptClass load_concept_class(const std::string& descriptor_text);

}  // namespace cqlearn::concepts
