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
#include <map>

#include "cqlearn/stats.hpp"

namespace cqlearn::concepts {

using qcore::ComplexMatrix;
using Eigen::Index;

qcore::DensityMatrix Concept::eval_state(const Label& x) const {
  if (kind_ != ConceptKind::State)
    throw contract_error("Concept: state evaluation on a projector-valued concept");
  return qcore::DensityMatrix(eval_(x));
}

qcore::Projector Concept::eval_projector(const Label& x) const {
  if (kind_ != ConceptKind::Projector)
    throw contract_error("Concept: projector evaluation on a state-valued concept");
  return qcore::Projector(eval_(x));
}

RealFunctionFamily::RealFunctionFamily(std::vector<Basis> basis,
                                       std::vector<std::pair<double, double>> boxes,
                                       double range_bound, double fat_shattering,
                                       std::vector<Label> validation_grid)
    : basis_(std::move(basis)),
      boxes_(std::move(boxes)),
      range_bound_(range_bound),
      fat_shattering_(fat_shattering) {
  if (basis_.size() != boxes_.size())
    throw contract_error("RealFunctionFamily: one coefficient box per basis function");
  if (range_bound_ <= 0) throw contract_error("RealFunctionFamily: range bound must be positive");
  // worst-case coefficients on the validation grid must respect the bound
  for (const Label& x : validation_grid) {
    double worst = 0.0;
    for (size_t j = 0; j < basis_.size(); ++j) {
      std::vector<double> unit(basis_.size(), 0.0);
      unit[j] = 1.0;
      double phi = eval(unit, x);
      worst += std::max(std::abs(boxes_[j].first), std::abs(boxes_[j].second)) * std::abs(phi);
    }
    if (worst > range_bound_ + 1e-9)
      throw contract_error("RealFunctionFamily: admissible coefficients exceed the range bound");
  }
}

double RealFunctionFamily::eval(std::span<const double> coeffs, const Label& x) const {
  if (coeffs.size() != basis_.size())
    throw contract_error("RealFunctionFamily: coefficient count mismatch");
  double g = 0.0;
  for (size_t j = 0; j < basis_.size(); ++j) {
    const Basis& b = basis_[j];
    double v = 0.0;
    double arg = b.coord < static_cast<int>(x.reals.size()) ? x.reals[static_cast<size_t>(b.coord)]
                                                            : 0.0;
    switch (b.type) {
      case Feature::Const: v = 1.0; break;
      case Feature::Linear: v = arg; break;
      case Feature::Cos: v = std::cos(b.freq * arg); break;
      case Feature::Sin: v = std::sin(b.freq * arg); break;
    }
    g += coeffs[j] * v;
  }
  return g;
}

std::vector<double> RealFunctionFamily::sample_coeffs(CounterRng& rng) const {
  std::vector<double> c(boxes_.size());
  for (size_t j = 0; j < boxes_.size(); ++j)
    c[j] = boxes_[j].first + (boxes_[j].second - boxes_[j].first) * rng.uniform();
  return c;
}

Concept ConceptClass::sample(CounterRng& rng) const {
  if (finite()) return members_[rng.uniform_int(members_.size())];
  if (!sampler_) throw contract_error("ConceptClass: no sampler for this infinite class");
  return sampler_(rng);
}

double loss(const Concept& c, const Label& x, const qcore::DensityMatrix& rho) {
  ComplexMatrix h = c(x);
  if (h.rows() != rho.dim()) throw contract_error("loss: dimension mismatch");
  if (c.kind() == ConceptKind::Projector) {
    double overlap = (rho.mat() * h).trace().real();
    return std::clamp(1.0 - overlap, 0.0, 1.0);
  }
  return std::clamp(qcore::trace_distance_raw(h, rho.mat()), 0.0, 1.0);
}

double empirical_risk(const Concept& c,
                      const std::vector<std::pair<Label, qcore::DensityMatrix>>& dataset) {
  if (dataset.empty()) throw contract_error("empirical_risk: empty dataset");
  KahanSum acc;
  for (const auto& [x, rho] : dataset) acc.add(loss(c, x, rho));
  return acc.value() / static_cast<double>(dataset.size());
}

RiskEstimate true_risk(const Concept& c, const CQSource& source, int mc_samples, CounterRng& rng) {
  RiskEstimate est;
  if (source.finite_support()) {
    KahanSum acc;
    for (size_t i = 0; i < source.support.size(); ++i)
      acc.add(source.support_probs[i] * loss(c, source.support[i], source.channel(source.support[i])));
    est.value = acc.value();
    est.se = 0.0;
    return est;
  }
  if (mc_samples <= 1) throw contract_error("true_risk: need at least two Monte-Carlo samples");
  KahanSum acc, acc2;
  for (int i = 0; i < mc_samples; ++i) {
    Label x = source.sample_label(rng);
    double l = loss(c, x, source.channel(x));
    acc.add(l);
    acc2.add(l * l);
  }
  double n = mc_samples;
  est.value = acc.value() / n;
  double var = std::max(0.0, acc2.value() / n - est.value * est.value);
  est.se = std::sqrt(var / n);
  return est;
}

// --- circuits ---------------------------------------------------------------

namespace {

ComplexMatrix embed_two_qubit_gate(const ComplexMatrix& g, int pos, int qubits) {
  ComplexMatrix out = qcore::identity(1);
  int i = 0;
  while (i < qubits) {
    if (i == pos) {
      out = qcore::kron(out, g);
      i += 2;
    } else {
      out = qcore::kron(out, qcore::identity(2));
      i += 1;
    }
  }
  return out;
}

struct CircuitGates {
  std::vector<int> positions;        // first qubit of each two-qubit gate
  std::vector<ComplexMatrix> gates;  // 4x4 (or full for FullUnitary)
};

CircuitGates sample_gates(const CircuitSpec& spec, CounterRng& rng) {
  CircuitGates cg;
  if (spec.arch == CircuitArch::FullUnitary) {
    cg.positions.push_back(0);
    cg.gates.push_back(qcore::random_unitary(Index{1} << spec.qubits, rng));
    return cg;
  }
  if (spec.arch == CircuitArch::LQC) {
    for (int t = 0; t < spec.depth; ++t) {
      int pos = spec.qubits > 2 ? static_cast<int>(rng.uniform_int(spec.qubits - 1)) : 0;
      cg.positions.push_back(pos);
      cg.gates.push_back(qcore::random_unitary(4, rng));
    }
    return cg;
  }
  // brickwork: alternate even / odd nearest-neighbor pairs per layer
  for (int layer = 0; layer < spec.depth; ++layer) {
    int start = layer % 2;
    for (int pos = start; pos + 1 < spec.qubits; pos += 2) {
      cg.positions.push_back(pos);
      cg.gates.push_back(qcore::random_unitary(4, rng));
    }
  }
  return cg;
}

ComplexMatrix circuit_unitary(const CircuitGates& cg, const CircuitSpec& spec) {
  const Index dim = Index{1} << spec.qubits;
  if (spec.arch == CircuitArch::FullUnitary) return cg.gates[0];
  ComplexMatrix u = qcore::identity(dim);
  for (size_t t = 0; t < cg.gates.size(); ++t)
    u = embed_two_qubit_gate(cg.gates[t], cg.positions[t], spec.qubits) * u;
  return u;
}

void check_circuit_cap(const CircuitSpec& spec, int cap_bits) {
  if (spec.qubits <= 0 || spec.depth <= 0)
    throw contract_error("circuit class: qubit and depth counts must be positive");
  if (spec.qubits > cap_bits)
    throw capacity_error("circuit class: qubit count exceeds the dense cap");
}

Concept conjugation_concept(ComplexMatrix u, std::function<ComplexMatrix(const Label&)> prep,
                            ConceptKind kind, Index dim, std::string params) {
  return Concept(kind, dim,
                 [u = std::move(u), prep = std::move(prep)](const Label& x) {
                   ComplexMatrix in = prep(x);
                   ComplexMatrix out = u * in * u.adjoint();
                   return ComplexMatrix((out + out.adjoint()) * 0.5);
                 },
                 std::move(params));
}

}  // namespace

ConceptClass make_circuit_class(const CircuitSpec& spec,
                                std::function<ComplexMatrix(const Label&)> input_prep,
                                ConceptKind kind, int dense_cap_bits) {
  check_circuit_cap(spec, dense_cap_bits);
  const Index dim = Index{1} << spec.qubits;
  auto sampler = [spec, input_prep, kind, dim](CounterRng& rng) {
    CircuitGates cg = sample_gates(spec, rng);
    return conjugation_concept(circuit_unitary(cg, spec), input_prep, kind, dim, "circuit");
  };
  return ConceptClass(kind, dim, sampler);
}

ConceptClass make_data_dependent_circuit_class(
    const CircuitSpec& spec, std::vector<int> insert_slots,
    std::vector<qcore::HermitianMatrix> slot_hamiltonians, const RealFunctionFamily& gfam,
    std::function<ComplexMatrix(const Label&)> input_prep, ConceptKind kind, int dense_cap_bits) {
  check_circuit_cap(spec, dense_cap_bits);
  if (insert_slots.size() != slot_hamiltonians.size())
    throw contract_error("data-dependent circuits: one Hamiltonian per insert slot");
  const Index dim = Index{1} << spec.qubits;
  for (const auto& h : slot_hamiltonians)
    if (h.dim() != dim)
      throw contract_error("data-dependent circuits: slot Hamiltonians must act on all qubits");

  auto sampler = [=](CounterRng& rng) {
    CircuitGates cg = sample_gates(spec, rng);
    std::vector<std::vector<double>> coeffs;
    coeffs.reserve(insert_slots.size());
    for (size_t j = 0; j < insert_slots.size(); ++j) coeffs.push_back(gfam.sample_coeffs(rng));
    auto eval = [=, &gfam](const Label& x) {
      // base circuit followed by the label-dependent gates at their slots
      ComplexMatrix u = circuit_unitary(cg, spec);
      for (size_t j = 0; j < insert_slots.size(); ++j) {
        double g = gfam.eval(coeffs[j], x);
        u = qcore::matrix_exp_hermitian(slot_hamiltonians[j], g) * u;
      }
      ComplexMatrix in = input_prep(x);
      ComplexMatrix out = u * in * u.adjoint();
      return ComplexMatrix((out + out.adjoint()) * 0.5);
    };
    return Concept(kind, dim, eval, "data_dependent_circuit");
  };
  return ConceptClass(kind, dim, sampler);
}

namespace {

qcore::ComplexMatrix dictionary_mix(const std::vector<qcore::HermitianMatrix>& dict,
                                    std::span<const double> w) {
  ComplexMatrix v = ComplexMatrix::Zero(dict[0].dim(), dict[0].dim());
  for (size_t k = 0; k < dict.size(); ++k) v += w[k] * dict[k].mat();
  return v;
}

double dictionary_norm_bound(const std::vector<qcore::HermitianMatrix>& dict,
                             const std::vector<std::pair<double, double>>& boxes) {
  double b = 0;
  for (size_t k = 0; k < dict.size(); ++k)
    b += std::max(std::abs(boxes[k].first), std::abs(boxes[k].second)) * dict[k].norm_bound();
  return b;
}

}  // namespace

ConceptClass make_gibbs_class(const qcore::HermitianMatrix& h0,
                              std::vector<qcore::HermitianMatrix> dictionary,
                              std::vector<std::pair<double, double>> weight_boxes,
                              const RealFunctionFamily& gfam) {
  if (dictionary.empty() || dictionary.size() != weight_boxes.size())
    throw contract_error("gibbs class: one weight box per dictionary element");
  const Index dim = h0.dim();
  const double b = dictionary_norm_bound(dictionary, weight_boxes);
  const double big_b = gfam.range_bound();

  auto build = [h0, dictionary, gfam, dim](std::span<const double> params) {
    const size_t nw = dictionary.size();
    std::vector<double> w(params.begin(), params.begin() + nw);
    std::vector<double> g(params.begin() + nw, params.end());
    auto eval = [=](const Label& x) {
      ComplexMatrix v = dictionary_mix(dictionary, w);
      double gx = gfam.eval(g, x);
      return qcore::gibbs_state(h0.mat() + gx * v).mat();
    };
    return Concept(ConceptKind::State, dim, eval, "gibbs");
  };

  ParameterFamily fam;
  fam.name = "gibbs";
  fam.boxes = weight_boxes;
  for (const auto& box : gfam.boxes()) fam.boxes.push_back(box);
  fam.build = build;
  fam.induced_eps = [b, big_b](double eps) {
    return 2.0 * std::exp(eps * (big_b + b)) * eps * (b + big_b);
  };

  auto sampler = [fam](CounterRng& rng) {
    std::vector<double> params(fam.boxes.size());
    for (size_t j = 0; j < params.size(); ++j)
      params[j] = fam.boxes[j].first + (fam.boxes[j].second - fam.boxes[j].first) * rng.uniform();
    return fam.build(params);
  };
  return ConceptClass(ConceptKind::State, dim, sampler, fam);
}

ConceptClass make_phaseshift_class(std::vector<qcore::HermitianMatrix> dictionary,
                                   std::vector<std::pair<double, double>> weight_boxes,
                                   const RealFunctionFamily& gfam,
                                   std::function<ComplexMatrix(const Label&)> probe,
                                   ConceptKind kind) {
  if (dictionary.empty() || dictionary.size() != weight_boxes.size())
    throw contract_error("phase-shift class: one weight box per dictionary element");
  const Index dim = dictionary[0].dim();
  const double b = dictionary_norm_bound(dictionary, weight_boxes);
  const double big_b = gfam.range_bound();

  auto build = [dictionary, gfam, probe, kind, dim, b](std::span<const double> params) {
    const size_t nw = dictionary.size();
    std::vector<double> w(params.begin(), params.begin() + nw);
    std::vector<double> g(params.begin() + nw, params.end());
    auto eval = [=](const Label& x) {
      ComplexMatrix h = dictionary_mix(dictionary, w);
      double gx = gfam.eval(g, x);
      ComplexMatrix u = qcore::matrix_exp_hermitian(qcore::HermitianMatrix(h, b + 1e-9), gx);
      ComplexMatrix out = u * probe(x) * u.adjoint();
      return ComplexMatrix((out + out.adjoint()) * 0.5);
    };
    return Concept(kind, dim, eval, "phase_shift");
  };

  ParameterFamily fam;
  fam.name = "phase_shift";
  fam.boxes = weight_boxes;
  for (const auto& box : gfam.boxes()) fam.boxes.push_back(box);
  fam.build = build;
  fam.induced_eps = [b, big_b](double eps) {
    return 2.0 * std::exp(eps * (big_b + b) + big_b * b) * eps * (b + big_b);
  };

  auto sampler = [fam](CounterRng& rng) {
    std::vector<double> params(fam.boxes.size());
    for (size_t j = 0; j < params.size(); ++j)
      params[j] = fam.boxes[j].first + (fam.boxes[j].second - fam.boxes[j].first) * rng.uniform();
    return fam.build(params);
  };
  return ConceptClass(kind, dim, sampler, fam);
}

ConceptClass make_lowenergy_class(const qcore::HermitianMatrix& h0,
                                  std::vector<qcore::HermitianMatrix> dictionary,
                                  std::vector<std::pair<double, double>> weight_boxes,
                                  const RealFunctionFamily& gfam, double energy, double delta) {
  if (dictionary.empty() || dictionary.size() != weight_boxes.size())
    throw contract_error("low-energy class: one weight box per dictionary element");
  if (delta <= 0) throw contract_error("low-energy class: delta must be positive");
  // spectral-gap promise for the unperturbed Hamiltonian
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h0.mat(), Eigen::EigenvaluesOnly);
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    double ev = es.eigenvalues()(i);
    if (ev >= energy - 2 * delta && ev <= energy + 2 * delta)
      throw precondition_error(
          "low-energy class: H0 has an eigenvalue inside [E - 2 delta, E + 2 delta]");
  }
  const double b = dictionary_norm_bound(dictionary, weight_boxes);
  const double big_b = gfam.range_bound();
  if (b * big_b >= delta)
    throw precondition_error("low-energy class: perturbation bound ||g V|| must stay below delta");

  const Index dim = h0.dim();
  auto build = [h0, dictionary, gfam, energy, dim](std::span<const double> params) {
    const size_t nw = dictionary.size();
    std::vector<double> w(params.begin(), params.begin() + nw);
    std::vector<double> g(params.begin() + nw, params.end());
    auto eval = [=](const Label& x) {
      ComplexMatrix v = dictionary_mix(dictionary, w);
      double gx = gfam.eval(g, x);
      return qcore::low_energy_projector_raw(h0.mat() + gx * v, energy).mat();
    };
    return Concept(ConceptKind::Projector, dim, eval, "low_energy");
  };

  ParameterFamily fam;
  fam.name = "low_energy";
  fam.boxes = weight_boxes;
  for (const auto& box : gfam.boxes()) fam.boxes.push_back(box);
  fam.build = build;
  fam.induced_eps = [delta, big_b](double eps) {
    return M_PI * eps / (4.0 * delta) * (big_b + delta / big_b);
  };

  auto sampler = [fam](CounterRng& rng) {
    std::vector<double> params(fam.boxes.size());
    for (size_t j = 0; j < params.size(); ++j)
      params[j] = fam.boxes[j].first + (fam.boxes[j].second - fam.boxes[j].first) * rng.uniform();
    return fam.build(params);
  };
  return ConceptClass(ConceptKind::Projector, dim, sampler, fam);
}

namespace {

std::map<std::string, std::string> parse_descriptor(const std::string& text) {
  std::map<std::string, std::string> kv;
  size_t pos = 0;
  int lineno = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto strip = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw contract_error("class descriptor line " + std::to_string(lineno) +
                           " is not key = value");
    kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  return kv;
}

double kv_num(const std::map<std::string, std::string>& kv, const std::string& key, double dflt) {
  auto it = kv.find(key);
  return it == kv.end() ? dflt : std::stod(it->second);
}

}  // namespace

ConceptClass load_concept_class(const std::string& descriptor_text) {
  auto kv = parse_descriptor(descriptor_text);
  auto fam_it = kv.find("family");
  if (fam_it == kv.end()) throw contract_error("class descriptor: missing 'family'");
  const std::string family = fam_it->second;
  const auto dim = static_cast<Index>(kv_num(kv, "dim", 2));
  CounterRng seed_rng(static_cast<uint64_t>(kv_num(kv, "seed", 1)), 0x10ad);

  std::vector<RealFunctionFamily::Basis> basis{{RealFunctionFamily::Feature::Linear, 0, 1.0}};
  std::vector<Label> grid;
  for (int i = 0; i <= 8; ++i) grid.push_back(Label::real(i / 8.0));
  const double g_lo = kv_num(kv, "g_lo", -1.0), g_hi = kv_num(kv, "g_hi", 1.0);
  const double bound = std::max(std::abs(g_lo), std::abs(g_hi));
  RealFunctionFamily gfam(basis, {{g_lo, g_hi}}, bound, kv_num(kv, "fat", 1.0), grid);

  const double w_lo = kv_num(kv, "weight_lo", -0.5), w_hi = kv_num(kv, "weight_hi", 0.5);
  const double dict_norm = kv_num(kv, "dict_norm", 1.0);

  if (family == "gibbs" || family == "phase_shift" || family == "low_energy") {
    std::vector<qcore::HermitianMatrix> dict{
        qcore::HermitianMatrix(qcore::random_hermitian(dim, dict_norm, seed_rng), dict_norm)};
    if (family == "gibbs") {
      qcore::HermitianMatrix h0(qcore::random_hermitian(dim, kv_num(kv, "h0_norm", 1.0), seed_rng),
                                kv_num(kv, "h0_norm", 1.0));
      return make_gibbs_class(h0, dict, {{w_lo, w_hi}}, gfam);
    }
    if (family == "phase_shift") {
      ComplexMatrix probe = qcore::random_density(dim, seed_rng).mat();
      return make_phaseshift_class(dict, {{w_lo, w_hi}}, gfam,
                                   [probe](const Label&) { return probe; }, ConceptKind::State);
    }
    const double energy = kv_num(kv, "energy", 1.0);
    const double delta = kv_num(kv, "delta", 0.25);
    Eigen::VectorXd ev(dim);
    for (Index i = 0; i < dim; ++i)
      ev(i) = i == 0 ? energy - 3.0 * delta : energy + (2.0 + static_cast<double>(i)) * delta;
    ComplexMatrix u = qcore::random_unitary(dim, seed_rng);
    ComplexMatrix h0m = u * ev.cast<std::complex<double>>().asDiagonal() * u.adjoint();
    h0m = (h0m + h0m.adjoint()) * 0.5;
    qcore::HermitianMatrix h0(h0m, ev.cwiseAbs().maxCoeff() + 1e-9);
    // perturbation budget ||g V|| < delta
    double vmax = delta / bound * 0.9;
    std::vector<qcore::HermitianMatrix> small_dict{
        qcore::HermitianMatrix(qcore::random_hermitian(dim, vmax, seed_rng), vmax)};
    return make_lowenergy_class(h0, small_dict, {{-1.0, 1.0}}, gfam, energy, delta);
  }

  if (family == "circuit_lqc" || family == "circuit_brickwork" || family == "circuit_full") {
    CircuitSpec spec;
    spec.qubits = static_cast<int>(kv_num(kv, "qubits", 2));
    spec.depth = static_cast<int>(kv_num(kv, "depth", 2));
    spec.arch = family == "circuit_lqc"
                    ? CircuitArch::LQC
                    : (family == "circuit_brickwork" ? CircuitArch::Brickwork
                                                     : CircuitArch::FullUnitary);
    const Index full = Index{1} << spec.qubits;
    auto prep = [full](const Label& x) {
      Eigen::VectorXcd v(full);
      v.setZero();
      auto id = static_cast<Index>(x.reals.empty() ? 0 : x.reals[0]);
      v(((id % full) + full) % full) = 1.0;
      return ComplexMatrix(v * v.adjoint());
    };
    return make_circuit_class(spec, prep, ConceptKind::State);
  }

  throw contract_error("class descriptor: unknown family '" + family + "'");
}

int restriction_count(const ConceptClass& cls, const std::vector<Label>& labels) {
  if (!cls.finite()) throw contract_error("restriction_count: class must be finite");
  if (labels.empty()) throw contract_error("restriction_count: need at least one label");
  const auto& ms = cls.members();
  std::vector<std::vector<ComplexMatrix>> evals(ms.size());
  for (size_t c = 0; c < ms.size(); ++c)
    for (const Label& x : labels) evals[c].push_back(ms[c](x));
  std::vector<size_t> reps;
  for (size_t c = 0; c < ms.size(); ++c) {
    bool is_new = true;
    for (size_t r : reps) {
      double dist = 0;
      for (size_t i = 0; i < labels.size(); ++i)
        dist = std::max(dist, qcore::operator_norm(evals[c][i] - evals[r][i]));
      if (dist <= 1e-9) {
        is_new = false;
        break;
      }
    }
    if (is_new) reps.push_back(c);
  }
  return static_cast<int>(reps.size());
}

}  // namespace cqlearn::concepts
