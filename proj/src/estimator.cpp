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

#include "cqlearn/estimator.hpp"

#include <cmath>

#include "cqlearn/errors.hpp"
#include "cqlearn/stats.hpp"

namespace cqlearn::algorithms {

using qcore::ComplexMatrix;
using Eigen::Index;

EstimatorState EstimatorState::dense(std::vector<double> label_weights,
                                     std::vector<std::vector<qcore::Projector>> concept_projs,
                                     int q, int dense_cap_bits) {
  EstimatorState st;
  st.dense_backend_ = true;
  st.q_ = q;
  st.weights_ = std::move(label_weights);
  st.projs_ = std::move(concept_projs);
  st.m_ = static_cast<int>(st.projs_.size());
  if (q < 1) throw contract_error("EstimatorState: q must be positive");
  if (st.m_ == 0) throw contract_error("EstimatorState: need at least one concept");
  const size_t labels = st.weights_.size();
  for (const auto& list : st.projs_)
    if (list.size() != labels)
      throw contract_error("EstimatorState: one projector per label per concept");
  st.local_dim_ = static_cast<int>(st.projs_[0][0].dim());
  st.copy_dim_ = static_cast<Index>(labels) * st.local_dim_;
  double bits = q * std::log2(static_cast<double>(st.copy_dim_));
  if (bits > dense_cap_bits + 1e-9)
    throw capacity_error("EstimatorState: dense estimate exceeds the dense cap");
  st.dense_init();
  return st;
}

EstimatorState EstimatorState::commuting(std::vector<double> label_weights,
                                         std::vector<std::vector<uint32_t>> concept_masks,
                                         int local_dim, int q, int64_t type_cap) {
  EstimatorState st;
  st.dense_backend_ = false;
  st.q_ = q;
  st.weights_ = std::move(label_weights);
  st.m_ = static_cast<int>(concept_masks.size());
  st.local_dim_ = local_dim;
  if (q < 1) throw contract_error("EstimatorState: q must be positive");
  if (st.m_ == 0) throw contract_error("EstimatorState: need at least one concept");
  const size_t labels = st.weights_.size();
  for (const auto& masks : concept_masks)
    if (masks.size() != labels)
      throw contract_error("EstimatorState: one mask per label per concept");
  // atoms: (label, value) with base probability w_x / d
  for (size_t x = 0; x < labels; ++x) {
    for (int v = 0; v < local_dim; ++v) {
      Atom a;
      a.p = st.weights_[x] / local_dim;
      if (a.p <= 0) continue;
      a.bits.resize(static_cast<size_t>(st.m_));
      for (int c = 0; c < st.m_; ++c)
        a.bits[static_cast<size_t>(c)] =
            (concept_masks[static_cast<size_t>(c)][x] >> v) & 1u;
      st.atoms_.push_back(std::move(a));
    }
  }
  // enumeration size: C(q + A - 1, A - 1)
  long double types = 1;
  const int a_minus_1 = static_cast<int>(st.atoms_.size()) - 1;
  for (int j = 1; j <= a_minus_1; ++j)
    types *= static_cast<long double>(q + j) / static_cast<long double>(j);
  if (types > static_cast<long double>(type_cap))
    throw capacity_error("EstimatorState: type enumeration exceeds type_cap");
  return st;
}

void EstimatorState::dense_init() {
  const size_t labels = weights_.size();
  const int d = local_dim_;
  ComplexMatrix copy = ComplexMatrix::Zero(copy_dim_, copy_dim_);
  for (size_t x = 0; x < labels; ++x)
    for (int v = 0; v < d; ++v) {
      Index idx = static_cast<Index>(x) * d + v;
      copy(idx, idx) = weights_[x] / d;
    }
  rho_ = ComplexMatrix::Ones(1, 1);
  for (int k = 0; k < q_; ++k) rho_ = qcore::kron(rho_, copy);

  copy_projs_.clear();
  for (int c = 0; c < m_; ++c) {
    ComplexMatrix p = ComplexMatrix::Zero(copy_dim_, copy_dim_);
    for (size_t x = 0; x < labels; ++x)
      p.block(static_cast<Index>(x) * d, static_cast<Index>(x) * d, d, d) =
          projs_[static_cast<size_t>(c)][x].mat();
    copy_projs_.push_back(std::move(p));
  }
}

ComplexMatrix EstimatorState::dense_count_event(int c, bool upward, int r) const {
  const ComplexMatrix& p = copy_projs_[static_cast<size_t>(c)];
  ComplexMatrix qm = ComplexMatrix::Identity(copy_dim_, copy_dim_) - p;
  // a[t] after k copies: the event of exactly t acceptances so far
  std::vector<ComplexMatrix> a{ComplexMatrix::Ones(1, 1)};
  for (int k = 0; k < q_; ++k) {
    std::vector<ComplexMatrix> nxt(a.size() + 1);
    for (size_t t = 0; t < nxt.size(); ++t) {
      Index dim = a[0].rows() * copy_dim_;
      nxt[t] = ComplexMatrix::Zero(dim, dim);
      if (t < a.size()) nxt[t] += qcore::kron(a[t], qm);
      if (t > 0) nxt[t] += qcore::kron(a[t - 1], p);
    }
    a = std::move(nxt);
  }
  ComplexMatrix f = ComplexMatrix::Zero(rho_.rows(), rho_.cols());
  for (int t = 0; t <= q_; ++t) {
    bool keep = upward ? (t >= r) : (t <= r);
    if (keep) f += a[static_cast<size_t>(t)];
  }
  return f;
}

void EstimatorState::enumerate(std::span<const ExtraConstraint> extra_constraint,
                               std::vector<double>& concept_sums, double& z) const {
  // Exact sum over multisets of q atoms. Constraints: every stored event and
  // any extra (concept, signed threshold) pairs must hold on the final counts.
  concept_sums.assign(static_cast<size_t>(m_), 0.0);
  z = 0.0;
  const int n_atoms = static_cast<int>(atoms_.size());
  std::vector<int> counts(static_cast<size_t>(m_), 0);

  // recursive enumeration with running multinomial weight
  auto rec = [&](auto&& self, int atom, int left, double w) -> void {
    if (w == 0.0) return;
    if (atom == n_atoms - 1) {
      // last atom takes the remainder
      double wt = w * std::pow(atoms_[static_cast<size_t>(atom)].p, left);
      if (wt == 0.0) return;
      for (int c = 0; c < m_; ++c)
        counts[static_cast<size_t>(c)] +=
            left * atoms_[static_cast<size_t>(atom)].bits[static_cast<size_t>(c)];
      bool ok = true;
      for (const auto& ev : events_) {
        int n_c = counts[static_cast<size_t>(ev.concept_id)];
        if (ev.upward ? (n_c < ev.threshold) : (n_c > ev.threshold)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        for (const auto& ex : extra_constraint) {
          int n_c = counts[static_cast<size_t>(ex.concept_id)];
          if (ex.upward ? (n_c < ex.threshold) : (n_c > ex.threshold)) {
            ok = false;
            break;
          }
        }
      }
      if (ok) {
        z += wt;
        for (int c = 0; c < m_; ++c)
          concept_sums[static_cast<size_t>(c)] += wt * counts[static_cast<size_t>(c)];
      }
      for (int c = 0; c < m_; ++c)
        counts[static_cast<size_t>(c)] -=
            left * atoms_[static_cast<size_t>(atom)].bits[static_cast<size_t>(c)];
      return;
    }
    double pk = 1.0;
    double binom = 1.0;
    for (int k = 0; k <= left; ++k) {
      self(self, atom + 1, left - k, w * binom * pk);
      // advance C(left, k+1) and p^(k+1)
      binom = binom * (left - k) / (k + 1);
      pk *= atoms_[static_cast<size_t>(atom)].p;
      if (k + 1 <= left) {
        for (int c = 0; c < m_; ++c)
          counts[static_cast<size_t>(c)] += atoms_[static_cast<size_t>(atom)].bits[static_cast<size_t>(c)];
      }
    }
    for (int c = 0; c < m_; ++c)
      counts[static_cast<size_t>(c)] -=
          left * atoms_[static_cast<size_t>(atom)].bits[static_cast<size_t>(c)];
  };
  if (n_atoms == 0) throw contract_error("EstimatorState: no atoms with positive probability");
  rec(rec, 0, q_, 1.0);
}

std::vector<double> EstimatorState::predictions() const {
  std::vector<double> out(static_cast<size_t>(m_), 0.0);
  if (dense_backend_) {
    for (int c = 0; c < m_; ++c) {
      // averaged observable over the q copies, normalized per copy
      double acc = 0.0;
      for (int k = 0; k < q_; ++k) {
        ComplexMatrix op = ComplexMatrix::Ones(1, 1);
        for (int j = 0; j < q_; ++j)
          op = qcore::kron(op, j == k ? copy_projs_[static_cast<size_t>(c)]
                                      : ComplexMatrix::Identity(copy_dim_, copy_dim_));
        acc += (rho_ * op).trace().real();
      }
      out[static_cast<size_t>(c)] = std::clamp(acc / q_, 0.0, 1.0);
    }
    return out;
  }
  std::vector<double> sums;
  double z = 0.0;
  enumerate({}, sums, z);
  if (z <= 1e-300) throw degenerate_error("EstimatorState: estimate weight underflows");
  for (int c = 0; c < m_; ++c)
    out[static_cast<size_t>(c)] = std::clamp(sums[static_cast<size_t>(c)] / (z * q_), 0.0, 1.0);
  return out;
}

double EstimatorState::prediction(int c) const {
  if (c < 0 || c >= m_) throw contract_error("EstimatorState: concept index out of range");
  return predictions()[static_cast<size_t>(c)];
}

double EstimatorState::update(int concept_id, bool upward, double mu_hat, double eps) {
  if (concept_id < 0 || concept_id >= m_)
    throw contract_error("EstimatorState: concept index out of range");
  double target = upward ? (mu_hat + eps / 2.0) * q_ : (mu_hat - eps / 2.0) * q_;
  int r = upward ? static_cast<int>(std::ceil(target - 1e-12))
                 : static_cast<int>(std::floor(target + 1e-12));
  if (r < 0 || r > q_)
    throw contract_error("EstimatorState: post-selection threshold falls outside [0, q]");

  double prob = 1.0;
  if (dense_backend_) {
    ComplexMatrix f = dense_count_event(concept_id, upward, r);
    prob = (rho_ * f).trace().real();
    if (prob < 1e-300) throw degenerate_error("EstimatorState: post-selection underflows");
    rho_ = (f * rho_ * f) / prob;
    rho_ = (rho_ + rho_.adjoint()) * 0.5;
  } else {
    std::vector<double> sums;
    double z_old = 0.0, z_new = 0.0;
    enumerate({}, sums, z_old);
    ExtraConstraint extra{concept_id, upward, r};
    enumerate(std::span<const ExtraConstraint>(&extra, 1), sums, z_new);
    if (z_old <= 1e-300 || z_new <= 1e-300)
      throw degenerate_error("EstimatorState: post-selection underflows");
    prob = z_new / z_old;
  }
  events_.push_back({concept_id, upward, r, prob});
  return prob;
}

}  // namespace cqlearn::algorithms
