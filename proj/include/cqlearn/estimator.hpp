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

#include <cstdint>
#include <span>
#include <vector>

#include "cqlearn/qcore.hpp"

namespace cqlearn::algorithms {

/// Post-selection applied to the reference estimate: the event that concept
/// `concept_id` accepts at least (upward) or at most (downward) `threshold`
/// times across the q copies.
struct PostSelectEvent {
  int concept_id = -1;
  bool upward = true;
  int threshold = 0;
  double prob = 1.0;  // acceptance probability recorded when applied
};

/// Classical reference estimate for a classical-quantum state: q copies of
/// (sum_x w_x |x><x| (x) 1/d), refined by counting post-selections. Two
/// exact representations:
///   Dense       - the full (L d)^q matrix; small instances, any projectors.
///   CommutingDp - diagonal projectors only; expectations by exact
///                 enumeration of copy-type multisets, so cost is
///                 independent of how many events are stored.
class EstimatorState {
 public:
  static EstimatorState dense(std::vector<double> label_weights,
                              std::vector<std::vector<qcore::Projector>> concept_projs, int q,
                              int dense_cap_bits = 14);
  static EstimatorState commuting(std::vector<double> label_weights,
                                  std::vector<std::vector<uint32_t>> concept_masks, int local_dim,
                                  int q, int64_t type_cap = 5000000);

  int q() const { return q_; }
  int concept_count() const { return m_; }
  const std::vector<PostSelectEvent>& events() const { return events_; }

  /// Per-copy expectations mu_{c, t} for every concept, in [0, 1].
  std::vector<double> predictions() const;
  double prediction(int c) const;

  /// Post-select on the counting event derived from (mu_hat, eps):
  /// threshold ceil((mu_hat + eps/2) q) upward, floor((mu_hat - eps/2) q)
  /// downward. Returns the event probability. Throws when the threshold
  /// falls outside [0, q].
  double update(int concept_id, bool upward, double mu_hat, double eps);

 private:
  EstimatorState() = default;

  struct ExtraConstraint {
    int concept_id;
    bool upward;
    int threshold;
  };

  // dense backend
  void dense_init();
  qcore::ComplexMatrix dense_count_event(int c, bool upward, int r) const;
  // commuting backend: enumeration over atom-count types
  void enumerate(std::span<const ExtraConstraint> extra_constraint,
                 std::vector<double>& concept_sums, double& z) const;

  bool dense_backend_ = true;
  int q_ = 0;
  int m_ = 0;
  int local_dim_ = 0;
  std::vector<double> weights_;
  std::vector<PostSelectEvent> events_;

  // dense
  std::vector<std::vector<qcore::Projector>> projs_;  // [m][label]
  Eigen::Index copy_dim_ = 0;
  qcore::ComplexMatrix rho_;                  // (copy_dim)^q
  std::vector<qcore::ComplexMatrix> copy_projs_;  // [m] block-diagonal per-copy projector

  // commuting: atoms (label, value) with base probability and per-concept bits
  struct Atom {
    double p = 0.0;
    std::vector<uint8_t> bits;  // per concept
  };
  std::vector<Atom> atoms_;
};

}  // namespace cqlearn::algorithms
