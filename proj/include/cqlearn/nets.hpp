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

#include <string>
#include <vector>

#include "cqlearn/concepts.hpp"

namespace cqlearn::nets {

using concepts::Concept;
using concepts::ConceptClass;
using concepts::Label;

/// Schatten index of the per-label norm: 1 (trace norm) for state-valued
/// concepts, infinity (operator norm) for projector-valued ones.
enum class NormIndex { TraceNorm, OperatorNorm };

NormIndex default_norm_index(concepts::ConceptKind kind);

/// (1/n) sum_i || c1(x_i) - c2(x_i) ||_q.
double pseudometric(const Concept& c1, const Concept& c2, const std::vector<Label>& labels,
                    NormIndex q);

/// Internal eps-net over a finite concept list (members of the class, or a
/// sampled subset of an infinite class), built greedily: repeatedly adopt
/// the lowest-index concept not yet covered. Coverage of the candidate set
/// is certified by construction; for sampled sets it holds for the sample
/// only ("audited on sample").
struct EmpiricalNet {
  std::vector<Concept> members;
  std::vector<int> member_index;  // indices into the candidate list
  double eps = 0.0;
  NormIndex q = NormIndex::OperatorNorm;
  std::vector<Label> labels;
  std::vector<int> assignment;     // candidate -> nearest member (lowest index on ties)
  std::vector<double> distances;   // candidate -> distance to assigned member
  bool audited_on_sample_only = false;

  size_t size() const { return members.size(); }
  double max_assignment_distance() const;
};

EmpiricalNet build_empirical_net(const ConceptClass& cls, const std::vector<Label>& labels,
                                 double eps, NormIndex q, int sample_budget, CounterRng& rng);

/// Axis-aligned grid over the coefficient boxes of a scalar parameter
/// family, spacing eps_param per axis, plus the certified concept-space
/// radius implied by the family's continuity constant.
struct ParameterNet {
  std::vector<std::vector<double>> points;
  double eps_param = 0.0;
  double induced_concept_eps = 0.0;
  std::string family;
};

ParameterNet parameter_net(const concepts::ParameterFamily& family, double eps_param);

/// Closed-form covering bounds, stored as log10 to avoid overflow.
struct CoveringBoundReport {
  std::string family;
  double log10_bound = 0.0;
};

/// [m (6 l / eps)^32]^l for 1d local circuits on m qubits of depth l.
CoveringBoundReport bound_lqc(int m, int l, double eps);
/// (6 m l / eps)^(32 m l) for brickwork circuits.
CoveringBoundReport bound_brickwork(int m, int l, double eps);
/// (6 / eps)^(2^(2m + 2)) for all m-qubit unitaries.
CoveringBoundReport bound_full_unitary(int m, double eps);
/// 2 (4 n B^2 / eps^2)^(D log2(4 e B n / (D eps))) for real function classes
/// with fat-shattering dimension D and range [0, B].
CoveringBoundReport bound_fatshatter(int64_t n, double range_bound, double eps, double fat_dim);
/// (1 + 2 R / eps)^K for a radius-R ball in K real dimensions.
CoveringBoundReport bound_ball(double radius, double eps, double dims);

/// 4 exp(log_cover) exp(-n eps^2 / (32 c^2)): the uniform-convergence
/// failure ceiling given a natural-log covering number.
double uniform_convergence_bound(int64_t n, double eps, double log_cover, double loss_range);

}  // namespace cqlearn::nets
