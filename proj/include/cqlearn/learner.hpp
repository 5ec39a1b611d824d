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

#include "cqlearn/algorithms.hpp"
#include "cqlearn/nets.hpp"

namespace cqlearn::learner {

using concepts::ConceptClass;
using concepts::CQSource;
using concepts::Label;

struct LearnerConfig {
  algorithms::AlgorithmConfig alg;
  double net_eps = 0.0;  // 0: alg.eps
  int net_sample_budget = 64;
  std::optional<int> net_prefix;  // build the net on the first m0 labels only
  int net_cap = 512;              // refuse larger nets
  int true_risk_mc = 100000;

  enum class Backend { Auto, Dense, Commuting };
  Backend backend = Backend::Auto;

  double resolved_net_eps() const { return net_eps > 0 ? net_eps : alg.eps; }
};

/// Per-net-member row of a pipeline report. Oracle columns come from the
/// validation interface (true channel access); the learning path never
/// reads them.
struct MemberReport {
  int index = -1;
  bool selected = false;
  double estimated_risk = -1.0;  // -1 when the pipeline estimates only the selected concept
  double oracle_empirical_risk = 0.0;
  double oracle_true_risk = 0.0;
  double oracle_true_risk_se = 0.0;
  double estimate_gap = 0.0;  // |estimated - oracle true|, when estimated
};

struct RiskReport {
  std::vector<MemberReport> members;
  int selected = -1;
  double mu_hat = 0.0;  // acceptance-scale estimate from ERM (1 - risk scale)
  double selected_true_risk = 0.0;
  double selected_empirical_risk = 0.0;
  double inf_true_risk = 0.0;       // over the net
  double inf_empirical_risk = 0.0;  // over the net
  double max_estimate_gap = 0.0;
  bool degenerate = false;
  int net_size = 0;
  int64_t n_sites = 0;
  uint64_t seed = 0, stream = 0;
  std::string backend;
  std::string warning;
};

/// Labels drawn i.i.d. from the source plus the materialized quantum
/// register (single-copy semantics: one state per draw).
std::pair<std::vector<Label>, simstate::ProductState> draw_training_set(const CQSource& source,
                                                                        int64_t n,
                                                                        CounterRng& rng,
                                                                        simstate::Backend backend);

/// Net + threshold-search ERM on the quantum register; projector classes.
RiskReport learn_projector_class(const CQSource& source, const ConceptClass& cls,
                                 const LearnerConfig& cfg, CounterRng rng);

/// Net + risk estimation for every net member; projector classes.
RiskReport shadow_cq(const CQSource& source, const ConceptClass& cls, const LearnerConfig& cfg,
                     CounterRng rng);

/// Net + Helstrom-projector risk estimation + hypothesis selection; state
/// classes.
RiskReport learn_state_class(const CQSource& source, const ConceptClass& cls,
                             const LearnerConfig& cfg, CounterRng rng);

struct UniformConvergencePoint {
  int64_t n = 0;
  double median_sup_gap = 0.0;
  double max_sup_gap = 0.0;
  double exceed_freq = 0.0;  // fraction of trials with sup gap >= eps
  double bound = 0.0;        // uniform-convergence ceiling at this n (may exceed 1)
};

/// Empirical sup-gap curve max_c |R(c) - R_hat(c)| over a grid of sample
/// sizes; oracle-only harness.
std::vector<UniformConvergencePoint> uniform_convergence_experiment(
    const CQSource& source, const ConceptClass& cls, std::span<const int64_t> n_grid, int trials,
    double eps, double log_cover, CounterRng rng);

}  // namespace cqlearn::learner
