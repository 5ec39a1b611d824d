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

#include <memory>
#include <optional>
#include <string>

#include "cqlearn/batching.hpp"
#include "cqlearn/concepts.hpp"
#include "cqlearn/estimator.hpp"
#include "cqlearn/simstate.hpp"

namespace cqlearn::algorithms {

/// Shared knobs of the measurement algorithms. The constants that the
/// analysis leaves unnamed are exposed here with documented defaults:
/// noise_scale is D in lambda = 1/(D sqrt(n)); c1/c2 parameterize the
/// advisory sizing check (log m + c2)^2 < c1 n eps^2.
struct AlgorithmConfig {
  double eps = 0.1;
  double delta = 0.25;
  double noise_scale = 4.0;
  int t_rounds = 0;    // 0: derived default
  int k_repeats = 0;   // 0: ceil(log(2T/delta) / log(1/0.97))
  int block_size = 0;  // 0: ceil(log(T k / delta) / eps^2)
  int q_copies = 3;
  double c_cal = 10.0;
  double sizing_c1 = 1.0 / 400.0;
  double sizing_c2 = 4.0;
  int64_t estimator_type_cap = 5000000;
  /// Auto picks the representation matching the instance; Dense forces the
  /// explicit-matrix estimate (exact for small label spaces, any projectors).
  enum class EstimatorBackend { Auto, Dense, Commuting };
  EstimatorBackend estimator_backend = EstimatorBackend::Auto;
  simstate::SimConfig sim;

  int resolved_t() const;
  int resolved_k() const;
  int resolved_l() const;
};

/// Advisory check of (log m + C2)^2 < C1 n eps^2; returns a warning string
/// when violated, empty otherwise.
std::string sizing_warning(int64_t n, int m, double eps, const AlgorithmConfig& cfg);

// ---------------------------------------------------------------------------
// Backend-independent instance view: n sites, m per-site projector lists.
// ---------------------------------------------------------------------------

/// Evolving block of sites under sequential smoothed threshold events.
class BlockHandle {
 public:
  virtual ~BlockHandle() = default;
  virtual int64_t size() const = 0;
  /// Measure the event for concept c (optionally with complemented
  /// projectors) built at the given threshold with lambda =
  /// 1/(noise_scale sqrt(size)).
  virtual simstate::MeasurementOutcome measure_concept_event(int c, bool complement, double theta,
                                                             double noise_scale,
                                                             CounterRng& rng) = 0;
  /// Joint counting measurement of concept c's averaged observable.
  /// Fresh blocks only; consumes the block.
  virtual int64_t measure_concept_average(int c, CounterRng& rng) = 0;
};

class MeasurableInstance {
 public:
  virtual ~MeasurableInstance() = default;
  virtual int64_t total_sites() const = 0;
  virtual int concept_count() const = 0;
  virtual std::unique_ptr<BlockHandle> make_block(std::span<const int64_t> sites,
                                                  CounterRng ensemble_rng) const = 0;
  /// Reference estimate matching this instance's label structure.
  virtual EstimatorState make_estimator(int q, const AlgorithmConfig& cfg) const = 0;
  std::unique_ptr<BlockHandle> whole_state(CounterRng ensemble_rng) const;
};

/// Dense instance: explicit per-site states and per-site projector lists.
class DenseInstance : public MeasurableInstance {
 public:
  DenseInstance(std::vector<qcore::DensityMatrix> sites,
                std::vector<std::vector<qcore::Projector>> concept_projs,
                std::vector<int> site_label = {}, const simstate::SimConfig& sim = {});

  int64_t total_sites() const override { return static_cast<int64_t>(sites_.size()); }
  int concept_count() const override { return static_cast<int>(projs_.size()); }
  std::unique_ptr<BlockHandle> make_block(std::span<const int64_t> sites,
                                          CounterRng ensemble_rng) const override;
  EstimatorState make_estimator(int q, const AlgorithmConfig& cfg) const override;
  /// (1/|idx|) sum Tr[rho_i Pi_i]; oracle data for validation harnesses.
  double concept_mean_on(int c, std::span<const int64_t> idx) const;
  double concept_mean(int c) const;

 private:
  std::vector<qcore::DensityMatrix> sites_;
  std::vector<std::vector<qcore::Projector>> projs_;  // [m][n]
  std::vector<int> site_label_;                       // site -> label id (estimator structure)
  int label_count_ = 0;
  simstate::SimConfig sim_;
};

/// Commuting instance backed by the group-compressed representation.
class CommutingInstanceModel : public MeasurableInstance {
 public:
  CommutingInstanceModel(simstate::CommutingInstance inst, const simstate::SimConfig& sim = {});

  int64_t total_sites() const override { return inst_.n_sites; }
  int concept_count() const override { return static_cast<int>(inst_.concept_masks.size()); }
  std::unique_ptr<BlockHandle> make_block(std::span<const int64_t> sites,
                                          CounterRng ensemble_rng) const override;
  EstimatorState make_estimator(int q, const AlgorithmConfig& cfg) const override;
  double concept_mean_on(int c, std::span<const int64_t> idx) const;
  double concept_mean(int c) const;
  const simstate::CommutingInstance& instance() const { return inst_; }

 private:
  simstate::CommutingInstance inst_;
  simstate::SimConfig sim_;
};

// ---------------------------------------------------------------------------
// Threshold search
// ---------------------------------------------------------------------------

/// One searched item: concept, complement flag, threshold.
struct SearchItem {
  int concept_id = 0;
  bool complement = false;
  double theta = 0.0;
};

struct ThresholdSearchResult {
  std::optional<int> accepted_item;         // index into the item list
  std::vector<double> accept_probs;         // per measured item
};

/// Sequentially measure the smoothed threshold events (built at
/// item.theta - eps) on the evolving block; halt at the first acceptance.
ThresholdSearchResult threshold_search(BlockHandle& state, std::span<const SearchItem> items,
                                       double eps, double noise_scale, CounterRng& rng);

/// Per-site projector lists with per-concept thresholds (the direct API for
/// small instances; experiment pipelines use MeasurableInstance).
struct ThresholdedConceptList {
  std::vector<std::vector<qcore::Projector>> site_projectors;  // [m][n]
  std::vector<double> thetas;
};

struct ThresholdSearchRun {
  std::optional<int> accepted_concept;
  std::vector<double> accept_probs;
};

ThresholdSearchRun threshold_search(const simstate::ProductState& state,
                                    const ThresholdedConceptList& concepts,
                                    const AlgorithmConfig& cfg, CounterRng& rng);

// ---------------------------------------------------------------------------
// Empirical risk minimization (binary search over thresholds)
// ---------------------------------------------------------------------------

struct ErmTraceStep {
  double theta = 0.0;
  std::optional<int> search_concept;
  std::vector<double> accept_probs;  // per measured event in this search
  bool checked = false;
  bool check_passed = false;
  int64_t check_count = -1;
};

struct ErmResult {
  int c_star = -1;
  double mu_hat = 0.0;
  bool degenerate = false;  // no concept ever confirmed; c_star drawn uniformly
  int pairs_used = 0;
  std::string warning;
  std::vector<ErmTraceStep> trace;
};

ErmResult erm_projector(const MeasurableInstance& inst, const AlgorithmConfig& cfg,
                        CounterRng& rng);

// ---------------------------------------------------------------------------
// Risk estimation (shadow tomography style)
// ---------------------------------------------------------------------------

struct BadEstimate {
  int concept_id = 0;
  bool upward = false;  // true when the measured average exceeded the estimate
  double measured = 0.0;
};

/// Hunt for a concept whose running estimate disagrees with the measured
/// average: threshold search over direct and complemented lists, confirmed
/// by a counting measurement on a paired fresh block.
std::optional<BadEstimate> search_bad_estimate(
    const MeasurableInstance& inst, const std::vector<std::vector<int64_t>>& block_pairs,
    std::span<const double> lambdas, const AlgorithmConfig& cfg, CounterRng& rng);

struct EreTraceStep {
  int round = 0;
  bool found_bad = false;
  int concept_id = -1;
  bool upward = false;
  double update_prob = 1.0;
  /// A proposed post-selection that is inconsistent with the stored events
  /// (vanishing probability or out-of-range threshold) is skipped.
  bool skipped = false;
};

struct EreResult {
  std::vector<double> estimates;
  int updates = 0;
  std::string warning;
  std::vector<EreTraceStep> trace;
};

EreResult ere_shadow(const MeasurableInstance& inst, const AlgorithmConfig& cfg, CounterRng& rng);

// ---------------------------------------------------------------------------
// Hypothesis selection and the pure-state learner
// ---------------------------------------------------------------------------

struct HypothesisSelection {
  int k_star = -1;
  std::vector<double> deltas;  // max_{i<j} |nu_{kij} - mu_{ij}| per k
};

/// argmin_k max_{i<j} |nu_{kij} - mu_{ij}|; nu indexed [k][pair],
/// mu indexed [pair], pairs in lexicographic (i, j) order.
HypothesisSelection select_hypothesis(const std::vector<std::vector<double>>& nu,
                                      std::span<const double> mu);

struct PureLearnerResult {
  int chosen = -1;
  bool zero_likelihood = false;  // no concept explains the outcomes
};

/// Realizable maximum-likelihood learner for pure-state concepts: measure
/// every output in an independent Haar-random basis and pick the concept
/// maximizing the outcome likelihood (lowest index on ties).
PureLearnerResult pure_state_realizable_learner(
    const std::vector<std::pair<concepts::Label, Eigen::VectorXcd>>& data,
    const concepts::ConceptClass& cls, CounterRng& rng);

}  // namespace cqlearn::algorithms
