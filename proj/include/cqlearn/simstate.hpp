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
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "cqlearn/pbnoise.hpp"
#include "cqlearn/qcore.hpp"
#include "cqlearn/rng.hpp"

namespace cqlearn::simstate {

struct SimConfig {
  /// Dense product states must satisfy sum_i log2(d_i) <= dense_cap_bits.
  int dense_cap_bits = 14;
  /// Ensemble size for the commuting importance sampler.
  int particles = 100000;
  /// Residual resampling triggers when ESS < resample_threshold * particles.
  double resample_threshold = 0.5;
  /// Largest site count for the exact Poisson-binomial path on fresh states.
  int64_t pb_exact_cap = 5000;
  /// Largest joint-count table kept exactly for evolved commuting states.
  int64_t cell_cap = 200000;
  /// Memory guard for the particle count table, in bytes.
  int64_t particle_bytes_cap = 400000000;

  enum class CommutingMode { Auto, Cells, Particles };
  CommutingMode commuting_mode = CommutingMode::Auto;
};

/// Smoothed threshold event: per-site projectors, threshold theta in [0, 1],
/// exponential-noise rate lambda in (0, 1). Measured against an n-site state,
/// it accepts with probability Pr(T + X > theta * n), T the acceptance count
/// and X the exponential noise.
struct GentleEvent {
  std::vector<qcore::Projector> site_projectors;
  double theta = 0.0;
  double lambda = 0.0;

  size_t size() const { return site_projectors.size(); }
  double theta_n() const { return theta * static_cast<double>(site_projectors.size()); }
};

/// Event with lambda = 1 / (noise_scale * sqrt(n)). Throws when the implied
/// lambda reaches 1.
GentleEvent build_gentle_event(std::vector<qcore::Projector> projs, double theta,
                               double noise_scale, size_t n);

struct MeasurementOutcome {
  bool accepted = false;
  double p_accept = 0.0;  // probability of the accepting branch
};

enum class Backend { Dense, Commuting };

/// Immutable product-state description. Dense states are bounded by the
/// dense cap; commuting states must be diagonal in the computational basis.
class ProductState {
 public:
  ProductState(std::vector<qcore::DensityMatrix> sites, Backend backend,
               const SimConfig& cfg = {});

  size_t size() const { return sites_.size(); }
  Backend backend() const { return backend_; }
  const std::vector<qcore::DensityMatrix>& sites() const { return sites_; }
  const qcore::DensityMatrix& site(size_t i) const { return sites_[i]; }

 private:
  std::vector<qcore::DensityMatrix> sites_;
  Backend backend_;
};

// ---------------------------------------------------------------------------
// Dense evolved state. Exact; the ground-truth oracle for the commuting
// backend. Post-measurement states follow the sqrt convention
// rho | sqrt(E) = sqrt(E) rho sqrt(E) / Tr[E rho].
// ---------------------------------------------------------------------------
class DenseState {
 public:
  DenseState(const ProductState& ps, const SimConfig& cfg = {});

  Eigen::Index dim() const { return rho_.rows(); }
  size_t sites() const { return dims_.size(); }
  const qcore::ComplexMatrix& rho() const { return rho_; }
  bool fresh() const { return fresh_; }

  double expect_event(const GentleEvent& ev) const;
  MeasurementOutcome measure_event(const GentleEvent& ev, CounterRng& rng);
  /// Forced branch, no sampling; returns the branch probability.
  double apply_event_branch(const GentleEvent& ev, bool accept);

  /// Count of per-site acceptances of the joint projective measurement of
  /// the averaged observable. Fresh states only; consumes the state.
  int64_t measure_average(const std::vector<qcore::Projector>& projs, CounterRng& rng);

  // Generic event utilities (used by sequential-measurement checks).
  double expect_op(const qcore::ComplexMatrix& a) const;
  /// rho <- sqrt(E) rho sqrt(E) / p with p = Tr[E rho]; returns p.
  double collapse_sqrt(const qcore::ComplexMatrix& event);

 private:
  void require_usable() const;

  qcore::ComplexMatrix rho_;
  std::vector<Eigen::Index> dims_;
  std::vector<qcore::DensityMatrix> fresh_sites_;
  bool fresh_ = true;
  bool consumed_ = false;
};

// ---------------------------------------------------------------------------
// Commuting (simultaneously diagonal) evolved state over grouped sites.
// Exact joint-count table when it fits; otherwise a sequential-importance
// particle ensemble with exact per-particle weights.
// ---------------------------------------------------------------------------

/// Sites sharing one diagonal distribution; `count` of them.
struct CommutingGroup {
  int64_t count = 0;
  std::vector<double> probs;  // d entries, sum 1
};

/// Group-level view of an event: mask bit v set means basis value v is
/// accepted by the site projector of every site in that group.
struct GroupEvent {
  std::vector<uint32_t> masks;  // one per group
  double theta_n = 0.0;
  double lambda = 0.0;
};

class CommutingState {
 public:
  /// Site-level construction (each site its own group).
  CommutingState(const ProductState& ps, const SimConfig& cfg, CounterRng ensemble_rng);
  /// Grouped construction.
  CommutingState(std::vector<CommutingGroup> groups, const SimConfig& cfg,
                 CounterRng ensemble_rng);

  int64_t total_sites() const { return n_; }
  size_t group_count() const { return groups_.size(); }
  bool exact() const { return mode_ == Mode::Cells; }
  bool fresh() const { return events_applied_ == 0; }
  /// Effective sample size of the ensemble (particle mode).
  double ess() const;

  double expect_event(const GroupEvent& ev) const;
  MeasurementOutcome measure_event(const GroupEvent& ev, CounterRng& rng);
  double apply_event_branch(const GroupEvent& ev, bool accept, CounterRng& rng);

  int64_t measure_average(std::span<const uint32_t> group_masks, CounterRng& rng);

  /// Translate a site-level gentle event (diagonal projectors) to group form.
  GroupEvent group_event(const GentleEvent& ev) const;

 private:
  enum class Mode { Cells, Particles };

  void init_cells();
  void ensure_particles() const;
  double particle_estimate(const GroupEvent& ev) const;
  double cell_expect(const GroupEvent& ev) const;
  void maybe_resample(CounterRng& rng);
  void require_usable() const;
  std::optional<double> fresh_exact(const GroupEvent& ev) const;

  std::vector<CommutingGroup> groups_;
  std::vector<int32_t> site_group_;  // only for site-level construction
  int64_t n_ = 0;
  int d_ = 0;  // uniform local dimension
  SimConfig cfg_;
  Mode mode_ = Mode::Particles;
  int events_applied_ = 0;
  bool consumed_ = false;

  // Cells mode: weight per joint count vector (d = 2 only), mixed radix.
  std::vector<double> cell_w_;
  std::vector<int64_t> cell_radix_;

  // Particle mode: value counts per (particle, group, value), flattened.
  // Materialized lazily on first ensemble use.
  CounterRng ensemble_rng_;
  mutable int particles_ = 0;
  mutable std::vector<uint32_t> counts_;
  mutable std::vector<double> w_;
};

/// Per-site diagonal acceptance mask of a projector; throws unless the
/// projector is diagonal with 0/1 entries (tolerances 1e-12 / 1e-9).
uint32_t diagonal_projector_mask(const qcore::Projector& p);
Eigen::VectorXd diagonal_of_state(const qcore::DensityMatrix& rho);

/// Evolved commuting state with the given events already rejected.
CommutingState commuting_evolved_state(const ProductState& ps,
                                       const std::vector<GentleEvent>& rejected,
                                       const SimConfig& cfg, CounterRng ensemble_rng);

/// Group compression of a site-level commuting instance: sites with equal
/// state diagonal and equal per-concept masks share a group.
struct CommutingInstance {
  int d = 0;
  int64_t n_sites = 0;
  std::vector<CommutingGroup> groups;
  std::vector<std::vector<uint32_t>> concept_masks;  // [concept][group]
  std::vector<int32_t> site_group;                   // [site]

  /// Average acceptance probability of concept c: (1/n) sum_i Tr[rho_i Pi_i].
  double concept_mean(size_t c) const;
  /// Mean of concept c over a subset of sites.
  double concept_mean_on(size_t c, std::span<const int64_t> sites) const;
  /// Block sub-state over the given site indices. Group order matches the
  /// instance group order (empty groups keep their slot).
  CommutingState block_state(std::span<const int64_t> sites, const SimConfig& cfg,
                             CounterRng ensemble_rng) const;
  /// Masks of concept c in instance group order, optionally complemented.
  std::vector<uint32_t> concept_group_masks(size_t c, bool complement) const;
};

CommutingInstance compress_commuting(const std::vector<Eigen::VectorXd>& site_diags,
                                     const std::vector<std::vector<uint32_t>>& concept_site_masks);

}  // namespace cqlearn::simstate
