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

#include "cqlearn/simstate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "cqlearn/stats.hpp"

namespace cqlearn::simstate {

using qcore::ComplexMatrix;
using Eigen::Index;

GentleEvent build_gentle_event(std::vector<qcore::Projector> projs, double theta,
                               double noise_scale, size_t n) {
  if (noise_scale <= 0) throw contract_error("build_gentle_event: noise scale must be positive");
  if (projs.size() != n)
    throw contract_error("build_gentle_event: projector count must equal the site count");
  double lambda = 1.0 / (noise_scale * std::sqrt(static_cast<double>(n)));
  if (!(lambda < 1.0))
    throw contract_error("build_gentle_event: lambda = 1/(D sqrt(n)) must be below 1");
  GentleEvent ev;
  ev.site_projectors = std::move(projs);
  ev.theta = theta;
  ev.lambda = lambda;
  return ev;
}

// --------------------------------------------------------------------------
// ProductState
// --------------------------------------------------------------------------

ProductState::ProductState(std::vector<qcore::DensityMatrix> sites, Backend backend,
                           const SimConfig& cfg)
    : sites_(std::move(sites)), backend_(backend) {
  if (sites_.empty()) throw contract_error("ProductState: need at least one site");
  if (backend_ == Backend::Dense) {
    double bits = 0;
    for (const auto& s : sites_) bits += std::log2(static_cast<double>(s.dim()));
    if (bits > cfg.dense_cap_bits + 1e-9)
      throw capacity_error("ProductState: dense product exceeds the configured cap");
  } else {
    for (const auto& s : sites_) (void)diagonal_of_state(s);
  }
}

// --------------------------------------------------------------------------
// Dense backend
// --------------------------------------------------------------------------

namespace {

// rho <- (I (x) m (x) I) rho, with m acting on the site with the given
// prefix dimension P, local dimension d and suffix dimension s.
void left_mul_site(ComplexMatrix& rho, const ComplexMatrix& m, Index p_dim, Index d, Index s) {
  Eigen::VectorXcd tmp(d);
  for (Index col = 0; col < rho.cols(); ++col) {
    for (Index a = 0; a < p_dim; ++a) {
      for (Index c = 0; c < s; ++c) {
        const Index base = a * d * s + c;
        for (Index b = 0; b < d; ++b) {
          std::complex<double> acc = 0;
          for (Index bp = 0; bp < d; ++bp) acc += m(b, bp) * rho(base + bp * s, col);
          tmp(b) = acc;
        }
        for (Index b = 0; b < d; ++b) rho(base + b * s, col) = tmp(b);
      }
    }
  }
}

// rho <- rho (I (x) m (x) I)
void right_mul_site(ComplexMatrix& rho, const ComplexMatrix& m, Index p_dim, Index d, Index s) {
  Eigen::VectorXcd tmp(d);
  for (Index row = 0; row < rho.rows(); ++row) {
    for (Index a = 0; a < p_dim; ++a) {
      for (Index c = 0; c < s; ++c) {
        const Index base = a * d * s + c;
        for (Index b = 0; b < d; ++b) {
          std::complex<double> acc = 0;
          for (Index bp = 0; bp < d; ++bp) acc += rho(row, base + bp * s) * m(bp, b);
          tmp(b) = acc;
        }
        for (Index b = 0; b < d; ++b) rho(row, base + b * s) = tmp(b);
      }
    }
  }
}

// rho <- M rho M^dagger with M = kron_i ms[i] (adjoint = true conjugates by
// M^dagger instead).
void conjugate_by_sites(ComplexMatrix& rho, const std::vector<ComplexMatrix>& ms,
                        const std::vector<Index>& dims, bool adjoint) {
  Index p_dim = 1;
  Index s = rho.rows();
  for (size_t i = 0; i < ms.size(); ++i) {
    const Index d = dims[i];
    s /= d;
    ComplexMatrix m = adjoint ? ComplexMatrix(ms[i].adjoint()) : ms[i];
    left_mul_site(rho, m, p_dim, d, s);
    right_mul_site(rho, m.adjoint(), p_dim, d, s);
    p_dim *= d;
  }
}

struct EventBasis {
  std::vector<ComplexMatrix> vecs;      // per-site eigenvectors of the projector
  std::vector<std::vector<int>> accept; // per-site acceptance flag per eigenindex
};

EventBasis event_basis(const GentleEvent& ev) {
  EventBasis eb;
  eb.vecs.reserve(ev.size());
  eb.accept.reserve(ev.size());
  for (const auto& p : ev.site_projectors) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(p.mat());
    eb.vecs.push_back(es.eigenvectors());
    std::vector<int> acc(p.dim());
    for (Index i = 0; i < p.dim(); ++i) acc[static_cast<size_t>(i)] = es.eigenvalues()(i) > 0.5;
    eb.accept.push_back(std::move(acc));
  }
  return eb;
}

// Acceptance count t(J) for every product basis string J of the event basis.
std::vector<int> count_table(const EventBasis& eb, const std::vector<Index>& dims) {
  std::vector<int> t{0};
  for (size_t i = 0; i < dims.size(); ++i) {
    std::vector<int> nxt(t.size() * static_cast<size_t>(dims[i]));
    size_t k = 0;
    for (int base : t)
      for (Index b = 0; b < dims[i]; ++b) nxt[k++] = base + eb.accept[i][static_cast<size_t>(b)];
    t = std::move(nxt);
  }
  return t;
}

}  // namespace

DenseState::DenseState(const ProductState& ps, const SimConfig& cfg) {
  if (ps.backend() != Backend::Dense) {
    // commuting product states are still valid dense instances
    double bits = 0;
    for (const auto& s : ps.sites()) bits += std::log2(static_cast<double>(s.dim()));
    if (bits > cfg.dense_cap_bits + 1e-9)
      throw capacity_error("DenseState: product exceeds the dense cap");
  }
  rho_ = ComplexMatrix::Ones(1, 1);
  for (const auto& s : ps.sites()) {
    rho_ = qcore::kron(rho_, s.mat());
    dims_.push_back(s.dim());
  }
  fresh_sites_ = ps.sites();
}

void DenseState::require_usable() const {
  if (consumed_) throw precondition_error("DenseState: state already consumed");
}

double DenseState::expect_event(const GentleEvent& ev) const {
  require_usable();
  if (ev.size() != dims_.size())
    throw contract_error("expect_event: event length must match the site count");
  EventBasis eb = event_basis(ev);
  ComplexMatrix rot = rho_;
  conjugate_by_sites(rot, eb.vecs, dims_, /*adjoint=*/true);
  std::vector<int> t = count_table(eb, dims_);
  const pbnoise::ExponentialNoise noise(ev.lambda);
  const double theta_n = ev.theta_n();
  KahanSum acc;
  for (Index j = 0; j < rot.rows(); ++j)
    acc.add(noise.survival(theta_n - t[static_cast<size_t>(j)]) * rot(j, j).real());
  return std::clamp(acc.value(), 0.0, 1.0);
}

double DenseState::apply_event_branch(const GentleEvent& ev, bool accept) {
  require_usable();
  if (ev.size() != dims_.size())
    throw contract_error("measure_event: event length must match the site count");
  EventBasis eb = event_basis(ev);
  conjugate_by_sites(rho_, eb.vecs, dims_, /*adjoint=*/true);
  std::vector<int> t = count_table(eb, dims_);
  const pbnoise::ExponentialNoise noise(ev.lambda);
  const double theta_n = ev.theta_n();
  const Index dim = rho_.rows();
  Eigen::VectorXd c(dim);
  KahanSum pacc;
  for (Index j = 0; j < dim; ++j) {
    c(j) = noise.survival(theta_n - t[static_cast<size_t>(j)]);
    pacc.add(c(j) * rho_(j, j).real());
  }
  double p = std::clamp(pacc.value(), 0.0, 1.0);
  double branch = accept ? p : 1.0 - p;
  if (branch < 1e-300) throw degenerate_error("measure_event: branch probability underflows");
  Eigen::VectorXd f(dim);
  for (Index j = 0; j < dim; ++j) f(j) = std::sqrt(accept ? c(j) : 1.0 - c(j));
  for (Index j = 0; j < dim; ++j)
    for (Index k = 0; k < dim; ++k) rho_(j, k) *= f(j) * f(k);
  rho_ /= branch;
  conjugate_by_sites(rho_, eb.vecs, dims_, /*adjoint=*/false);
  fresh_ = false;
  return p;
}

MeasurementOutcome DenseState::measure_event(const GentleEvent& ev, CounterRng& rng) {
  // sample first so the branch draw does not depend on how the collapse is
  // carried out
  double p = expect_event(ev);
  bool accept = rng.bernoulli(p);
  apply_event_branch(ev, accept);
  return {accept, p};
}

int64_t DenseState::measure_average(const std::vector<qcore::Projector>& projs, CounterRng& rng) {
  require_usable();
  if (!fresh_)
    throw precondition_error("measure_average: state is no longer a fresh product state");
  if (projs.size() != dims_.size())
    throw contract_error("measure_average: projector count must match the site count");
  // The joint projective measurement of the averaged observable factorizes
  // over the sites on product input.
  int64_t x = 0;
  for (size_t i = 0; i < projs.size(); ++i) {
    double p = (fresh_sites_[i].mat() * projs[i].mat()).trace().real();
    p = std::clamp(p, 0.0, 1.0);
    x += rng.bernoulli(p) ? 1 : 0;
  }
  consumed_ = true;
  return x;
}

double DenseState::expect_op(const ComplexMatrix& a) const {
  require_usable();
  return (rho_ * a).trace().real();
}

double DenseState::collapse_sqrt(const ComplexMatrix& event) {
  require_usable();
  double p = (rho_ * event).trace().real();
  if (p < 1e-300) throw degenerate_error("collapse_sqrt: branch probability underflows");
  ComplexMatrix r = qcore::sqrt_psd(event);
  rho_ = (r * rho_ * r) / p;
  rho_ = (rho_ + rho_.adjoint()) * 0.5;
  fresh_ = false;
  return p;
}

// --------------------------------------------------------------------------
// Commuting backend
// --------------------------------------------------------------------------

uint32_t diagonal_projector_mask(const qcore::Projector& p) {
  const ComplexMatrix& m = p.mat();
  if (m.rows() > 31) throw capacity_error("diagonal_projector_mask: local dimension above 31");
  uint32_t mask = 0;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (i != j && std::abs(m(i, j)) > 1e-12)
        throw contract_error("commuting backend: projector is not diagonal");
    }
    double v = m(i, i).real();
    if (std::abs(v - 1.0) < 1e-9) {
      mask |= (1u << i);
    } else if (std::abs(v) > 1e-9) {
      throw contract_error("commuting backend: diagonal projector entries must be 0 or 1");
    }
  }
  return mask;
}

Eigen::VectorXd diagonal_of_state(const qcore::DensityMatrix& rho) {
  const ComplexMatrix& m = rho.mat();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (i != j && std::abs(m(i, j)) > 1e-12)
        throw contract_error("commuting backend: state is not diagonal");
  Eigen::VectorXd d(m.rows());
  for (Index i = 0; i < m.rows(); ++i) d(i) = std::max(0.0, m(i, i).real());
  return d;
}

namespace {

double group_site_prob(const CommutingGroup& g, uint32_t mask) {
  double p = 0;
  for (size_t v = 0; v < g.probs.size(); ++v)
    if (mask & (1u << v)) p += g.probs[v];
  return std::clamp(p, 0.0, 1.0);
}

// Acceptance count contributed by a group given its value counts.
int64_t masked_count(const uint32_t* counts, int d, uint32_t mask) {
  int64_t t = 0;
  for (int v = 0; v < d; ++v)
    if (mask & (1u << v)) t += counts[v];
  return t;
}

std::vector<double> binomial_pmf_row(int64_t n, double p) {
  std::vector<double> pmf(static_cast<size_t>(n) + 1, 0.0);
  pmf[0] = 1.0;
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t k = i + 1; k > 0; --k) pmf[static_cast<size_t>(k)] =
        pmf[static_cast<size_t>(k)] * (1 - p) + pmf[static_cast<size_t>(k - 1)] * p;
    pmf[0] *= (1 - p);
  }
  return pmf;
}

}  // namespace

CommutingState::CommutingState(const ProductState& ps, const SimConfig& cfg, CounterRng ensemble_rng)
    : cfg_(cfg), ensemble_rng_(ensemble_rng) {
  d_ = static_cast<int>(ps.site(0).dim());
  for (const auto& s : ps.sites()) {
    if (static_cast<int>(s.dim()) != d_)
      throw contract_error("CommutingState: sites must share one local dimension");
    Eigen::VectorXd diag = diagonal_of_state(s);
    CommutingGroup g;
    g.count = 1;
    g.probs.assign(diag.data(), diag.data() + diag.size());
    groups_.push_back(std::move(g));
  }
  n_ = static_cast<int64_t>(ps.size());
  site_group_.resize(ps.size());
  std::iota(site_group_.begin(), site_group_.end(), 0);
  init_cells();
}

CommutingState::CommutingState(std::vector<CommutingGroup> groups, const SimConfig& cfg,
                               CounterRng ensemble_rng)
    : groups_(std::move(groups)), cfg_(cfg), ensemble_rng_(ensemble_rng) {
  if (groups_.empty()) throw contract_error("CommutingState: need at least one group");
  d_ = static_cast<int>(groups_[0].probs.size());
  for (const auto& g : groups_) {
    if (static_cast<int>(g.probs.size()) != d_)
      throw contract_error("CommutingState: groups must share one local dimension");
    n_ += g.count;
  }
  init_cells();
}

void CommutingState::init_cells() {
  if (cfg_.commuting_mode == SimConfig::CommutingMode::Particles) {
    mode_ = Mode::Particles;
    return;
  }
  // The exact joint table tracks the count of value-1 sites per group, so it
  // applies only to local dimension 2.
  bool ok = d_ == 2;
  long double cells = 1;
  if (ok) {
    for (const auto& g : groups_) {
      cells *= static_cast<long double>(g.count + 1);
      if (cells > static_cast<long double>(cfg_.cell_cap)) {
        ok = false;
        break;
      }
    }
  }
  if (!ok) {
    if (cfg_.commuting_mode == SimConfig::CommutingMode::Cells)
      throw capacity_error("CommutingState: exact cell table exceeds cell_cap");
    mode_ = Mode::Particles;
    return;
  }
  mode_ = Mode::Cells;
  cell_radix_.resize(groups_.size());
  int64_t total = 1;
  for (size_t g = 0; g < groups_.size(); ++g) {
    cell_radix_[g] = groups_[g].count + 1;
    total *= cell_radix_[g];
  }
  cell_w_.assign(static_cast<size_t>(total), 1.0);
  // weight = product over groups of Binomial(count_g, p1_g) at k_g
  std::vector<std::vector<double>> rows;
  rows.reserve(groups_.size());
  for (const auto& g : groups_) rows.push_back(binomial_pmf_row(g.count, g.probs[1]));
  for (int64_t cell = 0; cell < total; ++cell) {
    int64_t rest = cell;
    double w = 1.0;
    for (size_t g = 0; g < groups_.size(); ++g) {
      int64_t k = rest % cell_radix_[g];
      rest /= cell_radix_[g];
      w *= rows[g][static_cast<size_t>(k)];
    }
    cell_w_[static_cast<size_t>(cell)] = w;
  }
}

void CommutingState::ensure_particles() const {
  if (particles_ > 0) return;
  particles_ = cfg_.particles;
  if (particles_ <= 0) throw contract_error("CommutingState: particle count must be positive");
  const int64_t slots = static_cast<int64_t>(groups_.size()) * d_;
  if (static_cast<int64_t>(particles_) * slots * 4 > cfg_.particle_bytes_cap)
    throw capacity_error(
        "CommutingState: particle table exceeds particle_bytes_cap; compress groups or lower "
        "the particle count");
  counts_.assign(static_cast<size_t>(particles_) * static_cast<size_t>(slots), 0);
  w_.assign(static_cast<size_t>(particles_), 1.0);
  for (int p = 0; p < particles_; ++p) {
    CounterRng prng = ensemble_rng_.substream(static_cast<uint64_t>(p));
    for (size_t g = 0; g < groups_.size(); ++g) {
      auto counts = prng.multinomial(groups_[g].count, groups_[g].probs);
      for (int v = 0; v < d_; ++v)
        counts_[static_cast<size_t>(p) * slots + g * static_cast<size_t>(d_) + v] =
            static_cast<uint32_t>(counts[static_cast<size_t>(v)]);
    }
  }
}

double CommutingState::ess() const {
  if (mode_ == Mode::Cells) return static_cast<double>(cell_w_.size());
  ensure_particles();
  double s = 0, s2 = 0;
  for (double w : w_) {
    s += w;
    s2 += w * w;
  }
  return s2 > 0 ? s * s / s2 : 0.0;
}

void CommutingState::require_usable() const {
  if (consumed_) throw precondition_error("CommutingState: state already consumed");
}

std::optional<double> CommutingState::fresh_exact(const GroupEvent& ev) const {
  if (events_applied_ != 0 || n_ > cfg_.pb_exact_cap) return std::nullopt;
  std::vector<double> probs;
  probs.reserve(static_cast<size_t>(n_));
  for (size_t g = 0; g < groups_.size(); ++g) {
    double p = group_site_prob(groups_[g], ev.masks[g]);
    for (int64_t i = 0; i < groups_[g].count; ++i) probs.push_back(p);
  }
  auto pb = pbnoise::pb_pmf(probs);
  return pbnoise::smoothed_tail(pb, pbnoise::ExponentialNoise(ev.lambda), ev.theta_n);
}

double CommutingState::cell_expect(const GroupEvent& ev) const {
  const pbnoise::ExponentialNoise noise(ev.lambda);
  KahanSum num, den;
  const size_t total = cell_w_.size();
  for (size_t cell = 0; cell < total; ++cell) {
    double w = cell_w_[cell];
    if (w == 0.0) continue;
    int64_t rest = static_cast<int64_t>(cell);
    int64_t t = 0;
    for (size_t g = 0; g < groups_.size(); ++g) {
      int64_t k = rest % cell_radix_[g];
      rest /= cell_radix_[g];
      uint32_t mask = ev.masks[g];
      if (mask & 2u) t += k;                       // value 1 accepted
      if (mask & 1u) t += groups_[g].count - k;    // value 0 accepted
    }
    double c = noise.survival(ev.theta_n - static_cast<double>(t));
    num.add(w * c);
    den.add(w);
  }
  double d = den.value();
  if (d <= 1e-300) throw degenerate_error("CommutingState: evolved-state weight underflows");
  return std::clamp(num.value() / d, 0.0, 1.0);
}

double CommutingState::particle_estimate(const GroupEvent& ev) const {
  ensure_particles();
  const pbnoise::ExponentialNoise noise(ev.lambda);
  const int64_t slots = static_cast<int64_t>(groups_.size()) * d_;
  KahanSum num, den;
  for (int p = 0; p < particles_; ++p) {
    const uint32_t* row = counts_.data() + static_cast<size_t>(p) * slots;
    int64_t t = 0;
    for (size_t g = 0; g < groups_.size(); ++g)
      t += masked_count(row + g * static_cast<size_t>(d_), d_, ev.masks[g]);
    double c = noise.survival(ev.theta_n - static_cast<double>(t));
    num.add(w_[static_cast<size_t>(p)] * c);
    den.add(w_[static_cast<size_t>(p)]);
  }
  double d = den.value();
  if (d <= 1e-300) throw degenerate_error("CommutingState: particle weights underflow");
  return std::clamp(num.value() / d, 0.0, 1.0);
}

double CommutingState::expect_event(const GroupEvent& ev) const {
  require_usable();
  if (ev.masks.size() != groups_.size())
    throw contract_error("expect_event: mask count must match the group count");
  if (mode_ == Mode::Cells) return cell_expect(ev);
  if (auto exact = fresh_exact(ev)) return *exact;
  return particle_estimate(ev);
}

double CommutingState::apply_event_branch(const GroupEvent& ev, bool accept, CounterRng& rng) {
  require_usable();
  double p = expect_event(ev);
  double branch = accept ? p : 1.0 - p;
  if (branch < 1e-300) throw degenerate_error("measure_event: branch probability underflows");
  const pbnoise::ExponentialNoise noise(ev.lambda);
  if (mode_ == Mode::Cells) {
    const size_t total = cell_w_.size();
    for (size_t cell = 0; cell < total; ++cell) {
      if (cell_w_[cell] == 0.0) continue;
      int64_t rest = static_cast<int64_t>(cell);
      int64_t t = 0;
      for (size_t g = 0; g < groups_.size(); ++g) {
        int64_t k = rest % cell_radix_[g];
        rest /= cell_radix_[g];
        uint32_t mask = ev.masks[g];
        if (mask & 2u) t += k;
        if (mask & 1u) t += groups_[g].count - k;
      }
      double c = noise.survival(ev.theta_n - static_cast<double>(t));
      cell_w_[cell] *= accept ? c : (1.0 - c);
    }
  } else {
    ensure_particles();
    const int64_t slots = static_cast<int64_t>(groups_.size()) * d_;
    for (int pi = 0; pi < particles_; ++pi) {
      const uint32_t* row = counts_.data() + static_cast<size_t>(pi) * slots;
      int64_t t = 0;
      for (size_t g = 0; g < groups_.size(); ++g)
        t += masked_count(row + g * static_cast<size_t>(d_), d_, ev.masks[g]);
      double c = noise.survival(ev.theta_n - static_cast<double>(t));
      w_[static_cast<size_t>(pi)] *= accept ? c : (1.0 - c);
    }
    maybe_resample(rng);
  }
  ++events_applied_;
  return p;
}

MeasurementOutcome CommutingState::measure_event(const GroupEvent& ev, CounterRng& rng) {
  double p = expect_event(ev);
  bool accept = rng.bernoulli(p);
  apply_event_branch(ev, accept, rng);
  return {accept, p};
}

void CommutingState::maybe_resample(CounterRng& rng) {
  if (ess() >= cfg_.resample_threshold * particles_) return;
  // residual resampling
  double total = 0;
  for (double w : w_) total += w;
  if (total <= 0) throw degenerate_error("CommutingState: all particle weights vanished");
  std::vector<int> copies(static_cast<size_t>(particles_), 0);
  std::vector<double> residual(static_cast<size_t>(particles_));
  int assigned = 0;
  for (int p = 0; p < particles_; ++p) {
    double expected = w_[static_cast<size_t>(p)] / total * particles_;
    int base = static_cast<int>(std::floor(expected));
    copies[static_cast<size_t>(p)] = base;
    residual[static_cast<size_t>(p)] = expected - base;
    assigned += base;
  }
  for (int k = assigned; k < particles_; ++k) {
    size_t idx = rng.categorical(residual);
    copies[idx] += 1;
  }
  const int64_t slots = static_cast<int64_t>(groups_.size()) * d_;
  std::vector<uint32_t> nxt(counts_.size());
  size_t out = 0;
  for (int p = 0; p < particles_; ++p) {
    for (int c = 0; c < copies[static_cast<size_t>(p)]; ++c) {
      std::copy_n(counts_.data() + static_cast<size_t>(p) * slots, slots, nxt.data() + out * slots);
      ++out;
    }
  }
  counts_ = std::move(nxt);
  std::fill(w_.begin(), w_.end(), 1.0);
}

int64_t CommutingState::measure_average(std::span<const uint32_t> group_masks, CounterRng& rng) {
  require_usable();
  if (events_applied_ != 0)
    throw precondition_error("measure_average: state is no longer a fresh product state");
  if (group_masks.size() != groups_.size())
    throw contract_error("measure_average: mask count must match the group count");
  int64_t x = 0;
  for (size_t g = 0; g < groups_.size(); ++g) {
    auto counts = rng.multinomial(groups_[g].count, groups_[g].probs);
    for (int v = 0; v < d_; ++v)
      if (group_masks[g] & (1u << v)) x += counts[static_cast<size_t>(v)];
  }
  consumed_ = true;
  return x;
}

GroupEvent CommutingState::group_event(const GentleEvent& ev) const {
  if (site_group_.empty() || static_cast<int64_t>(ev.size()) != n_)
    throw contract_error("group_event: site-level event requires a site-level state");
  GroupEvent ge;
  ge.masks.resize(groups_.size());
  for (size_t i = 0; i < ev.size(); ++i)
    ge.masks[static_cast<size_t>(site_group_[i])] = diagonal_projector_mask(ev.site_projectors[i]);
  ge.theta_n = ev.theta_n();
  ge.lambda = ev.lambda;
  return ge;
}

CommutingState commuting_evolved_state(const ProductState& ps,
                                       const std::vector<GentleEvent>& rejected,
                                       const SimConfig& cfg, CounterRng ensemble_rng) {
  CommutingState st(ps, cfg, ensemble_rng.substream(0));
  CounterRng aux = ensemble_rng.substream(1);
  for (const auto& ev : rejected) {
    st.apply_event_branch(st.group_event(ev), /*accept=*/false, aux);
  }
  return st;
}

// --------------------------------------------------------------------------
// Group compression of commuting instances
// --------------------------------------------------------------------------

CommutingInstance compress_commuting(const std::vector<Eigen::VectorXd>& site_diags,
                                     const std::vector<std::vector<uint32_t>>& concept_site_masks) {
  if (site_diags.empty()) throw contract_error("compress_commuting: need at least one site");
  const size_t n = site_diags.size();
  const size_t m = concept_site_masks.size();
  for (const auto& masks : concept_site_masks)
    if (masks.size() != n)
      throw contract_error("compress_commuting: concept mask lists must cover every site");

  CommutingInstance inst;
  inst.d = static_cast<int>(site_diags[0].size());
  inst.n_sites = static_cast<int64_t>(n);
  inst.site_group.resize(n);
  // signature: quantized diagonal + the per-concept masks
  std::map<std::pair<std::vector<int64_t>, std::vector<uint32_t>>, int32_t> seen;
  for (size_t i = 0; i < n; ++i) {
    if (static_cast<int>(site_diags[i].size()) != inst.d)
      throw contract_error("compress_commuting: sites must share one local dimension");
    std::vector<int64_t> qdiag(static_cast<size_t>(inst.d));
    for (int v = 0; v < inst.d; ++v)
      qdiag[static_cast<size_t>(v)] = std::llround(site_diags[i](v) * 1e14);
    std::vector<uint32_t> masks(m);
    for (size_t c = 0; c < m; ++c) masks[c] = concept_site_masks[c][i];
    auto key = std::make_pair(std::move(qdiag), std::move(masks));
    auto it = seen.find(key);
    if (it == seen.end()) {
      int32_t gid = static_cast<int32_t>(inst.groups.size());
      seen.emplace(std::move(key), gid);
      CommutingGroup g;
      g.count = 0;
      g.probs.assign(site_diags[i].data(), site_diags[i].data() + inst.d);
      inst.groups.push_back(std::move(g));
      for (size_t c = 0; c < m; ++c) {
        if (inst.concept_masks.size() <= c) inst.concept_masks.resize(m);
        inst.concept_masks[c].push_back(concept_site_masks[c][i]);
      }
      inst.site_group[i] = gid;
    } else {
      inst.site_group[i] = it->second;
    }
    inst.groups[static_cast<size_t>(inst.site_group[i])].count += 1;
  }
  if (m == 0) inst.concept_masks.clear();
  return inst;
}

double CommutingInstance::concept_mean(size_t c) const {
  KahanSum acc;
  for (size_t g = 0; g < groups.size(); ++g)
    acc.add(static_cast<double>(groups[g].count) * group_site_prob(groups[g], concept_masks[c][g]));
  return acc.value() / static_cast<double>(n_sites);
}

double CommutingInstance::concept_mean_on(size_t c, std::span<const int64_t> sites) const {
  KahanSum acc;
  for (int64_t i : sites) {
    int32_t g = site_group[static_cast<size_t>(i)];
    acc.add(group_site_prob(groups[static_cast<size_t>(g)],
                            concept_masks[c][static_cast<size_t>(g)]));
  }
  return acc.value() / static_cast<double>(sites.size());
}

CommutingState CommutingInstance::block_state(std::span<const int64_t> sites, const SimConfig& cfg,
                                              CounterRng ensemble_rng) const {
  std::vector<CommutingGroup> block_groups(groups.size());
  for (size_t g = 0; g < groups.size(); ++g) {
    block_groups[g].count = 0;
    block_groups[g].probs = groups[g].probs;
  }
  for (int64_t i : sites)
    block_groups[static_cast<size_t>(site_group[static_cast<size_t>(i)])].count += 1;
  return CommutingState(std::move(block_groups), cfg, ensemble_rng);
}

std::vector<uint32_t> CommutingInstance::concept_group_masks(size_t c, bool complement) const {
  std::vector<uint32_t> masks = concept_masks[c];
  if (complement) {
    uint32_t full = (1u << d) - 1u;
    for (auto& mk : masks) mk = full & ~mk;
  }
  return masks;
}

}  // namespace cqlearn::simstate
