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

#include "cqlearn/algorithms.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "cqlearn/stats.hpp"

namespace cqlearn::algorithms {

using qcore::ComplexMatrix;

int AlgorithmConfig::resolved_t() const {
  if (t_rounds > 0) return t_rounds;
  // interval halving with the low <- theta - 2 eps offset converges below
  // 6 eps within ceil(log2(1/(2 eps))) + 2 updates
  return static_cast<int>(std::ceil(std::log2(1.0 / (2.0 * eps)))) + 2;
}

int AlgorithmConfig::resolved_k() const {
  if (k_repeats > 0) return k_repeats;
  int t = resolved_t();
  return static_cast<int>(std::ceil(std::log(2.0 * t / delta) / std::log(1.0 / 0.97)));
}

int AlgorithmConfig::resolved_l() const {
  if (block_size > 0) return block_size;
  double t = resolved_t(), k = resolved_k();
  return static_cast<int>(std::ceil(std::log(t * k / delta) / (eps * eps)));
}

std::string sizing_warning(int64_t n, int m, double eps, const AlgorithmConfig& cfg) {
  double lhs = std::pow(std::log(static_cast<double>(m)) + cfg.sizing_c2, 2.0);
  double rhs = cfg.sizing_c1 * static_cast<double>(n) * eps * eps;
  if (lhs < rhs) return {};
  std::ostringstream os;
  os << "sizing advisory: (log m + C2)^2 = " << lhs << " is not below C1 n eps^2 = " << rhs;
  return os.str();
}

// ---------------------------------------------------------------------------
// instances
// ---------------------------------------------------------------------------

std::unique_ptr<BlockHandle> MeasurableInstance::whole_state(CounterRng ensemble_rng) const {
  std::vector<int64_t> idx(static_cast<size_t>(total_sites()));
  std::iota(idx.begin(), idx.end(), int64_t{0});
  return make_block(idx, ensemble_rng);
}

namespace {

class DenseBlock : public BlockHandle {
 public:
  DenseBlock(const std::vector<qcore::DensityMatrix>& sites,
             const std::vector<std::vector<qcore::Projector>>& projs,
             std::span<const int64_t> idx, const simstate::SimConfig& sim)
      : projs_(projs), idx_(idx.begin(), idx.end()) {
    std::vector<qcore::DensityMatrix> block_sites;
    block_sites.reserve(idx_.size());
    for (int64_t i : idx_) block_sites.push_back(sites[static_cast<size_t>(i)]);
    state_.emplace(simstate::ProductState(std::move(block_sites), simstate::Backend::Dense, sim),
                   sim);
  }

  int64_t size() const override { return static_cast<int64_t>(idx_.size()); }

  simstate::MeasurementOutcome measure_concept_event(int c, bool complement, double theta,
                                                     double noise_scale, CounterRng& rng) override {
    simstate::GentleEvent ev = make_event(c, complement, theta, noise_scale);
    return state_->measure_event(ev, rng);
  }

  int64_t measure_concept_average(int c, CounterRng& rng) override {
    return state_->measure_average(block_projs(c, false), rng);
  }

 private:
  std::vector<qcore::Projector> block_projs(int c, bool complement) const {
    std::vector<qcore::Projector> out;
    out.reserve(idx_.size());
    for (int64_t i : idx_) {
      const auto& p = projs_[static_cast<size_t>(c)][static_cast<size_t>(i)];
      out.push_back(complement ? p.complement() : p);
    }
    return out;
  }
  simstate::GentleEvent make_event(int c, bool complement, double theta,
                                   double noise_scale) const {
    return simstate::build_gentle_event(block_projs(c, complement), theta, noise_scale,
                                        idx_.size());
  }

  const std::vector<std::vector<qcore::Projector>>& projs_;
  std::vector<int64_t> idx_;
  std::optional<simstate::DenseState> state_;
};

class CommutingBlock : public BlockHandle {
 public:
  CommutingBlock(const simstate::CommutingInstance& inst, std::span<const int64_t> idx,
                 const simstate::SimConfig& sim, CounterRng ensemble_rng)
      : inst_(inst), n_(static_cast<int64_t>(idx.size())),
        state_(inst.block_state(idx, sim, ensemble_rng)) {}

  int64_t size() const override { return n_; }

  simstate::MeasurementOutcome measure_concept_event(int c, bool complement, double theta,
                                                     double noise_scale, CounterRng& rng) override {
    double lambda = 1.0 / (noise_scale * std::sqrt(static_cast<double>(n_)));
    if (!(lambda < 1.0))
      throw contract_error("measure_concept_event: lambda = 1/(D sqrt(n)) must be below 1");
    simstate::GroupEvent ev;
    ev.masks = inst_.concept_group_masks(static_cast<size_t>(c), complement);
    ev.theta_n = theta * static_cast<double>(n_);
    ev.lambda = lambda;
    return state_.measure_event(ev, rng);
  }

  int64_t measure_concept_average(int c, CounterRng& rng) override {
    auto masks = inst_.concept_group_masks(static_cast<size_t>(c), false);
    return state_.measure_average(masks, rng);
  }

 private:
  const simstate::CommutingInstance& inst_;
  int64_t n_;
  simstate::CommutingState state_;
};

}  // namespace

DenseInstance::DenseInstance(std::vector<qcore::DensityMatrix> sites,
                             std::vector<std::vector<qcore::Projector>> concept_projs,
                             std::vector<int> site_label, const simstate::SimConfig& sim)
    : sites_(std::move(sites)), projs_(std::move(concept_projs)),
      site_label_(std::move(site_label)), sim_(sim) {
  if (projs_.empty()) throw contract_error("DenseInstance: need at least one concept");
  for (const auto& list : projs_)
    if (list.size() != sites_.size())
      throw contract_error("DenseInstance: one projector per site per concept");
  if (site_label_.empty()) {
    // each site its own label
    site_label_.resize(sites_.size());
    std::iota(site_label_.begin(), site_label_.end(), 0);
  }
  if (site_label_.size() != sites_.size())
    throw contract_error("DenseInstance: one label id per site");
  for (int lbl : site_label_) label_count_ = std::max(label_count_, lbl + 1);
  // a label's projector must be consistent across its sites
  for (const auto& list : projs_) {
    std::vector<int> seen(static_cast<size_t>(label_count_), -1);
    for (size_t i = 0; i < sites_.size(); ++i) {
      int lbl = site_label_[i];
      if (seen[static_cast<size_t>(lbl)] < 0) {
        seen[static_cast<size_t>(lbl)] = static_cast<int>(i);
      } else {
        const auto& a = list[static_cast<size_t>(seen[static_cast<size_t>(lbl)])];
        if ((a.mat() - list[i].mat()).cwiseAbs().maxCoeff() > 1e-12)
          throw contract_error("DenseInstance: projectors must agree within a label class");
      }
    }
  }
}

std::unique_ptr<BlockHandle> DenseInstance::make_block(std::span<const int64_t> idx,
                                                       CounterRng) const {
  return std::make_unique<DenseBlock>(sites_, projs_, idx, sim_);
}

EstimatorState DenseInstance::make_estimator(int q, const AlgorithmConfig& cfg) const {
  // label weights = empirical frequencies in the data
  std::vector<double> w(static_cast<size_t>(label_count_), 0.0);
  std::vector<int> rep(static_cast<size_t>(label_count_), -1);
  for (size_t i = 0; i < sites_.size(); ++i) {
    w[static_cast<size_t>(site_label_[i])] += 1.0 / static_cast<double>(sites_.size());
    rep[static_cast<size_t>(site_label_[i])] = static_cast<int>(i);
  }
  std::vector<std::vector<qcore::Projector>> per_label;
  per_label.reserve(projs_.size());
  for (const auto& list : projs_) {
    std::vector<qcore::Projector> row;
    for (int lbl = 0; lbl < label_count_; ++lbl)
      row.push_back(list[static_cast<size_t>(rep[static_cast<size_t>(lbl)])]);
    per_label.push_back(std::move(row));
  }
  return EstimatorState::dense(std::move(w), std::move(per_label), q, cfg.sim.dense_cap_bits);
}

double DenseInstance::concept_mean_on(int c, std::span<const int64_t> idx) const {
  KahanSum acc;
  for (int64_t i : idx)
    acc.add((sites_[static_cast<size_t>(i)].mat() * projs_[static_cast<size_t>(c)][static_cast<size_t>(i)].mat())
                .trace()
                .real());
  return acc.value() / static_cast<double>(idx.size());
}

double DenseInstance::concept_mean(int c) const {
  std::vector<int64_t> idx(sites_.size());
  std::iota(idx.begin(), idx.end(), int64_t{0});
  return concept_mean_on(c, idx);
}

CommutingInstanceModel::CommutingInstanceModel(simstate::CommutingInstance inst,
                                               const simstate::SimConfig& sim)
    : inst_(std::move(inst)), sim_(sim) {
  if (inst_.concept_masks.empty())
    throw contract_error("CommutingInstanceModel: need at least one concept");
}

std::unique_ptr<BlockHandle> CommutingInstanceModel::make_block(std::span<const int64_t> idx,
                                                                CounterRng ensemble_rng) const {
  return std::make_unique<CommutingBlock>(inst_, idx, sim_, ensemble_rng);
}

EstimatorState CommutingInstanceModel::make_estimator(int q, const AlgorithmConfig& cfg) const {
  // labels = groups; weights = group frequencies
  std::vector<double> w;
  w.reserve(inst_.groups.size());
  for (const auto& g : inst_.groups)
    w.push_back(static_cast<double>(g.count) / static_cast<double>(inst_.n_sites));
  if (cfg.estimator_backend == AlgorithmConfig::EstimatorBackend::Dense) {
    std::vector<std::vector<qcore::Projector>> projs(inst_.concept_masks.size());
    for (size_t c = 0; c < inst_.concept_masks.size(); ++c) {
      for (uint32_t mask : inst_.concept_masks[c]) {
        ComplexMatrix p = ComplexMatrix::Zero(inst_.d, inst_.d);
        for (int v = 0; v < inst_.d; ++v)
          if (mask & (1u << v)) p(v, v) = 1.0;
        projs[c].emplace_back(std::move(p));
      }
    }
    return EstimatorState::dense(std::move(w), std::move(projs), q, cfg.sim.dense_cap_bits);
  }
  std::vector<std::vector<uint32_t>> masks = inst_.concept_masks;
  return EstimatorState::commuting(std::move(w), std::move(masks), inst_.d, q,
                                   cfg.estimator_type_cap);
}

double CommutingInstanceModel::concept_mean_on(int c, std::span<const int64_t> idx) const {
  return inst_.concept_mean_on(static_cast<size_t>(c), idx);
}

double CommutingInstanceModel::concept_mean(int c) const {
  return inst_.concept_mean(static_cast<size_t>(c));
}

// ---------------------------------------------------------------------------
// threshold search
// ---------------------------------------------------------------------------

ThresholdSearchResult threshold_search(BlockHandle& state, std::span<const SearchItem> items,
                                       double eps, double noise_scale, CounterRng& rng) {
  ThresholdSearchResult res;
  for (size_t j = 0; j < items.size(); ++j) {
    auto out = state.measure_concept_event(items[j].concept_id, items[j].complement,
                                           items[j].theta - eps, noise_scale, rng);
    res.accept_probs.push_back(out.p_accept);
    if (out.accepted) {
      res.accepted_item = static_cast<int>(j);
      return res;
    }
  }
  return res;  // pass on all
}

ThresholdSearchRun threshold_search(const simstate::ProductState& state,
                                    const ThresholdedConceptList& concepts,
                                    const AlgorithmConfig& cfg, CounterRng& rng) {
  const size_t m = concepts.site_projectors.size();
  if (concepts.thetas.size() != m)
    throw contract_error("threshold_search: one threshold per concept");
  std::vector<qcore::DensityMatrix> sites = state.sites();
  std::vector<std::vector<qcore::Projector>> projs = concepts.site_projectors;
  for (const auto& list : projs)
    if (list.size() != state.size())
      throw contract_error("threshold_search: projector lists must match the state length");

  std::unique_ptr<MeasurableInstance> inst;
  if (state.backend() == simstate::Backend::Commuting) {
    std::vector<Eigen::VectorXd> diags;
    diags.reserve(sites.size());
    for (const auto& s : sites) diags.push_back(simstate::diagonal_of_state(s));
    std::vector<std::vector<uint32_t>> masks(m);
    for (size_t c = 0; c < m; ++c)
      for (const auto& p : projs[c]) masks[c].push_back(simstate::diagonal_projector_mask(p));
    inst = std::make_unique<CommutingInstanceModel>(simstate::compress_commuting(diags, masks),
                                                    cfg.sim);
  } else {
    inst = std::make_unique<DenseInstance>(std::move(sites), std::move(projs), std::vector<int>{},
                                           cfg.sim);
  }

  std::vector<SearchItem> items;
  for (size_t c = 0; c < m; ++c)
    items.push_back({static_cast<int>(c), false, concepts.thetas[c]});
  auto handle = inst->whole_state(rng.substream(0x0ddba11));
  auto res = threshold_search(*handle, items, cfg.eps, cfg.noise_scale, rng);
  ThresholdSearchRun run;
  run.accept_probs = std::move(res.accept_probs);
  if (res.accepted_item) run.accepted_concept = *res.accepted_item;
  return run;
}

// ---------------------------------------------------------------------------
// ERM via binary search
// ---------------------------------------------------------------------------

ErmResult erm_projector(const MeasurableInstance& inst, const AlgorithmConfig& cfg,
                        CounterRng& rng) {
  const int m = inst.concept_count();
  const int t_rounds = cfg.resolved_t();
  const int k = cfg.resolved_k();
  const int l = cfg.resolved_l();
  const int64_t n = inst.total_sites();
  const int64_t pairs = static_cast<int64_t>(t_rounds) * k;
  if (n < 6 * pairs * l) {
    std::ostringstream os;
    os << "erm_projector: need n >= 6 T k l, got n = " << n << " against 6 * " << t_rounds << " * "
       << k << " * " << l << " = " << 6 * pairs * l;
    throw precondition_error(os.str());
  }

  ErmResult result;
  result.warning = sizing_warning(l, m, cfg.eps / 4.0, cfg);

  CounterRng batch_rng = rng.substream(1);
  CounterRng measure_rng = rng.substream(2);
  CounterRng ensemble_rng = rng.substream(3);
  batching::BatchPlan plan =
      batching::draw_batches(n, static_cast<int>(2 * pairs), l, batch_rng);

  const double eps = cfg.eps;
  double low = 0.0, high = 1.0, theta = 0.5;
  int failures = 0;
  int s = 0;  // consumed (search, check) pairs
  int last_selected = -1;

  std::vector<SearchItem> items(static_cast<size_t>(m));
  while (high - low >= 6.0 * eps) {
    if (failures < k) {
      if (s >= pairs)
        throw precondition_error("erm_projector: block budget exhausted before convergence");
      const auto& search_sites = plan.batch(2 * s);
      const auto& check_sites = plan.batch(2 * s + 1);
      ++s;
      ErmTraceStep step;
      step.theta = theta;
      for (int c = 0; c < m; ++c) items[static_cast<size_t>(c)] = {c, false, theta - eps};
      auto block = inst.make_block(search_sites, ensemble_rng.substream(static_cast<uint64_t>(s)));
      auto found = threshold_search(*block, items, eps / 4.0, cfg.noise_scale, measure_rng);
      step.accept_probs = found.accept_probs;
      if (!found.accepted_item) {
        ++failures;
        result.trace.push_back(step);
        continue;
      }
      int c = items[static_cast<size_t>(*found.accepted_item)].concept_id;
      step.search_concept = c;
      step.checked = true;
      auto check_block =
          inst.make_block(check_sites, ensemble_rng.substream(0x10000 + static_cast<uint64_t>(s)));
      int64_t x = check_block->measure_concept_average(c, measure_rng);
      step.check_count = x;
      if (static_cast<double>(x) >= static_cast<double>(l) * (theta - 1.75 * eps)) {
        step.check_passed = true;
        last_selected = c;
        low = theta - 2.0 * eps;
        theta = 0.5 * (high + low);
        failures = 0;
      } else {
        ++failures;
      }
      result.trace.push_back(step);
    } else {
      high = theta;
      theta = 0.5 * (high + low);
      failures = 0;
    }
  }

  result.pairs_used = s;
  result.mu_hat = theta;
  if (last_selected >= 0) {
    result.c_star = last_selected;
  } else {
    result.degenerate = true;
    result.c_star = static_cast<int>(measure_rng.uniform_int(static_cast<uint64_t>(m)));
  }
  return result;
}

// ---------------------------------------------------------------------------
// bad-estimate search and risk estimation
// ---------------------------------------------------------------------------

std::optional<BadEstimate> search_bad_estimate(
    const MeasurableInstance& inst, const std::vector<std::vector<int64_t>>& block_pairs,
    std::span<const double> lambdas, const AlgorithmConfig& cfg, CounterRng& rng) {
  const int m = inst.concept_count();
  if (static_cast<int>(lambdas.size()) != m)
    throw contract_error("search_bad_estimate: one estimate per concept");
  if (block_pairs.size() % 2 != 0)
    throw contract_error("search_bad_estimate: blocks must come in (search, check) pairs");

  // Direct lists fire when mu_c >= lambda_c + 7/4 eps; complemented lists
  // when mu_c <= lambda_c - 7/4 eps, i.e. at threshold 1 - lambda_c + 7/4 eps.
  std::vector<SearchItem> items;
  items.reserve(static_cast<size_t>(2 * m));
  for (int c = 0; c < m; ++c)
    items.push_back({c, false, lambdas[static_cast<size_t>(c)] + 1.75 * cfg.eps});
  for (int c = 0; c < m; ++c)
    items.push_back({c, true, 1.0 - lambdas[static_cast<size_t>(c)] + 1.75 * cfg.eps});

  CounterRng ensemble_rng = rng.substream(0xe5e);
  const size_t attempts = block_pairs.size() / 2;
  for (size_t j = 0; j < attempts; ++j) {
    const auto& search_sites = block_pairs[2 * j];
    const auto& check_sites = block_pairs[2 * j + 1];
    auto block = inst.make_block(search_sites, ensemble_rng.substream(j));
    auto found = threshold_search(*block, items, cfg.eps / 4.0, cfg.noise_scale, rng);
    if (!found.accepted_item) continue;
    int c = items[static_cast<size_t>(*found.accepted_item)].concept_id;
    auto check_block = inst.make_block(check_sites, ensemble_rng.substream(0x20000 + j));
    int64_t x = check_block->measure_concept_average(c, rng);
    double ratio = static_cast<double>(x) / static_cast<double>(check_sites.size());
    if (std::abs(ratio - lambdas[static_cast<size_t>(c)]) > cfg.eps) {
      return BadEstimate{c, ratio > lambdas[static_cast<size_t>(c)], ratio};
    }
  }
  return std::nullopt;
}

EreResult ere_shadow(const MeasurableInstance& inst, const AlgorithmConfig& cfg, CounterRng& rng) {
  const int m = inst.concept_count();
  const int t_rounds = cfg.resolved_t();
  const int k = cfg.resolved_k();
  const int l = cfg.resolved_l();
  const int64_t n = inst.total_sites();
  const int64_t blocks = static_cast<int64_t>(2 * t_rounds) * k;
  if (n < 3 * blocks * l) {
    std::ostringstream os;
    os << "ere_shadow: need n >= 6 T k l, got n = " << n << " against 6 * " << t_rounds << " * "
       << k << " * " << l << " = " << 3 * blocks * l;
    throw precondition_error(os.str());
  }

  EreResult result;
  result.warning = sizing_warning(l, m, cfg.eps / 4.0, cfg);

  CounterRng batch_rng = rng.substream(11);
  CounterRng measure_rng = rng.substream(12);
  batching::BatchPlan plan = batching::draw_batches(n, static_cast<int>(blocks), l, batch_rng);

  EstimatorState est = inst.make_estimator(cfg.q_copies, cfg);
  for (int t = 0; t < t_rounds; ++t) {
    std::vector<double> lambdas = est.predictions();
    std::vector<std::vector<int64_t>> round_blocks(
        plan.indices.begin() + static_cast<int64_t>(2 * k) * t,
        plan.indices.begin() + static_cast<int64_t>(2 * k) * (t + 1));
    auto bad = search_bad_estimate(inst, round_blocks, lambdas, cfg, measure_rng);
    EreTraceStep step;
    step.round = t;
    if (!bad) {
      result.trace.push_back(step);
      break;  // no detectable disagreement left
    }
    step.found_bad = true;
    step.concept_id = bad->concept_id;
    step.upward = bad->upward;
    try {
      step.update_prob =
          est.update(bad->concept_id, bad->upward, lambdas[static_cast<size_t>(bad->concept_id)],
                     cfg.eps);
      ++result.updates;
    } catch (const degenerate_error&) {
      step.skipped = true;  // event has no mass under the stored constraints
    } catch (const contract_error&) {
      step.skipped = true;  // threshold left [0, q]
    }
    result.trace.push_back(step);
  }
  result.estimates = est.predictions();
  return result;
}

// ---------------------------------------------------------------------------
// hypothesis selection and the pure-state learner
// ---------------------------------------------------------------------------

HypothesisSelection select_hypothesis(const std::vector<std::vector<double>>& nu,
                                      std::span<const double> mu) {
  if (nu.empty()) throw contract_error("select_hypothesis: need at least one hypothesis");
  HypothesisSelection out;
  out.deltas.resize(nu.size());
  for (size_t kk = 0; kk < nu.size(); ++kk) {
    if (nu[kk].size() != mu.size())
      throw contract_error("select_hypothesis: nu and mu must cover the same pairs");
    double worst = 0;
    for (size_t p = 0; p < mu.size(); ++p) worst = std::max(worst, std::abs(nu[kk][p] - mu[p]));
    out.deltas[kk] = worst;
    if (out.k_star < 0 || worst < out.deltas[static_cast<size_t>(out.k_star)]) {
      out.k_star = static_cast<int>(kk);
    }
  }
  return out;
}

PureLearnerResult pure_state_realizable_learner(
    const std::vector<std::pair<concepts::Label, Eigen::VectorXcd>>& data,
    const concepts::ConceptClass& cls, CounterRng& rng) {
  if (!cls.finite())
    throw contract_error("pure_state_realizable_learner: class must be finite");
  if (data.empty()) throw contract_error("pure_state_realizable_learner: empty dataset");
  const auto& members = cls.members();
  const Eigen::Index d = cls.dim();

  std::vector<double> loglik(members.size(), 0.0);
  std::vector<bool> impossible(members.size(), false);
  for (const auto& [x, psi] : data) {
    // independent Haar-random orthonormal basis per output state
    ComplexMatrix basis = qcore::random_unitary(d, rng);
    Eigen::VectorXd outcome_probs(d);
    for (Eigen::Index z = 0; z < d; ++z)
      outcome_probs(z) = std::norm(basis.col(z).adjoint().dot(psi.normalized()));
    size_t z = rng.categorical(std::span<const double>(outcome_probs.data(),
                                                       static_cast<size_t>(d)));
    for (size_t c = 0; c < members.size(); ++c) {
      if (impossible[c]) continue;
      ComplexMatrix sigma = members[c](x);
      double p = (basis.col(static_cast<Eigen::Index>(z)).adjoint() * sigma *
                  basis.col(static_cast<Eigen::Index>(z)))(0, 0)
                     .real();
      if (p <= 0) {
        impossible[c] = true;
      } else {
        loglik[c] += std::log(p);
      }
    }
  }
  PureLearnerResult res;
  double best = -std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < members.size(); ++c) {
    if (impossible[c]) continue;
    if (loglik[c] > best) {
      best = loglik[c];
      res.chosen = static_cast<int>(c);
    }
  }
  if (res.chosen < 0) {
    res.zero_likelihood = true;
    res.chosen = 0;
  }
  return res;
}

}  // namespace cqlearn::algorithms
