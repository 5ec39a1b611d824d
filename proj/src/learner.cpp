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

#include "cqlearn/learner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cqlearn/stats.hpp"

namespace cqlearn::learner {

using algorithms::AlgorithmConfig;
using algorithms::MeasurableInstance;
using concepts::Concept;
using concepts::ConceptKind;
using qcore::ComplexMatrix;

namespace {

struct LabelData {
  std::vector<Label> labels;      // all draws, in order
  std::vector<int> ids;           // draw -> distinct-label id
  std::vector<Label> distinct;    // id -> label
};

LabelData draw_labels(const CQSource& source, int64_t n, CounterRng& rng) {
  LabelData out;
  out.labels.reserve(static_cast<size_t>(n));
  out.ids.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    Label x = source.sample_label(rng);
    int id = -1;
    for (size_t j = 0; j < out.distinct.size(); ++j) {
      if (out.distinct[j] == x) {
        id = static_cast<int>(j);
        break;
      }
    }
    if (id < 0) {
      id = static_cast<int>(out.distinct.size());
      out.distinct.push_back(x);
    }
    out.labels.push_back(std::move(x));
    out.ids.push_back(id);
  }
  return out;
}

bool matrix_is_diagonal(const ComplexMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j && std::abs(m(i, j)) > 1e-12) return false;
  return true;
}

/// Evaluate the per-label operators of every net member once.
std::vector<std::vector<ComplexMatrix>> evaluate_members(const std::vector<Concept>& members,
                                                         const std::vector<Label>& distinct) {
  std::vector<std::vector<ComplexMatrix>> evals(members.size());
  for (size_t c = 0; c < members.size(); ++c) {
    evals[c].reserve(distinct.size());
    for (const Label& x : distinct) evals[c].push_back(members[c](x));
  }
  return evals;
}

/// Instance over the data: per-site states rho(x_i) and the given per-label
/// projector evaluations. Picks the commuting representation when every
/// operator is diagonal (or when forced by the config).
std::unique_ptr<MeasurableInstance> build_instance(
    const CQSource& source, const LabelData& data,
    const std::vector<std::vector<ComplexMatrix>>& member_projs, const LearnerConfig& cfg,
    std::string* backend_name) {
  std::vector<qcore::DensityMatrix> states;
  states.reserve(data.distinct.size());
  for (const Label& x : data.distinct) states.push_back(source.channel(x));

  bool diagonal = cfg.backend != LearnerConfig::Backend::Dense;
  if (cfg.backend == LearnerConfig::Backend::Auto) {
    for (const auto& s : states)
      if (!matrix_is_diagonal(s.mat())) diagonal = false;
    for (const auto& row : member_projs)
      for (const auto& p : row)
        if (!matrix_is_diagonal(p)) diagonal = false;
  }

  if (diagonal) {
    // groups = distinct labels; no per-site compression pass needed
    *backend_name = "commuting";
    simstate::CommutingInstance inst;
    inst.d = static_cast<int>(states[0].dim());
    inst.n_sites = static_cast<int64_t>(data.ids.size());
    inst.groups.resize(states.size());
    for (size_t g = 0; g < states.size(); ++g) {
      Eigen::VectorXd diag = simstate::diagonal_of_state(states[g]);
      inst.groups[g].count = 0;
      inst.groups[g].probs.assign(diag.data(), diag.data() + diag.size());
    }
    for (int id : data.ids) inst.groups[static_cast<size_t>(id)].count += 1;
    inst.concept_masks.resize(member_projs.size());
    for (size_t c = 0; c < member_projs.size(); ++c)
      for (const auto& p : member_projs[c])
        inst.concept_masks[c].push_back(simstate::diagonal_projector_mask(qcore::Projector(p)));
    inst.site_group.assign(data.ids.begin(), data.ids.end());
    return std::make_unique<algorithms::CommutingInstanceModel>(std::move(inst), cfg.alg.sim);
  }

  *backend_name = "dense";
  std::vector<qcore::DensityMatrix> sites;
  sites.reserve(data.ids.size());
  std::vector<std::vector<qcore::Projector>> site_projs(member_projs.size());
  for (int id : data.ids) {
    sites.push_back(states[static_cast<size_t>(id)]);
    for (size_t c = 0; c < member_projs.size(); ++c)
      site_projs[c].emplace_back(member_projs[c][static_cast<size_t>(id)]);
  }
  return std::make_unique<algorithms::DenseInstance>(std::move(sites), std::move(site_projs),
                                                     data.ids, cfg.alg.sim);
}

nets::EmpiricalNet build_net(const ConceptClass& cls, const std::vector<Label>& labels,
                             const LearnerConfig& cfg, CounterRng& rng) {
  std::vector<Label> net_labels = labels;
  if (cfg.net_prefix && *cfg.net_prefix < static_cast<int>(labels.size()))
    net_labels.assign(labels.begin(), labels.begin() + *cfg.net_prefix);
  auto net = nets::build_empirical_net(cls, net_labels, cfg.resolved_net_eps(),
                                       nets::default_norm_index(cls.kind()),
                                       cfg.net_sample_budget, rng);
  if (static_cast<int>(net.size()) > cfg.net_cap) {
    std::ostringstream os;
    os << "net of size " << net.size() << " exceeds the cap " << cfg.net_cap
       << "; a radius above " << cfg.resolved_net_eps() << " is required";
    throw capacity_error(os.str());
  }
  return net;
}

void fill_oracle_columns(RiskReport& rep, const std::vector<Concept>& members,
                         const CQSource& source, const LabelData& data,
                         const LearnerConfig& cfg, CounterRng& rng) {
  // oracle validation: empirical risks on the drawn data (aggregated over
  // distinct labels) and true risks
  std::vector<double> counts(data.distinct.size(), 0.0);
  for (int id : data.ids) counts[static_cast<size_t>(id)] += 1.0;
  std::vector<qcore::DensityMatrix> states;
  states.reserve(data.distinct.size());
  for (const Label& x : data.distinct) states.push_back(source.channel(x));

  rep.inf_true_risk = 1.0;
  rep.inf_empirical_risk = 1.0;
  for (size_t c = 0; c < members.size(); ++c) {
    MemberReport& row = rep.members[c];
    row.index = static_cast<int>(c);
    KahanSum acc;
    for (size_t j = 0; j < data.distinct.size(); ++j)
      acc.add(counts[j] * concepts::loss(members[c], data.distinct[j], states[j]));
    row.oracle_empirical_risk = acc.value() / static_cast<double>(data.ids.size());
    auto tr = concepts::true_risk(members[c], source, cfg.true_risk_mc, rng);
    row.oracle_true_risk = tr.value;
    row.oracle_true_risk_se = tr.se;
    if (row.estimated_risk >= 0)
      row.estimate_gap = std::abs(row.estimated_risk - row.oracle_true_risk);
    rep.inf_true_risk = std::min(rep.inf_true_risk, row.oracle_true_risk);
    rep.inf_empirical_risk = std::min(rep.inf_empirical_risk, row.oracle_empirical_risk);
    rep.max_estimate_gap = std::max(rep.max_estimate_gap, row.estimate_gap);
  }
  if (rep.selected >= 0) {
    rep.members[static_cast<size_t>(rep.selected)].selected = true;
    rep.selected_true_risk = rep.members[static_cast<size_t>(rep.selected)].oracle_true_risk;
    rep.selected_empirical_risk =
        rep.members[static_cast<size_t>(rep.selected)].oracle_empirical_risk;
  }
}

int64_t schedule_sites(const AlgorithmConfig& alg) {
  return 6LL * alg.resolved_t() * alg.resolved_k() * alg.resolved_l();
}

}  // namespace

std::pair<std::vector<Label>, simstate::ProductState> draw_training_set(const CQSource& source,
                                                                        int64_t n, CounterRng& rng,
                                                                        simstate::Backend backend) {
  if (n < 1) throw contract_error("draw_training_set: need at least one sample");
  std::vector<Label> labels;
  std::vector<qcore::DensityMatrix> sites;
  labels.reserve(static_cast<size_t>(n));
  sites.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    Label x = source.sample_label(rng);
    sites.push_back(source.channel(x));
    labels.push_back(std::move(x));
  }
  return {std::move(labels), simstate::ProductState(std::move(sites), backend)};
}

RiskReport learn_projector_class(const CQSource& source, const ConceptClass& cls,
                                 const LearnerConfig& cfg, CounterRng rng) {
  if (cls.kind() != ConceptKind::Projector)
    throw contract_error("learn_projector_class: projector-valued class required");
  RiskReport rep;
  rep.seed = rng.seed();
  rep.stream = rng.stream_id();
  rep.n_sites = schedule_sites(cfg.alg);

  CounterRng label_rng = rng.substream(1);
  CounterRng net_rng = rng.substream(2);
  CounterRng alg_rng = rng.substream(3);
  CounterRng oracle_rng = rng.substream(4);

  LabelData data = draw_labels(source, rep.n_sites, label_rng);
  nets::EmpiricalNet net = build_net(cls, data.labels, cfg, net_rng);
  rep.net_size = static_cast<int>(net.size());

  auto member_projs = evaluate_members(net.members, data.distinct);
  auto inst = build_instance(source, data, member_projs, cfg, &rep.backend);

  auto erm = algorithms::erm_projector(*inst, cfg.alg, alg_rng);
  rep.selected = erm.c_star;
  rep.mu_hat = erm.mu_hat;
  rep.degenerate = erm.degenerate;
  rep.warning = erm.warning;

  rep.members.resize(net.size());
  for (size_t c = 0; c < net.size(); ++c) rep.members[c].estimated_risk = -1.0;
  rep.members[static_cast<size_t>(erm.c_star)].estimated_risk = 1.0 - erm.mu_hat;
  fill_oracle_columns(rep, net.members, source, data, cfg, oracle_rng);
  return rep;
}

RiskReport shadow_cq(const CQSource& source, const ConceptClass& cls, const LearnerConfig& cfg,
                     CounterRng rng) {
  if (cls.kind() != ConceptKind::Projector)
    throw contract_error("shadow_cq: projector-valued class required");
  RiskReport rep;
  rep.seed = rng.seed();
  rep.stream = rng.stream_id();
  rep.n_sites = schedule_sites(cfg.alg);

  CounterRng label_rng = rng.substream(1);
  CounterRng net_rng = rng.substream(2);
  CounterRng alg_rng = rng.substream(3);
  CounterRng oracle_rng = rng.substream(4);

  LabelData data = draw_labels(source, rep.n_sites, label_rng);
  nets::EmpiricalNet net = build_net(cls, data.labels, cfg, net_rng);
  rep.net_size = static_cast<int>(net.size());

  auto member_projs = evaluate_members(net.members, data.distinct);
  auto inst = build_instance(source, data, member_projs, cfg, &rep.backend);

  auto ere = algorithms::ere_shadow(*inst, cfg.alg, alg_rng);
  rep.warning = ere.warning;

  rep.members.resize(net.size());
  int best = -1;
  for (size_t c = 0; c < net.size(); ++c) {
    rep.members[c].estimated_risk = 1.0 - ere.estimates[c];
    if (best < 0 || rep.members[c].estimated_risk <
                        rep.members[static_cast<size_t>(best)].estimated_risk)
      best = static_cast<int>(c);
  }
  rep.selected = best;
  rep.mu_hat = ere.estimates[static_cast<size_t>(best)];
  fill_oracle_columns(rep, net.members, source, data, cfg, oracle_rng);
  return rep;
}

RiskReport learn_state_class(const CQSource& source, const ConceptClass& cls,
                             const LearnerConfig& cfg, CounterRng rng) {
  if (cls.kind() != ConceptKind::State)
    throw contract_error("learn_state_class: state-valued class required");
  RiskReport rep;
  rep.seed = rng.seed();
  rep.stream = rng.stream_id();
  rep.n_sites = schedule_sites(cfg.alg);

  CounterRng label_rng = rng.substream(1);
  CounterRng net_rng = rng.substream(2);
  CounterRng alg_rng = rng.substream(3);
  CounterRng oracle_rng = rng.substream(4);

  LabelData data = draw_labels(source, rep.n_sites, label_rng);
  nets::EmpiricalNet net = build_net(cls, data.labels, cfg, net_rng);
  rep.net_size = static_cast<int>(net.size());
  const size_t m = net.size();

  // Helstrom projectors of every ordered pair, as projector lists over the data
  auto member_states = evaluate_members(net.members, data.distinct);
  std::vector<std::pair<int, int>> pairs;
  for (size_t i = 0; i < m; ++i)
    for (size_t j = i + 1; j < m; ++j) pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));

  std::vector<std::vector<ComplexMatrix>> pair_projs(pairs.size());
  for (size_t p = 0; p < pairs.size(); ++p) {
    auto [i, j] = pairs[p];
    pair_projs[p].reserve(data.distinct.size());
    for (size_t x = 0; x < data.distinct.size(); ++x) {
      pair_projs[p].push_back(
          qcore::positive_part_projector(member_states[static_cast<size_t>(i)][x] -
                                         member_states[static_cast<size_t>(j)][x])
              .mat());
    }
  }

  auto inst = build_instance(source, data, pair_projs, cfg, &rep.backend);
  auto ere = algorithms::ere_shadow(*inst, cfg.alg, alg_rng);
  rep.warning = ere.warning;

  // nu_{kij} = (1/n) sum_s Tr[sigma_k(x_s) A_ij(x_s)], exactly (known states)
  std::vector<std::vector<double>> nu(m, std::vector<double>(pairs.size(), 0.0));
  for (size_t kk = 0; kk < m; ++kk) {
    for (size_t p = 0; p < pairs.size(); ++p) {
      KahanSum acc;
      for (int id : data.ids)
        acc.add((member_states[kk][static_cast<size_t>(id)] * pair_projs[p][static_cast<size_t>(id)])
                    .trace()
                    .real());
      nu[kk][p] = acc.value() / static_cast<double>(data.ids.size());
    }
  }
  auto sel = algorithms::select_hypothesis(nu, ere.estimates);
  rep.selected = sel.k_star;
  rep.mu_hat = 1.0 - sel.deltas[static_cast<size_t>(sel.k_star)];

  rep.members.resize(m);
  for (size_t c = 0; c < m; ++c) rep.members[c].estimated_risk = -1.0;
  fill_oracle_columns(rep, net.members, source, data, cfg, oracle_rng);
  return rep;
}

std::vector<UniformConvergencePoint> uniform_convergence_experiment(
    const CQSource& source, const ConceptClass& cls, std::span<const int64_t> n_grid, int trials,
    double eps, double log_cover, CounterRng rng) {
  if (!cls.finite())
    throw contract_error("uniform_convergence_experiment: finite class required");
  const auto& members = cls.members();
  std::vector<UniformConvergencePoint> out;
  CounterRng oracle_rng = rng.substream(999);

  // true risks once per member
  std::vector<double> true_risks(members.size());
  for (size_t c = 0; c < members.size(); ++c)
    true_risks[c] = concepts::true_risk(members[c], source, 200000, oracle_rng).value;

  for (int64_t n : n_grid) {
    UniformConvergencePoint pt;
    pt.n = n;
    std::vector<double> gaps;
    gaps.reserve(static_cast<size_t>(trials));
    int exceed = 0;
    for (int t = 0; t < trials; ++t) {
      CounterRng trial = rng.substream(static_cast<uint64_t>(n * 1000003 + t));
      std::vector<std::pair<Label, qcore::DensityMatrix>> dataset;
      dataset.reserve(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) {
        Label x = source.sample_label(trial);
        dataset.emplace_back(x, source.channel(x));
      }
      double sup = 0;
      for (size_t c = 0; c < members.size(); ++c)
        sup = std::max(sup, std::abs(concepts::empirical_risk(members[c], dataset) - true_risks[c]));
      gaps.push_back(sup);
      if (sup >= eps) ++exceed;
    }
    std::sort(gaps.begin(), gaps.end());
    pt.median_sup_gap = gaps[gaps.size() / 2];
    pt.max_sup_gap = gaps.back();
    pt.exceed_freq = static_cast<double>(exceed) / trials;
    pt.bound = nets::uniform_convergence_bound(n, eps, log_cover, 1.0);
    out.push_back(pt);
  }
  return out;
}

}  // namespace cqlearn::learner
