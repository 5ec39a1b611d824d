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

#include "cqlearn/serialization.hpp"

namespace cqlearn::serialization {

using nlohmann::json;

json matrix_to_json(const qcore::ComplexMatrix& m) {
  json re = json::array(), im = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json rrow = json::array(), irow = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      rrow.push_back(m(i, j).real());
      irow.push_back(m(i, j).imag());
    }
    re.push_back(std::move(rrow));
    im.push_back(std::move(irow));
  }
  return {{"dim", m.rows()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

qcore::ComplexMatrix matrix_from_json(const json& j) {
  const auto dim = j.at("dim").get<Eigen::Index>();
  qcore::ComplexMatrix m(dim, dim);
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (static_cast<Eigen::Index>(re.size()) != dim || static_cast<Eigen::Index>(im.size()) != dim)
    throw contract_error("matrix_from_json: row count does not match dim");
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (static_cast<Eigen::Index>(re[static_cast<size_t>(i)].size()) != dim)
      throw contract_error("matrix_from_json: column count does not match dim");
    for (Eigen::Index k = 0; k < dim; ++k)
      m(i, k) = std::complex<double>(re[static_cast<size_t>(i)][static_cast<size_t>(k)],
                                     im[static_cast<size_t>(i)][static_cast<size_t>(k)]);
  }
  return m;
}

json to_json(const qcore::DensityMatrix& rho) { return matrix_to_json(rho.mat()); }
json to_json(const qcore::Projector& p) { return matrix_to_json(p.mat()); }

qcore::DensityMatrix density_from_json(const json& j) {
  return qcore::DensityMatrix(matrix_from_json(j));
}

qcore::Projector projector_from_json(const json& j) {
  return qcore::Projector(matrix_from_json(j));
}

json to_json(const batching::BatchPlan& plan, uint64_t seed) {
  return {{"n", plan.n}, {"K", plan.k}, {"l", plan.l}, {"seed", seed}, {"indices", plan.indices}};
}

json to_json(const nets::EmpiricalNet& net) {
  json members = json::array();
  for (size_t i = 0; i < net.members.size(); ++i)
    members.push_back({{"index", net.member_index[i]}, {"params", net.members[i].params()}});
  json labels = json::array();
  for (const auto& x : net.labels) labels.push_back({{"reals", x.reals}, {"bits", x.bits}});
  return {{"members", std::move(members)},
          {"eps", net.eps},
          {"q", net.q == nets::NormIndex::TraceNorm ? 1 : 0},
          {"labels", std::move(labels)},
          {"audited_on_sample_only", net.audited_on_sample_only}};
}

}  // namespace cqlearn::serialization
