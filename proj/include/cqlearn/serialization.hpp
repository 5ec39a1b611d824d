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

#include "cqlearn/batching.hpp"
#include "cqlearn/nets.hpp"
#include "cqlearn/qcore.hpp"
#include "json.hpp"

namespace cqlearn::serialization {

/// Matrices travel as {dim, re[][], im[][]}.
nlohmann::json matrix_to_json(const qcore::ComplexMatrix& m);
qcore::ComplexMatrix matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const qcore::DensityMatrix& rho);
nlohmann::json to_json(const qcore::Projector& p);
qcore::DensityMatrix density_from_json(const nlohmann::json& j);
qcore::Projector projector_from_json(const nlohmann::json& j);

/// Batch plans as {n, K, l, seed, indices}.
nlohmann::json to_json(const batching::BatchPlan& plan, uint64_t seed);

/// Nets as member parameter records plus the label vector, eps and q.
nlohmann::json to_json(const nets::EmpiricalNet& net);

}  // namespace cqlearn::serialization
