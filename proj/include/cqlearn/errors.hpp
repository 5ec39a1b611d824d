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

#include <stdexcept>
#include <string>

namespace cqlearn {

/// Violated input contract (dimension mismatch, out-of-range parameter, ...).
struct contract_error : std::invalid_argument {
  explicit contract_error(const std::string& what) : std::invalid_argument(what) {}
};

/// A stated precondition of an operation does not hold; the message names the clause.
struct precondition_error : std::runtime_error {
  explicit precondition_error(const std::string& what) : std::runtime_error(what) {}
};

/// Requested instance exceeds a configured capacity (dense dimension, particle memory, ...).
struct capacity_error : std::runtime_error {
  explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical degeneracy: conditioning on an event of vanishing probability,
/// spectral threshold inside a cluster of eigenvalues, and similar.
struct degenerate_error : std::runtime_error {
  explicit degenerate_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cqlearn
