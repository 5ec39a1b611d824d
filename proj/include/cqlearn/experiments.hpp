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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace cqlearn::experiments {

/// One documented configuration key.
struct OptionDoc {
  std::string key;
  std::string default_value;
  std::string doc;
};

/// The configuration surface shared by the CLI and the acceptance suite.
/// Unknown keys are rejected at parse time.
class ExperimentContext {
 public:
  ExperimentContext() = default;
  explicit ExperimentContext(std::map<std::string, std::string> options);

  static const std::vector<OptionDoc>& option_docs();

  uint64_t seed() const { return get_u64("seed"); }
  int trials_or(int dflt) const;
  int threads() const;

  double get_double(const std::string& key) const;
  int64_t get_i64(const std::string& key) const;
  uint64_t get_u64(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  bool has_override(const std::string& key) const;

 private:
  std::map<std::string, std::string> options_;
};

struct ExperimentResult {
  bool pass = false;
  nlohmann::json report;
  std::string csv_header;
  std::vector<std::string> csv_rows;
  /// Optional matrix fixtures in the shared {dim, re, im} form; written to
  /// <out>/<name>_fixtures.json when an output directory is set.
  nlohmann::json fixtures;
};

struct ExperimentInfo {
  std::string name;
  std::string claim;  // one-line statement of what the experiment verifies
  std::function<ExperimentResult(const ExperimentContext&)> run;
};

const std::vector<ExperimentInfo>& registry();
const ExperimentInfo* find_experiment(const std::string& name);

/// Run trial bodies across a worker pool; results land in trial order so
/// output is independent of scheduling. The worker count is capped by the
/// CQLEARN_THREADS environment variable.
void parallel_for(int64_t count, int threads, const std::function<void(int64_t)>& body);

}  // namespace cqlearn::experiments
