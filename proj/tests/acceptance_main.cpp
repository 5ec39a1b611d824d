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

// Acceptance suite: every release criterion as one seeded experiment run,
// with pinned tolerances. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <exception>
#include <map>
#include <string>
#include <vector>

#include "cqlearn/experiments.hpp"

namespace {

using cqlearn::experiments::ExperimentContext;
using cqlearn::experiments::find_experiment;

struct Criterion {
  int number;
  std::string experiment;
  std::map<std::string, std::string> options;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "pb_exactness", {{"seed", "11"}}},
      {2, "gentle_event_faithfulness", {{"seed", "12"}, {"trials", "500"}}},
      {3, "boundexp_bound", {{"seed", "12"}, {"trials", "10000"}}},
      {4, "pb_gentleness", {{"seed", "14"}, {"trials", "10000"}}},
      {5, "threshold_search_success", {{"seed", "7"}, {"trials", "2000"}}},
      {6, "erm_projector_commuting", {{"seed", "16"}, {"trials", "200"}}},
      {7, "ere_update_dense", {{"seed", "17"}, {"trials", "200"}}},
      {8, "hypothesis_selection", {{"seed", "18"}, {"trials", "100"}}},
      {9, "helstrom_matrix_lemmas", {{"seed", "19"}, {"trials", "1000"}}},
      {10, "sampling_concentration", {{"seed", "20"}, {"trials", "10000"}}},
      {11, "covering_bounds", {{"seed", "21"}}},
      {12, "pure_state_learner", {{"seed", "22"}, {"trials", "500"}}},
      {13, "erm_end_to_end", {{"seed", "23"}, {"trials", "100"}}},
  };

  int failures = 0;
  for (const auto& crit : criteria) {
    const auto* info = find_experiment(crit.experiment);
    if (!info) {
      std::printf("FAIL criterion %2d: experiment %s not registered\n", crit.number,
                  crit.experiment.c_str());
      ++failures;
      continue;
    }
    auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    std::string note;
    try {
      ExperimentContext ctx(crit.options);
      auto result = info->run(ctx);
      pass = result.pass;
      if (!pass) note = " report: " + result.report.dump();
    } catch (const std::exception& e) {
      note = std::string(" exception: ") + e.what();
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %2d: %-28s (%.1f s)%s\n", pass ? "PASS" : "FAIL", crit.number,
                crit.experiment.c_str(), secs, note.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }

  if (failures == 0) {
    std::printf("all %zu criteria passed\n", criteria.size());
  } else {
    std::printf("%d of %zu criteria FAILED\n", failures, criteria.size());
  }
  return failures == 0 ? 0 : 1;
}
