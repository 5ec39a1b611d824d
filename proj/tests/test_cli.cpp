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

#include "cqlearn/experiments.hpp"

#include <map>

#include "cqlearn/errors.hpp"
#include "doctest.h"

using namespace cqlearn;
using namespace cqlearn::experiments;

TEST_CASE("registry covers every acceptance experiment") {
  CHECK(registry().size() == 13);
  CHECK(find_experiment("threshold_search_success") != nullptr);
  CHECK(find_experiment("pb_gentleness") != nullptr);
  CHECK(find_experiment("no_such_experiment") == nullptr);
  for (const auto& e : registry()) {
    CHECK_FALSE(e.name.empty());
    CHECK_FALSE(e.claim.empty());  // the listing doubles as the coverage index
  }
}

TEST_CASE("unknown configuration keys are rejected") {
  std::map<std::string, std::string> bad{{"no_such_key", "1"}};
  CHECK_THROWS_AS(ExperimentContext{bad}, contract_error);
  ExperimentContext ok(std::map<std::string, std::string>{{"seed", "5"}, {"trials", "7"}});
  CHECK(ok.seed() == 5);
  CHECK(ok.trials_or(3) == 7);
  ExperimentContext dflt{};
  CHECK(dflt.seed() == 1);
  CHECK(dflt.trials_or(3) == 3);
  CHECK(dflt.get_string("backend") == "auto");
}

TEST_CASE("same seed reproduces byte-identical experiment output") {
  ExperimentContext ctx(std::map<std::string, std::string>{{"seed", "42"}, {"trials", "60"}});
  const auto* exp = find_experiment("gentle_event_faithfulness");
  REQUIRE(exp != nullptr);
  auto a = exp->run(ctx);
  auto b = exp->run(ctx);
  CHECK(a.pass == b.pass);
  CHECK(a.csv_rows == b.csv_rows);  // the CSV contract is byte-identical output
  a.report.erase("seconds");        // wall-clock timing is the one live field
  b.report.erase("seconds");
  CHECK(a.report.dump() == b.report.dump());
}

TEST_CASE("parallel_for merges deterministically by index") {
  std::vector<int64_t> out(64, -1);
  parallel_for(64, 4, [&](int64_t i) { out[static_cast<size_t>(i)] = i * i; });
  for (int64_t i = 0; i < 64; ++i) CHECK(out[static_cast<size_t>(i)] == i * i);
}
