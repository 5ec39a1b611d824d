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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "cqlearn/errors.hpp"
#include "cqlearn/experiments.hpp"

namespace {

using cqlearn::experiments::ExperimentContext;
using cqlearn::experiments::ExperimentInfo;

/// key=value lines; '#' starts a comment.
std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::map<std::string, std::string> out;
  std::ifstream in(path);
  if (!in) throw cqlearn::contract_error("config file not readable: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r\n");
    line = line.substr(first, last - first + 1);
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw cqlearn::contract_error("config line " + std::to_string(lineno) +
                                    " is not key=value: " + line);
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

int list_experiments() {
  std::printf("%-28s %s\n", "experiment", "claim");
  std::printf("%-28s %s\n", "----------", "-----");
  for (const auto& e : cqlearn::experiments::registry())
    std::printf("%-28s %s\n", e.name.c_str(), e.claim.c_str());
  std::printf("\n%zu experiments registered.\n", cqlearn::experiments::registry().size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cqlearn experiment harness: seeded batch experiments with JSON/CSV reports"};

  std::string experiment, out_dir, config_path, backend = "auto";
  uint64_t seed = 1;
  int trials = 0, threads = 1;
  double eps = 0.0, delta = 0.0;
  int64_t particles = 0;
  bool list = false;

  app.add_flag("--list", list, "list registered experiments and exit");
  app.add_option("--experiment", experiment, "experiment name to run");
  app.add_option("--seed", seed, "master seed (default 1)");
  app.add_option("--trials", trials, "trial count override (0 keeps the default)");
  app.add_option("--out", out_dir, "output directory for report files");
  app.add_option("--backend", backend, "state backend: auto | dense | commuting");
  app.add_option("--eps", eps, "accuracy override (0 keeps the default)");
  app.add_option("--delta", delta, "failure budget override (0 keeps the default)");
  app.add_option("--threads", threads, "worker pool size (capped by CQLEARN_THREADS)");
  app.add_option("--particles", particles, "commuting ensemble size override");
  app.add_option("--config", config_path, "key=value configuration file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 1 : 0;
  }

  try {
    if (list) return list_experiments();

    std::map<std::string, std::string> options;
    if (!config_path.empty()) options = load_config_file(config_path);
    auto set_flag = [&](const std::string& key, const std::string& value, bool given) {
      if (given) options[key] = value;
    };
    set_flag("seed", std::to_string(seed), app.count("--seed") > 0);
    set_flag("trials", std::to_string(trials), app.count("--trials") > 0);
    set_flag("out", out_dir, app.count("--out") > 0);
    set_flag("backend", backend, app.count("--backend") > 0);
    set_flag("eps", std::to_string(eps), app.count("--eps") > 0);
    set_flag("delta", std::to_string(delta), app.count("--delta") > 0);
    set_flag("threads", std::to_string(threads), app.count("--threads") > 0);
    set_flag("particles", std::to_string(particles), app.count("--particles") > 0);
    if (!experiment.empty()) options["experiment"] = experiment;

    ExperimentContext ctx(options);  // rejects unknown keys
    std::string name = ctx.get_string("experiment");
    if (name.empty()) {
      std::cerr << "error: no experiment named; use --experiment or --list\n";
      return 1;
    }
    const ExperimentInfo* info = cqlearn::experiments::find_experiment(name);
    if (!info) {
      std::cerr << "error: unknown experiment '" << name << "'. Registered experiments:\n";
      for (const auto& e : cqlearn::experiments::registry()) std::cerr << "  " << e.name << "\n";
      return 1;
    }

    auto result = info->run(ctx);

    nlohmann::json report = result.report;
    report["experiment"] = info->name;
    report["claim"] = info->claim;
    report["seed"] = ctx.seed();
    report["rng"] = "counter-based: (seed, stream, step) determines every draw";
    report["pass"] = result.pass;

    std::string dir = ctx.get_string("out");
    if (!dir.empty()) {
      std::filesystem::create_directories(dir);
      std::ofstream jf(dir + "/" + info->name + ".json");
      jf << report.dump(2) << "\n";
      std::ofstream cf(dir + "/" + info->name + ".csv");
      cf << result.csv_header << "\n";
      for (const auto& row : result.csv_rows) cf << row << "\n";
      if (!result.fixtures.is_null()) {
        std::ofstream ff(dir + "/" + info->name + "_fixtures.json");
        ff << result.fixtures.dump(2) << "\n";
      }
    }
    std::cout << report.dump(2) << "\n";
    std::cout << (result.pass ? "PASS" : "FAIL") << " " << info->name << "\n";
    return result.pass ? 0 : 2;
  } catch (const cqlearn::contract_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
