// Copyright 2026 The mechmab Authors. All rights reserved.
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

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "mechmab/experiment.hpp"
#include "mechmab/instance.hpp"

namespace {

void add_common(CLI::App* cmd, mechmab::ExperimentConfig& c, std::string& config_file) {
  cmd->add_option("--instance", c.instance_path, "Instance JSON file");
  cmd->add_option("--rule", c.rule, "rand | sampled-sp | all | all-single | greedy");
  cmd->add_option("--delta", c.delta, "Resampling probability of the transformation");
  cmd->add_option("--trials", c.trials, "Monte Carlo trials");
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--explore-rounds", c.explore_rounds, "Exploration rounds T0");
  cmd->add_option("--output-dir", c.output_dir, "Directory for reports");
  cmd->add_option("--workers", c.workers, "Worker threads (0 = all cores); results do not depend on it");
  cmd->add_option("--config", config_file, "JSON config; its keys override flags");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truthful single-call mechanisms for pay-per-click auctions: simulation and checks"};
  app.require_subcommand(1);

  mechmab::ExperimentConfig config;
  std::string config_file;
  std::vector<double> bids;

  auto* simulate = app.add_subcommand("simulate", "Run the transformed mechanism and write CSV and JSON summaries");
  add_common(simulate, config, config_file);
  simulate->add_option("--bids", bids, "Reported bids, one per ad (default: true values)");

  auto* verify = app.add_subcommand("verify", "Run verification checks and write a JSON report");
  add_common(verify, config, config_file);
  verify->add_option("--checks", config.checks,
                     "cmon wmon payments welfare hessian affine homogeneity thresholds (default: all)")
      ->delimiter(',');
  verify->add_option("--bids", bids, "Bids at which the checks are evaluated");

  auto* sweep = app.add_subcommand("sweep", "Sweep delta, sigma or horizon and write sweep.csv");
  add_common(sweep, config, config_file);
  sweep->add_option("--parameter", config.sweep_parameter, "delta | sigma | horizon");
  sweep->add_option("--values", config.sweep_values, "Values of the swept parameter");

  auto* demo = app.add_subcommand("demo-negative", "Print the ex-post monotonicity counterexample for greedy");
  demo->add_option("--seed", config.seed, "Seed recorded in the report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!bids.empty()) config.bids = bids;
    if (!config_file.empty()) config = mechmab::load_config_file(config, config_file);

    if (*simulate) {
      const auto summary = mechmab::cmd_simulate(config);
      std::cout << summary.dump(2) << "\n";
      return 0;
    }
    if (*verify) {
      const auto outcome = mechmab::cmd_verify(config);
      for (const auto& c : outcome.report["checks"]) {
        std::cout << c["check"].get<std::string>() << ": " << c["verdict"].get<std::string>()
                  << " (expected " << c["expected"].get<std::string>() << ") "
                  << (c["pass"].get<bool>() ? "ok" : "UNEXPECTED") << "\n";
      }
      return outcome.all_expected ? 0 : 1;
    }
    if (*sweep) {
      std::cout << mechmab::cmd_sweep(config);
      return 0;
    }
    std::cout << mechmab::demo_negative(config).dump(2) << "\n";
    return 0;
  } catch (const mechmab::InstanceError& e) {
    std::cerr << "instance error (" << mechmab::to_string(e.kind()) << "): " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 2;
}
