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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mechmab/instance.hpp"
#include "mechmab/rule.hpp"
#include "mechmab/stats.hpp"

namespace mechmab {

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string instance_path;
  std::string rule = "all";
  double delta = 0.05;
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  std::vector<std::string> checks;
  std::string output_dir = "out";
  std::size_t explore_rounds = 1;
  std::size_t workers = 0;                 // 0 = hardware concurrency; never affects results
  std::optional<std::vector<double>> bids; // defaults to the instance's true values
  std::string sweep_parameter;             // delta | sigma | horizon
  std::vector<double> sweep_values;
};

const std::vector<std::string>& check_names();

/// Throws ConfigError naming the first bad field.
void validate_config(const ExperimentConfig& config);

nlohmann::json config_to_json(const ExperimentConfig& config);
/// Keys present in `overrides` replace the corresponding fields of `base`.
ExperimentConfig apply_config_json(ExperimentConfig base, const nlohmann::json& overrides);
ExperimentConfig load_config_file(ExperimentConfig base, const std::filesystem::path& path);

/// FNV-1a of the canonical JSON of every field that influences results, as
/// 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// One run of the transformed mechanism, measured with the true values.
struct TrialRow {
  std::size_t trial = 0;
  std::vector<double> chi;
  std::vector<double> payments;
  std::vector<double> true_values;  // v_i(o)
  double welfare = 0.0;
  double exploit_round_welfare = 0.0;  // mean over rounds t >= T0
  bool match = true;
};

struct TrialSummary {
  std::size_t trials = 0;
  MeanAccumulator welfare;
  MeanAccumulator exploit_round_welfare;
  std::vector<MeanAccumulator> payments;
  std::vector<MeanAccumulator> utilities;
  std::size_t matches = 0;
};

struct TrialOptions {
  std::size_t explore_rounds = 1;
  std::size_t workers = 0;
  bool compute_match = true;
};

/// Runs `trials` independent executions of the transformed mechanism on
/// `bids`, scored with the instance's true values. Rows are in trial order.
std::vector<TrialRow> run_trials(const AllocationRule& rule, std::span<const double> bids, double delta,
                                 const ValidatedInstance& instance, std::size_t trials,
                                 std::uint64_t seed, const TrialOptions& options = {});
TrialSummary summarize(const std::vector<TrialRow>& rows, std::size_t num_agents);

/// RFC-4180 CSV (CRLF line ends) with one row per trial.
std::string trials_csv(const std::vector<TrialRow>& rows, std::size_t num_agents, const std::string& hash,
                       std::uint64_t seed);

nlohmann::json cmd_simulate(const ExperimentConfig& config);

struct VerifyOutcome {
  nlohmann::json report;
  bool all_expected = true;
};
VerifyOutcome cmd_verify(const ExperimentConfig& config);

/// Returns the CSV text that is also written to output_dir/sweep.csv.
std::string cmd_sweep(const ExperimentConfig& config);

/// Runs the ex-post counterexample for the greedy rule and returns it as JSON.
nlohmann::json demo_negative(const ExperimentConfig& config);

std::string format_double(double x);

}  // namespace mechmab
