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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mechmab/experiment.hpp"

using namespace mechmab;
namespace fs = std::filesystem;

namespace {

const std::string kData = MECHMAB_DATA_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mechmab_tests" / name;
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig base_config(const std::string& instance, const std::string& rule) {
  ExperimentConfig c;
  c.instance_path = kData + "/" + instance;
  c.rule = rule;
  c.trials = 2000;
  c.seed = 9;
  return c;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find("\r\n", pos);
    REQUIRE(end != std::string::npos);
    std::vector<std::string> cells;
    std::stringstream line(text.substr(pos, end - pos));
    std::string cell;
    while (std::getline(line, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
    pos = end + 2;
  }
  return rows;
}

}  // namespace

TEST_CASE("config validation and overrides") {
  ExperimentConfig c = base_config("tiny.json", "all");
  CHECK_NOTHROW(validate_config(c));
  c.delta = 1.0;
  CHECK_THROWS_AS(validate_config(c), ConfigError);
  c.delta = 0.1;
  c.trials = 0;
  CHECK_THROWS_AS(validate_config(c), ConfigError);
  c.trials = 1;
  c.rule = "vcg";
  CHECK_THROWS_AS(validate_config(c), ConfigError);
  c.rule = "all";
  c.checks = {"cmon", "proofs"};
  CHECK_THROWS_AS(validate_config(c), ConfigError);

  const ExperimentConfig o = apply_config_json(base_config("tiny.json", "all"),
                                               nlohmann::json{{"delta", 0.2}, {"seed", 77}, {"checks", {"wmon"}}});
  CHECK(o.delta == 0.2);
  CHECK(o.seed == 77);
  CHECK(o.checks == std::vector<std::string>{"wmon"});
  CHECK(o.rule == "all");
  CHECK_THROWS_AS(apply_config_json(o, nlohmann::json{{"unknown", 1}}), ConfigError);
  CHECK_THROWS_AS(apply_config_json(o, nlohmann::json{{"delta", "high"}}), ConfigError);

  const fs::path dir = scratch("config");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"rule": "rand", "trials": 5})";
  const ExperimentConfig f = load_config_file(base_config("tiny.json", "all"), dir / "c.json");
  CHECK(f.rule == "rand");
  CHECK(f.trials == 5);
  CHECK_THROWS_AS(load_config_file(f, dir / "missing.json"), ConfigError);
}

TEST_CASE("config hash tracks result-relevant fields only") {
  ExperimentConfig a = base_config("tiny.json", "all");
  ExperimentConfig b = a;
  b.workers = 7;
  b.output_dir = "/elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.seed = 10;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("simulate is reproducible across worker counts") {
  ExperimentConfig c = base_config("tiny.json", "all");
  c.trials = 9000;
  c.output_dir = scratch("sim_a").string();
  c.workers = 1;
  const auto sa = cmd_simulate(c);
  ExperimentConfig d = c;
  d.output_dir = scratch("sim_b").string();
  d.workers = 3;
  const auto sb = cmd_simulate(d);
  const std::string csv_a = slurp(fs::path(c.output_dir) / "trials.csv");
  CHECK(csv_a == slurp(fs::path(d.output_dir) / "trials.csv"));
  CHECK(sa["mean_welfare"] == sb["mean_welfare"]);
  CHECK(sa["schema_version"] == 1);
  CHECK(sa["config_hash"] == config_hash(c));

  const auto rows = parse_csv(csv_a);
  REQUIRE(rows.size() == 9001);
  CHECK(rows[0] == std::vector<std::string>{"trial", "chi_1", "chi_2", "payment_1", "payment_2", "welfare", "match",
                                            "config_hash", "seed"});
  CHECK(rows[1][7] == config_hash(c));
  CHECK(rows[1][8] == "9");

  ExperimentConfig one = c;
  one.trials = 1;
  one.output_dir = scratch("sim_one_a").string();
  cmd_simulate(one);
  ExperimentConfig two = one;
  two.output_dir = scratch("sim_one_b").string();
  cmd_simulate(two);
  CHECK(slurp(fs::path(one.output_dir) / "trials.csv") == slurp(fs::path(two.output_dir) / "trials.csv"));
}

TEST_CASE("simulate summaries") {
  SUBCASE("Rand always matches") {
    ExperimentConfig c = base_config("tiny.json", "rand");
    c.delta = 0.6;
    c.output_dir = scratch("sim_rand").string();
    CHECK(cmd_simulate(c)["match_frequency"]["mean"] == 1.0);
  }
  SUBCASE("single agent welfare is 14/9") {
    ExperimentConfig c = base_config("single_agent.json", "all-single");
    c.trials = 100'000;
    c.delta = 0.001;
    c.output_dir = scratch("sim_single").string();
    const auto s = cmd_simulate(c);
    const double mean = s["mean_welfare"]["mean"];
    const double se = s["mean_welfare"]["std_error"];
    // chi < 1 for about 0.1% of runs; the bias is far inside the band
    CHECK(std::abs(mean - 14.0 / 9.0) <= 3.0 * se);
  }
  SUBCASE("bad inputs are reported") {
    ExperimentConfig c = base_config("missing.json", "all");
    c.output_dir = scratch("sim_bad").string();
    CHECK_THROWS_AS(cmd_simulate(c), InstanceError);
    ExperimentConfig d = base_config("tiny.json", "all");
    d.bids = std::vector<double>{0.5};
    d.output_dir = c.output_dir;
    CHECK_THROWS_AS(cmd_simulate(d), ConfigError);
  }
}

TEST_CASE("verify reports expected verdicts") {
  ExperimentConfig c = base_config("tiny.json", "all");
  c.output_dir = scratch("verify_all").string();
  c.trials = 20'000;
  const auto all = cmd_verify(c);
  CHECK(all.all_expected);
  CHECK(all.report["checks"].size() == check_names().size());
  for (const auto& check : all.report["checks"]) {
    CHECK(check.contains("witnesses"));
    CHECK(check.contains("max_residual"));
    CHECK(check.contains("tolerance"));
    if (check["check"] == "cmon") CHECK(check["witnesses"].empty());
  }
  CHECK(fs::exists(fs::path(c.output_dir) / "verify.json"));

  ExperimentConfig g = base_config("tiny.json", "greedy");
  g.explore_rounds = 0;
  g.checks = {"wmon"};
  g.output_dir = scratch("verify_greedy").string();
  const auto greedy = cmd_verify(g);
  CHECK(greedy.all_expected);
  const auto& w = greedy.report["checks"][0];
  CHECK(w["verdict"] == "violation found");
  CHECK(w["witnesses"][0]["value"].get<double>() <= -1.0 + 1e-9);

  ExperimentConfig h = base_config("tiny.json", "all");
  h.checks = {"hessian"};
  h.output_dir = scratch("verify_hessian").string();
  CHECK(cmd_verify(h).all_expected);
}

TEST_CASE("sweeps") {
  SUBCASE("delta sweep on a skewed instance beats Rand") {
    ExperimentConfig c = base_config("skewed.json", "all");
    c.sweep_parameter = "delta";
    c.sweep_values = {0.01, 0.1, 0.5};
    c.trials = 5000;
    c.output_dir = scratch("sweep_delta").string();
    const auto rows = parse_csv(cmd_sweep(c));
    REQUIRE(rows.size() == 4);
    const std::size_t improves = 13;
    CHECK(rows[0][improves] == "improves_over_rand");
    bool any = false;
    for (std::size_t r = 1; r < rows.size(); ++r) any = any || rows[r][improves] == "1";
    CHECK(any);
    CHECK(rows[1][12] == "1");  // the skew bound predicts it as well
  }
  SUBCASE("uniform instance shows no improvement") {
    ExperimentConfig c = base_config("tiny.json", "all");
    c.instance_path = (scratch("uniform_inst") / "u.json").string();
    fs::create_directories(fs::path(c.instance_path).parent_path());
    std::ofstream(c.instance_path)
        << R"({"agents": 2, "horizon": 6, "ads": [{"owner": 0, "value": 0.5, "ctr": 0.8}, {"owner": 1, "value": 0.5, "ctr": 0.8}]})";
    c.sweep_parameter = "delta";
    c.sweep_values = {0.05, 0.2};
    c.output_dir = scratch("sweep_uniform").string();
    const auto rows = parse_csv(cmd_sweep(c));
    for (std::size_t r = 1; r < rows.size(); ++r) {
      CHECK(rows[r][13] == "0");
      CHECK(std::stod(rows[r][9]) == 0.0);
    }
  }
  SUBCASE("sigma sweep: empirical gap tracks the closed form") {
    ExperimentConfig c = base_config("skewed.json", "all");
    c.sweep_parameter = "sigma";
    c.sweep_values = {0.0, 0.3, 0.7, 1.0};
    c.delta = 0.001;
    c.trials = 20'000;
    c.output_dir = scratch("sweep_sigma").string();
    const auto rows = parse_csv(cmd_sweep(c));
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const double closed = std::stod(rows[r][9]);
      const double empirical = std::stod(rows[r][10]);
      const double ci = std::stod(rows[r][11]);
      CHECK(std::abs(closed - empirical) <= ci + 1e-3);
    }
  }
  SUBCASE("horizon sweep") {
    ExperimentConfig c = base_config("skewed.json", "all");
    c.sweep_parameter = "horizon";
    c.sweep_values = {2, 5};
    c.trials = 500;
    c.output_dir = scratch("sweep_h").string();
    const auto rows = parse_csv(cmd_sweep(c));
    CHECK(rows[1][3] == "2");
    CHECK(rows[2][3] == "5");
    c.sweep_values = {2.5};
    CHECK_THROWS_AS(cmd_sweep(c), ConfigError);
  }
}

TEST_CASE("negative demonstration") {
  const auto report = demo_negative(ExperimentConfig{});
  CHECK(report["constructed"]["value"] == -1.0);
  CHECK(report["most_negative"]["value"] == -2.0);
  CHECK(report["constructed"]["runs"][0]["shown_ads"] == nlohmann::json({2, 2}));
  CHECK(report["constructed"]["runs"][1]["shown_ads"] == nlohmann::json({1, 1}));
}
