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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mechmab/instance.hpp"
#include "mechmab/rule.hpp"

namespace mechmab {

/// Exploration length T0 of ALL and the greedy rule.
struct AllParams {
  std::size_t explore_rounds = 1;
};

/// Exploitation law of ALL: ad j with probability p_j = b_j * n_j / T0,
/// otherwise (residual mass) an ad drawn uniformly.
struct ExploitDistribution {
  std::vector<double> p;
  double residual = 1.0;

  /// Probability that ad j is shown in an exploitation round, with the
  /// uniform part spread over `slots` ads (m, or m + 1 with a dummy ad).
  double show_probability(std::size_t ad, std::size_t slots) const {
    return p[ad] + residual / static_cast<double>(slots);
  }
};

/// Throws std::invalid_argument if the p_j do not form a sub-probability vector.
ExploitDistribution build_exploit_distribution(std::span<const double> bids,
                                               std::span<const std::size_t> clicks_in_exploration,
                                               std::size_t explore_rounds);

/// Uniform ad every round; ignores bids and clicks.
std::shared_ptr<const AllocationRule> rand_rule();

/// Skips every round.
std::shared_ptr<const AllocationRule> skip_rule();

/// ALL for at least two agents.
std::shared_ptr<const AllocationRule> all_rule(AllParams params = {});

/// ALL for a single agent: runs ALL on the m real ads plus a zero-bid dummy
/// ad whose impressions are skips.
std::shared_ptr<const AllocationRule> all_single_agent(AllParams params = {}, double dummy_ctr = 0.5);

/// Explores uniformly for T0 rounds, then commits to argmax_j b_j * n_j
/// (argmax_j b_j when T0 = 0). Ties go to the lowest index.
std::shared_ptr<const AllocationRule> greedy_rule(std::size_t explore_rounds);

/// Selects one ad per agent uniformly up front and delegates every round to
/// `inner` run on the selected ads only (one ad per agent).
std::shared_ptr<const AllocationRule> sampled_single_param_rule(
    std::shared_ptr<const AllocationRule> inner);

/// Default inner rule: ALL restricted to one ad per agent. Accepts one agent.
std::shared_ptr<const AllocationRule> single_ad_all_rule(AllParams params = {});

/// Names: "rand" | "sampled-sp" | "all" | "all-single" | "greedy".
std::shared_ptr<const AllocationRule> make_rule(const std::string& name, AllParams params = {});
const std::vector<std::string>& rule_names();

/// Expected clicks contributed to each ad by one round of ALL.
struct AllRoundClicks {
  ClickVector exploration;   // any round t < T0
  ClickVector exploitation;  // any round t >= T0
};

/// Closed forms for ALL: x_j = b_j mu_j / m and exploitation probability
/// x_j + (1 - sum_k x_k) / m. With `dummy_ad` the uniform part is spread
/// over m + 1 slots, the extra one being the zero-bid dummy.
AllRoundClicks all_closed_form_round_clicks(std::span<const double> bids,
                                            const ValidatedInstance& instance, bool dummy_ad = false);

/// Exact C(b, mu) of ALL over the horizon.
ClickVector all_closed_form_clicks(std::span<const double> bids, const ValidatedInstance& instance,
                                   AllParams params = {});
/// Exact C(b, mu) of the single-agent ALL with its dummy ad.
ClickVector all_single_closed_form_clicks(std::span<const double> bids,
                                          const ValidatedInstance& instance, AllParams params = {});

}  // namespace mechmab
