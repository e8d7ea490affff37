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

#include "mechmab/mab_env.hpp"

#include <algorithm>

#include "json.hpp"
#include "mechmab/rule.hpp"

namespace mechmab {

std::size_t ClickRealization::count_ones() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

ClickRealization ClickRealization::from_index(std::size_t horizon, std::size_t num_ads,
                                              std::uint64_t index) {
  ClickRealization out(horizon, num_ads);
  for (std::size_t cell = 0; cell < horizon * num_ads; ++cell) {
    out.cells_[cell] = static_cast<std::uint8_t>((index >> cell) & 1U);
  }
  return out;
}

std::string realization_to_json(const ClickRealization& realization) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < realization.horizon(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < realization.num_ads(); ++j) row.push_back(realization.at(t, j) ? 1 : 0);
    rows.push_back(std::move(row));
  }
  return rows.dump();
}

ClickRealization realization_from_json(std::string_view json_text) {
  const auto rows = nlohmann::json::parse(json_text);
  if (!rows.is_array() || rows.empty()) throw std::invalid_argument("realization must be a non-empty matrix");
  const std::size_t m = rows.front().size();
  ClickRealization out(rows.size(), m);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != m) throw std::invalid_argument("ragged realization matrix");
    for (std::size_t j = 0; j < m; ++j) {
      const int bit = rows[t][j].get<int>();
      if (bit != 0 && bit != 1) throw std::invalid_argument("realization entries must be 0 or 1");
      out.set(t, j, bit == 1);
    }
  }
  return out;
}

OnlineEnv::OnlineEnv(const ClickRealization& realization) : realization_(&realization) {
  actions_.reserve(realization.horizon());
  clicks_.reserve(realization.horizon());
}

bool OnlineEnv::show(std::size_t ad) {
  if (finished()) throw std::logic_error("horizon exhausted");
  if (ad >= num_ads()) throw ContractViolation("shown ad index out of range");
  const bool clicked = realization_->at(round(), ad);
  actions_.push_back(RoundAction::show(ad));
  clicks_.push_back(clicked ? 1 : 0);
  return clicked;
}

void OnlineEnv::skip() {
  if (finished()) throw std::logic_error("horizon exhausted");
  actions_.push_back(RoundAction::skip());
  clicks_.push_back(0);
}

bool OnlineEnv::observed_click(std::size_t round, std::size_t ad) const {
  if (round >= actions_.size() || actions_[round].ad != ad) {
    throw ContractViolation("click of ad " + std::to_string(ad) + " at round " +
                            std::to_string(round) + " was never observed");
  }
  return clicks_[round] != 0;
}

ClickRealization sample_realization(const ValidatedInstance& instance, std::uint64_t env_stream_key) {
  Stream rng(env_stream_key);
  ClickRealization out(instance.horizon(), instance.num_ads());
  for (std::size_t t = 0; t < instance.horizon(); ++t) {
    for (std::size_t j = 0; j < instance.num_ads(); ++j) out.set(t, j, rng.bernoulli(instance.ctr(j)));
  }
  return out;
}

RunRecord simulate(const AllocationRule& rule, const AdLayout& layout, std::span<const double> bids,
                   const ClickRealization& realization, std::uint64_t rule_stream_key) {
  if (realization.horizon() != layout.horizon() || realization.num_ads() != layout.num_ads()) {
    throw std::invalid_argument("realization does not match the layout");
  }
  if (bids.size() != layout.num_ads()) throw std::invalid_argument("one bid per ad expected");

  Stream rng(rule_stream_key);
  auto run = rule.start(layout, bids, rng);
  OnlineEnv env(realization);

  RunRecord record;
  record.impressions.assign(layout.num_ads(), 0);
  record.observed_clicks.assign(layout.num_ads(), 0);
  record.realized_click_vector = ClickVector(layout.num_ads());
  record.rule_stream_key = rule_stream_key;

  while (!env.finished()) {
    const std::size_t t = env.round();
    const RoundAction action = run->choose(env, rng);
    bool clicked = false;
    if (action.is_skip()) {
      env.skip();
      ++record.skips;
    } else {
      clicked = env.show(action.ad);
      ++record.impressions[action.ad];
      if (clicked) {
        ++record.observed_clicks[action.ad];
        record.realized_click_vector[action.ad] += 1.0;
      }
    }
    run->observe(t, action, clicked);
  }
  record.actions = env.actions();
  record.rule_draws = rng.counter();
  return record;
}

}  // namespace mechmab
