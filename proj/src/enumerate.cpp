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

#include "mechmab/enumerate.hpp"

#include <string>

namespace mechmab {

ClickVector RoundTable::row(std::size_t t) const {
  ClickVector out(ads);
  for (std::size_t j = 0; j < ads; ++j) out[j] = at(t, j);
  return out;
}

ClickVector RoundTable::column_sums() const {
  ClickVector out(ads);
  for (std::size_t t = 0; t < rounds; ++t) {
    for (std::size_t j = 0; j < ads; ++j) out[j] += at(t, j);
  }
  return out;
}

namespace {

// Depth-first walk over the rule's action tree for one realization.
class TreeWalk {
 public:
  TreeWalk(const DistributionOracle& oracle, const AdLayout& layout, std::span<const double> bids,
           const ClickRealization& realization, RoundTable& table)
      : oracle_(oracle),
        layout_(layout),
        bids_(bids),
        realization_(realization),
        table_(table),
        scratch_(layout.horizon(), std::vector<double>(layout.num_ads() + 1)) {
    actions_.reserve(layout.horizon());
    clicks_.reserve(layout.horizon());
  }

  void run(std::size_t latent, double weight) {
    latent_ = latent;
    descend(weight);
  }

 private:
  void descend(double prob) {
    const std::size_t t = actions_.size();
    if (t == layout_.horizon()) return;
    std::vector<double>& dist = scratch_[t];
    oracle_.action_distribution(layout_, bids_, latent_, HistoryView{actions_, clicks_}, dist);
    const std::size_t m = layout_.num_ads();
    for (std::size_t a = 0; a <= m; ++a) {
      if (dist[a] <= 0.0) continue;
      const double branch = prob * dist[a];
      if (a < m) {
        table_.at(t, a) += branch;
        actions_.push_back(RoundAction::show(a));
        clicks_.push_back(realization_.at(t, a) ? 1 : 0);
      } else {
        actions_.push_back(RoundAction::skip());
        clicks_.push_back(0);
      }
      descend(branch);
      actions_.pop_back();
      clicks_.pop_back();
    }
  }

  const DistributionOracle& oracle_;
  const AdLayout& layout_;
  std::span<const double> bids_;
  const ClickRealization& realization_;
  RoundTable& table_;
  std::vector<std::vector<double>> scratch_;
  std::vector<RoundAction> actions_;
  std::vector<std::uint8_t> clicks_;
  std::size_t latent_ = 0;
};

const DistributionOracle& require_oracle(const AllocationRule& rule) {
  const DistributionOracle* oracle = rule.oracle();
  if (oracle == nullptr) throw NotEnumerable("rule '" + rule.name() + "' has no distribution oracle");
  return *oracle;
}

void accumulate_allocation(const DistributionOracle& oracle, const AdLayout& layout,
                           std::span<const double> bids, const ClickRealization& realization,
                           const std::vector<double>& latents, RoundTable& table) {
  TreeWalk walk(oracle, layout, bids, realization, table);
  for (std::size_t l = 0; l < latents.size(); ++l) {
    if (latents[l] > 0.0) walk.run(l, latents[l]);
  }
}

}  // namespace

RoundTable impression_allocation(const AllocationRule& rule, const AdLayout& layout,
                                 std::span<const double> bids, const ClickRealization& realization) {
  const DistributionOracle& oracle = require_oracle(rule);
  RoundTable table(layout.horizon(), layout.num_ads());
  accumulate_allocation(oracle, layout, bids, realization, oracle.latent_weights(layout, bids), table);
  return table;
}

ClickVector realized_click_expectation(const AllocationRule& rule, const AdLayout& layout,
                                       std::span<const double> bids,
                                       const ClickRealization& realization) {
  const RoundTable alloc = impression_allocation(rule, layout, bids, realization);
  ClickVector out(layout.num_ads());
  for (std::size_t t = 0; t < alloc.rounds; ++t) {
    for (std::size_t j = 0; j < alloc.ads; ++j) {
      if (realization.at(t, j)) out[j] += alloc.at(t, j);
    }
  }
  return out;
}

RoundTable exact_round_clicks(const AllocationRule& rule, std::span<const double> bids,
                              const ValidatedInstance& instance, std::size_t cap) {
  const AdLayout& layout = instance.layout();
  const std::size_t cells = layout.num_ads() * layout.horizon();
  if (cells > cap || cells >= 63) {
    throw TooLargeForEnumeration("m*T = " + std::to_string(cells) + " exceeds the enumeration cap " +
                                 std::to_string(cap));
  }
  const DistributionOracle& oracle = require_oracle(rule);
  const std::vector<double> latents = oracle.latent_weights(layout, bids);

  RoundTable expected(layout.horizon(), layout.num_ads());
  RoundTable alloc(layout.horizon(), layout.num_ads());
  const std::uint64_t count = std::uint64_t{1} << cells;
  for (std::uint64_t index = 0; index < count; ++index) {
    const auto rho = ClickRealization::from_index(layout.horizon(), layout.num_ads(), index);
    double weight = 1.0;
    for (std::size_t t = 0; t < layout.horizon() && weight > 0.0; ++t) {
      for (std::size_t j = 0; j < layout.num_ads(); ++j) {
        weight *= rho.at(t, j) ? instance.ctr(j) : 1.0 - instance.ctr(j);
      }
    }
    if (weight == 0.0) continue;
    std::fill(alloc.cells.begin(), alloc.cells.end(), 0.0);
    accumulate_allocation(oracle, layout, bids, rho, latents, alloc);
    for (std::size_t t = 0; t < layout.horizon(); ++t) {
      for (std::size_t j = 0; j < layout.num_ads(); ++j) {
        if (rho.at(t, j)) expected.at(t, j) += weight * alloc.at(t, j);
      }
    }
  }
  return expected;
}

ClickVector exact_expected_clicks(const AllocationRule& rule, std::span<const double> bids,
                                  const ValidatedInstance& instance, std::size_t cap) {
  return exact_round_clicks(rule, bids, instance, cap).column_sums();
}

}  // namespace mechmab
