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

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "mechmab/rule.hpp"

namespace mechmab::testing {

/// One agent, one ad: the ad is shown with probability min(1, b) each round,
/// otherwise the round is skipped. With mu = 1, C(b) = T b.
class LinearRule final : public AllocationRule, public DistributionOracle {
 public:
  std::string name() const override { return "linear"; }
  std::unique_ptr<RuleRun> start(const AdLayout&, std::span<const double> bids, Stream&) const override {
    return std::make_unique<Run>(std::min(1.0, bids[0]));
  }
  const DistributionOracle* oracle() const override { return this; }
  void action_distribution(const AdLayout&, std::span<const double> bids, std::size_t, const HistoryView&,
                           std::span<double> out) const override {
    out[0] = std::min(1.0, bids[0]);
    out[1] = 1.0 - out[0];
  }

 private:
  struct Run final : RuleRun {
    explicit Run(double p) : p(p) {}
    RoundAction choose(const ObservationView&, Stream& rng) override {
      return rng.uniform() < p ? RoundAction::show(0) : RoundAction::skip();
    }
    double p;
  };
};

/// ALL with the exploitation weights turned upside down: ad j gets weight
/// 1 - b_j n_j / T0, renormalized. Higher bids lower the allocation.
class AntiMonotoneRule final : public AllocationRule, public DistributionOracle {
 public:
  explicit AntiMonotoneRule(std::size_t explore_rounds) : explore_(explore_rounds) {}
  std::string name() const override { return "anti-monotone"; }
  std::unique_ptr<RuleRun> start(const AdLayout& layout, std::span<const double> bids, Stream&) const override {
    return std::make_unique<Run>(*this, layout, bids);
  }
  const DistributionOracle* oracle() const override { return this; }
  bool never_skips() const override { return true; }

  void action_distribution(const AdLayout& layout, std::span<const double> bids, std::size_t,
                           const HistoryView& history, std::span<double> out) const override {
    const std::size_t m = layout.num_ads();
    std::fill(out.begin(), out.end(), 0.0);
    if (history.round() < explore_) {
      for (std::size_t j = 0; j < m; ++j) out[j] = 1.0 / static_cast<double>(m);
      return;
    }
    std::vector<double> n(m, 0.0);
    for (std::size_t t = 0; t < explore_; ++t) {
      const RoundAction a = history.actions[t];
      if (!a.is_skip() && history.clicks[t]) n[a.ad] += 1.0;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      out[j] = 1.0 - bids[j] * n[j] / static_cast<double>(explore_);
      total += out[j];
    }
    for (std::size_t j = 0; j < m; ++j) out[j] = total > 0.0 ? out[j] / total : 1.0 / static_cast<double>(m);
  }

 private:
  struct Run final : RuleRun {
    Run(const AntiMonotoneRule& rule, const AdLayout& layout, std::span<const double> bids)
        : rule(rule), layout(layout), bids(bids.begin(), bids.end()) {}
    RoundAction choose(const ObservationView& env, Stream& rng) override {
      std::vector<double> out(layout.num_ads() + 1);
      rule.action_distribution(layout, bids, 0, HistoryView{actions, clicks}, out);
      const double u = rng.uniform();
      double acc = 0.0;
      for (std::size_t j = 0; j < layout.num_ads(); ++j) {
        acc += out[j];
        if (u < acc) return RoundAction::show(j);
      }
      (void)env;
      return RoundAction::show(layout.num_ads() - 1);
    }
    void observe(std::size_t, RoundAction action, bool clicked) override {
      actions.push_back(action);
      clicks.push_back(clicked ? 1 : 0);
    }
    const AntiMonotoneRule& rule;
    AdLayout layout;
    std::vector<double> bids;
    std::vector<RoundAction> actions;
    std::vector<std::uint8_t> clicks;
  };
  std::size_t explore_;
};

}  // namespace mechmab::testing
