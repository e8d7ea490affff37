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
#include "mechmab/mab_env.hpp"
#include "mechmab/rng.hpp"

namespace mechmab {

/// Per-run state of a streaming allocation rule. One instance serves one run.
class RuleRun {
 public:
  virtual ~RuleRun() = default;
  virtual RoundAction choose(const ObservationView& env, Stream& rng) = 0;
  /// Called after every round; `clicked` is false for skips.
  virtual void observe(std::size_t round, RoundAction action, bool clicked) {
    (void)round;
    (void)action;
    (void)clicked;
  }
};

/// Observation history up to (not including) the current round.
struct HistoryView {
  std::span<const RoundAction> actions;
  std::span<const std::uint8_t> clicks;  // meaningful only where the action is a show
  std::size_t round() const { return actions.size(); }
};

/// Exact law of a rule's actions, used by the enumeration oracle. The rule's
/// internal randomness is a finite up-front latent choice followed by
/// per-round action distributions conditioned on the history.
class DistributionOracle {
 public:
  virtual ~DistributionOracle() = default;

  virtual std::vector<double> latent_weights(const AdLayout& layout,
                                             std::span<const double> bids) const {
    (void)layout;
    (void)bids;
    return {1.0};
  }

  /// Writes m + 1 probabilities into `out`; the last slot is the skip.
  virtual void action_distribution(const AdLayout& layout, std::span<const double> bids,
                                   std::size_t latent, const HistoryView& history,
                                   std::span<double> out) const = 0;
};

class AllocationRule {
 public:
  virtual ~AllocationRule() = default;
  virtual std::string name() const = 0;
  /// Throws std::invalid_argument when the layout violates the rule's preconditions.
  virtual std::unique_ptr<RuleRun> start(const AdLayout& layout, std::span<const double> bids,
                                         Stream& rng) const = 0;
  /// Null when the rule cannot be enumerated exactly.
  virtual const DistributionOracle* oracle() const { return nullptr; }
  /// True when the rule never skips a round.
  virtual bool never_skips() const { return false; }
};

}  // namespace mechmab
