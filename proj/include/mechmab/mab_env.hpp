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
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mechmab/instance.hpp"
#include "mechmab/rng.hpp"

namespace mechmab {

/// Raised when an allocation rule reads a click it never observed.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// T x m table of would-be clicks rho(t, j).
class ClickRealization {
 public:
  ClickRealization() = default;
  ClickRealization(std::size_t horizon, std::size_t num_ads)
      : horizon_(horizon), num_ads_(num_ads), cells_(horizon * num_ads, 0) {}

  std::size_t horizon() const { return horizon_; }
  std::size_t num_ads() const { return num_ads_; }
  bool at(std::size_t round, std::size_t ad) const { return cells_[round * num_ads_ + ad] != 0; }
  void set(std::size_t round, std::size_t ad, bool clicked) {
    cells_[round * num_ads_ + ad] = clicked ? 1 : 0;
  }
  std::size_t count_ones() const;

  /// Row i of the realization space: bit (t * m + j) of `index` is rho(t, j).
  static ClickRealization from_index(std::size_t horizon, std::size_t num_ads, std::uint64_t index);

  bool operator==(const ClickRealization&) const = default;

 private:
  std::size_t horizon_ = 0;
  std::size_t num_ads_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// JSON row-major 0/1 matrix, one inner array per round.
std::string realization_to_json(const ClickRealization& realization);
ClickRealization realization_from_json(std::string_view json_text);

/// Either a skip or the index of the ad shown.
struct RoundAction {
  static constexpr std::size_t kSkip = std::numeric_limits<std::size_t>::max();
  std::size_t ad = kSkip;

  static constexpr RoundAction skip() { return RoundAction{kSkip}; }
  static constexpr RoundAction show(std::size_t j) { return RoundAction{j}; }
  bool is_skip() const { return ad == kSkip; }
  bool operator==(const RoundAction&) const = default;
};

/// Read-only view of what has been observed so far in a run.
class ObservationView {
 public:
  virtual ~ObservationView() = default;
  virtual std::size_t round() const = 0;
  /// Click bit of an earlier impression of `ad` at `round`; throws
  /// ContractViolation for any cell that was not revealed.
  virtual bool observed_click(std::size_t round, std::size_t ad) const = 0;
};

/// The only window a rule has onto the click realization. Clicks become
/// visible one impression at a time; anything else throws ContractViolation.
class OnlineEnv final : public ObservationView {
 public:
  explicit OnlineEnv(const ClickRealization& realization);

  std::size_t round() const override { return actions_.size(); }
  std::size_t horizon() const { return realization_->horizon(); }
  std::size_t num_ads() const { return realization_->num_ads(); }
  bool finished() const { return round() == horizon(); }

  /// Shows `ad` in the current round and returns whether it was clicked.
  bool show(std::size_t ad);
  void skip();

  bool observed_click(std::size_t round, std::size_t ad) const override;

  const std::vector<RoundAction>& actions() const { return actions_; }
  const std::vector<std::uint8_t>& clicks() const { return clicks_; }

 private:
  const ClickRealization* realization_;
  std::vector<RoundAction> actions_;
  std::vector<std::uint8_t> clicks_;
};

/// Trace of one execution of an allocation rule.
struct RunRecord {
  std::vector<RoundAction> actions;
  std::vector<std::size_t> impressions;      // shows per ad
  std::vector<std::size_t> observed_clicks;  // clicks per ad
  ClickVector realized_click_vector;
  std::size_t skips = 0;
  std::uint64_t rule_stream_key = 0;
  std::uint64_t rule_draws = 0;  // random numbers the rule consumed
};

class AllocationRule;

/// Independent Bernoulli(mu_j) table, reproducible from `env_stream_key`.
ClickRealization sample_realization(const ValidatedInstance& instance, std::uint64_t env_stream_key);

/// Runs the rule for T rounds against the realization. The rule only ever
/// sees clicks of ads it showed.
RunRecord simulate(const AllocationRule& rule, const AdLayout& layout, std::span<const double> bids,
                   const ClickRealization& realization, std::uint64_t rule_stream_key);

}  // namespace mechmab
