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

#include "mechmab/rules.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <numeric>
#include <stdexcept>

namespace mechmab {

ExploitDistribution build_exploit_distribution(std::span<const double> bids,
                                               std::span<const std::size_t> clicks_in_exploration,
                                               std::size_t explore_rounds) {
  if (explore_rounds == 0) throw std::invalid_argument("ALL needs at least one exploration round");
  ExploitDistribution out;
  out.p.resize(bids.size());
  double mass = 0.0;
  for (std::size_t j = 0; j < bids.size(); ++j) {
    out.p[j] = bids[j] * static_cast<double>(clicks_in_exploration[j]) /
               static_cast<double>(explore_rounds);
    mass += out.p[j];
  }
  if (mass > 1.0 + 1e-12) throw std::invalid_argument("exploitation probabilities exceed one");
  out.residual = std::max(0.0, 1.0 - mass);
  return out;
}

namespace {

// Picks the ad for an exploitation round from a single uniform draw u:
// the first sum(p) of [0, 1) follows p, the rest is split evenly over `slots`.
std::size_t pick_exploit(const ExploitDistribution& law, std::size_t slots, double u) {
  double acc = 0.0;
  for (std::size_t j = 0; j < law.p.size(); ++j) {
    acc += law.p[j];
    if (u < acc) return j;
  }
  if (law.residual <= 0.0) {
    // rounding left u just above the accumulated mass
    for (std::size_t j = law.p.size(); j-- > 0;) {
      if (law.p[j] > 0.0) return j;
    }
  }
  const double within = (u - acc) / law.residual;
  return std::min(slots - 1, static_cast<std::size_t>(within * static_cast<double>(slots)));
}

std::vector<std::size_t> exploration_clicks(const HistoryView& history, std::size_t num_ads,
                                            std::size_t explore_rounds) {
  std::vector<std::size_t> n(num_ads, 0);
  const std::size_t upto = std::min(explore_rounds, history.round());
  for (std::size_t t = 0; t < upto; ++t) {
    const RoundAction a = history.actions[t];
    if (!a.is_skip() && history.clicks[t] != 0) ++n[a.ad];
  }
  return n;
}

void fill_uniform(std::span<double> out, std::size_t num_ads) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < num_ads; ++j) out[j] = 1.0 / static_cast<double>(num_ads);
}

// ---------------------------------------------------------------------------

class RandRun final : public RuleRun {
 public:
  explicit RandRun(std::size_t m) : m_(m) {}
  RoundAction choose(const ObservationView&, Stream& rng) override {
    return RoundAction::show(static_cast<std::size_t>(rng.below(m_)));
  }

 private:
  std::size_t m_;
};

class RandRule final : public AllocationRule, public DistributionOracle {
 public:
  std::string name() const override { return "rand"; }
  std::unique_ptr<RuleRun> start(const AdLayout& layout, std::span<const double>,
                                 Stream&) const override {
    return std::make_unique<RandRun>(layout.num_ads());
  }
  const DistributionOracle* oracle() const override { return this; }
  bool never_skips() const override { return true; }
  void action_distribution(const AdLayout& layout, std::span<const double>, std::size_t,
                           const HistoryView&, std::span<double> out) const override {
    fill_uniform(out, layout.num_ads());
  }
};

class SkipRun final : public RuleRun {
 public:
  RoundAction choose(const ObservationView&, Stream&) override { return RoundAction::skip(); }
};

class SkipRule final : public AllocationRule, public DistributionOracle {
 public:
  std::string name() const override { return "skip"; }
  std::unique_ptr<RuleRun> start(const AdLayout&, std::span<const double>, Stream&) const override {
    return std::make_unique<SkipRun>();
  }
  const DistributionOracle* oracle() const override { return this; }
  void action_distribution(const AdLayout& layout, std::span<const double>, std::size_t,
                           const HistoryView&, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    out[layout.num_ads()] = 1.0;
  }
};

// ---------------------------------------------------------------------------
// ALL, optionally with the single-agent dummy ad appended as slot m.

class AllRun final : public RuleRun {
 public:
  AllRun(std::span<const double> bids, std::size_t explore_rounds, bool dummy, double dummy_ctr)
      : bids_(bids.begin(), bids.end()),
        explore_rounds_(explore_rounds),
        dummy_(dummy),
        dummy_ctr_(dummy_ctr),
        slots_(bids.size() + (dummy ? 1 : 0)),
        n_(slots_, 0) {
    if (dummy_) bids_.push_back(0.0);
  }

  RoundAction choose(const ObservationView& env, Stream& rng) override {
    const std::size_t t = env.round();
    std::size_t slot;
    if (t < explore_rounds_) {
      slot = static_cast<std::size_t>(rng.below(slots_));
    } else {
      if (!law_) law_ = build_exploit_distribution(bids_, n_, explore_rounds_);
      slot = pick_exploit(*law_, slots_, rng.uniform());
    }
    if (dummy_ && slot == slots_ - 1) {
      // the dummy ad is clicked on the rule's own coin; it never reaches the environment
      const bool dummy_click = rng.bernoulli(dummy_ctr_);
      if (t < explore_rounds_ && dummy_click) ++n_[slot];
      return RoundAction::skip();
    }
    return RoundAction::show(slot);
  }

  void observe(std::size_t round, RoundAction action, bool clicked) override {
    if (round < explore_rounds_ && !action.is_skip() && clicked) ++n_[action.ad];
  }

 private:
  std::vector<double> bids_;
  std::size_t explore_rounds_;
  bool dummy_;
  double dummy_ctr_;
  std::size_t slots_;
  std::vector<std::size_t> n_;
  std::optional<ExploitDistribution> law_;
};

class AllRule final : public AllocationRule, public DistributionOracle {
 public:
  AllRule(AllParams params, std::size_t min_agents, std::size_t max_agents, bool dummy,
          double dummy_ctr, std::string name)
      : params_(params),
        min_agents_(min_agents),
        max_agents_(max_agents),
        dummy_(dummy),
        dummy_ctr_(dummy_ctr),
        name_(std::move(name)) {
    if (dummy_ && !(dummy_ctr_ > 0.0 && dummy_ctr_ <= 1.0)) {
      throw std::invalid_argument("dummy CTR must lie in (0, 1]");
    }
  }

  std::string name() const override { return name_; }

  std::unique_ptr<RuleRun> start(const AdLayout& layout, std::span<const double> bids,
                                 Stream&) const override {
    check(layout);
    return std::make_unique<AllRun>(bids, params_.explore_rounds, dummy_, dummy_ctr_);
  }

  const DistributionOracle* oracle() const override { return this; }
  bool never_skips() const override { return !dummy_; }

  void action_distribution(const AdLayout& layout, std::span<const double> bids, std::size_t,
                           const HistoryView& history, std::span<double> out) const override {
    const std::size_t m = layout.num_ads();
    const std::size_t slots = m + (dummy_ ? 1 : 0);
    const double uniform = 1.0 / static_cast<double>(slots);
    std::fill(out.begin(), out.end(), 0.0);
    if (history.round() < params_.explore_rounds) {
      for (std::size_t j = 0; j < m; ++j) out[j] = uniform;
      out[m] = dummy_ ? uniform : 0.0;
      return;
    }
    // the dummy bids zero, so its own exploration clicks never matter
    const auto n = exploration_clicks(history, m, params_.explore_rounds);
    const auto law = build_exploit_distribution(bids, n, params_.explore_rounds);
    for (std::size_t j = 0; j < m; ++j) out[j] = law.show_probability(j, slots);
    out[m] = dummy_ ? law.residual * uniform : 0.0;
  }

 private:
  void check(const AdLayout& layout) const {
    if (layout.num_agents() < min_agents_ || layout.num_agents() > max_agents_) {
      throw std::invalid_argument(name_ + ": unsupported number of agents (" +
                                  std::to_string(layout.num_agents()) + ")");
    }
    if (params_.explore_rounds < 1 || params_.explore_rounds >= layout.horizon()) {
      throw std::invalid_argument(name_ + ": need 1 <= T0 < T");
    }
  }

  AllParams params_;
  std::size_t min_agents_;
  std::size_t max_agents_;
  bool dummy_;
  double dummy_ctr_;
  std::string name_;
};

// ---------------------------------------------------------------------------

std::size_t greedy_choice(std::span<const double> bids, std::span<const std::size_t> n,
                          std::size_t explore_rounds) {
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t j = 0; j < bids.size(); ++j) {
    const double score = explore_rounds == 0 ? bids[j] : bids[j] * static_cast<double>(n[j]);
    if (score > best_score) {
      best = j;
      best_score = score;
    }
  }
  return best;
}

class GreedyRun final : public RuleRun {
 public:
  GreedyRun(std::span<const double> bids, std::size_t explore_rounds)
      : bids_(bids.begin(), bids.end()), explore_rounds_(explore_rounds), n_(bids.size(), 0) {}

  RoundAction choose(const ObservationView& env, Stream& rng) override {
    if (env.round() < explore_rounds_) {
      return RoundAction::show(static_cast<std::size_t>(rng.below(bids_.size())));
    }
    if (!committed_) committed_ = greedy_choice(bids_, n_, explore_rounds_);
    return RoundAction::show(*committed_);
  }

  void observe(std::size_t round, RoundAction action, bool clicked) override {
    if (round < explore_rounds_ && clicked) ++n_[action.ad];
  }

 private:
  std::vector<double> bids_;
  std::size_t explore_rounds_;
  std::vector<std::size_t> n_;
  std::optional<std::size_t> committed_;
};

class GreedyRule final : public AllocationRule, public DistributionOracle {
 public:
  explicit GreedyRule(std::size_t explore_rounds) : explore_rounds_(explore_rounds) {}
  std::string name() const override { return "greedy"; }
  std::unique_ptr<RuleRun> start(const AdLayout& layout, std::span<const double> bids,
                                 Stream&) const override {
    if (explore_rounds_ > layout.horizon()) throw std::invalid_argument("greedy: T0 exceeds T");
    return std::make_unique<GreedyRun>(bids, explore_rounds_);
  }
  const DistributionOracle* oracle() const override { return this; }
  bool never_skips() const override { return true; }

  void action_distribution(const AdLayout& layout, std::span<const double> bids, std::size_t,
                           const HistoryView& history, std::span<double> out) const override {
    if (history.round() < explore_rounds_) {
      fill_uniform(out, layout.num_ads());
      return;
    }
    std::fill(out.begin(), out.end(), 0.0);
    const auto n = exploration_clicks(history, layout.num_ads(), explore_rounds_);
    out[greedy_choice(bids, n, explore_rounds_)] = 1.0;
  }

 private:
  std::size_t explore_rounds_;
};

// ---------------------------------------------------------------------------
// Random reduction to one ad per agent.

// Observations of the selected ads, re-indexed for the inner rule.
class SelectedView final : public ObservationView {
 public:
  SelectedView(const ObservationView& base, const std::vector<std::size_t>& selected)
      : base_(base), selected_(selected) {}
  std::size_t round() const override { return base_.round(); }
  bool observed_click(std::size_t round, std::size_t ad) const override {
    if (ad >= selected_.size()) throw ContractViolation("inner rule addressed an unknown ad");
    return base_.observed_click(round, selected_[ad]);
  }

 private:
  const ObservationView& base_;
  const std::vector<std::size_t>& selected_;
};

AdLayout one_ad_per_agent(const AdLayout& layout) {
  std::vector<std::size_t> owner(layout.num_agents());
  std::iota(owner.begin(), owner.end(), std::size_t{0});
  return AdLayout(layout.num_agents(), layout.horizon(), std::move(owner));
}

std::vector<double> selected_bids(std::span<const double> bids, const std::vector<std::size_t>& sel) {
  std::vector<double> out(sel.size());
  for (std::size_t i = 0; i < sel.size(); ++i) out[i] = bids[sel[i]];
  return out;
}

// Selection number `index` in mixed radix over the agents' ad counts.
std::vector<std::size_t> decode_selection(const AdLayout& layout, std::size_t index) {
  std::vector<std::size_t> sel(layout.num_agents());
  for (std::size_t i = 0; i < layout.num_agents(); ++i) {
    const auto& ads = layout.ads_of(i);
    sel[i] = ads[index % ads.size()];
    index /= ads.size();
  }
  return sel;
}

std::size_t selection_count(const AdLayout& layout) {
  std::size_t count = 1;
  for (std::size_t i = 0; i < layout.num_agents(); ++i) count *= layout.ads_of(i).size();
  return count;
}

class SampledRun final : public RuleRun {
 public:
  SampledRun(std::vector<std::size_t> selected, std::unique_ptr<RuleRun> inner)
      : selected_(std::move(selected)), inner_(std::move(inner)) {}

  RoundAction choose(const ObservationView& env, Stream& rng) override {
    const SelectedView view(env, selected_);
    const RoundAction a = inner_->choose(view, rng);
    if (a.is_skip()) return a;
    return RoundAction::show(selected_.at(a.ad));
  }

  void observe(std::size_t round, RoundAction action, bool clicked) override {
    if (action.is_skip()) {
      inner_->observe(round, action, clicked);
      return;
    }
    const auto it = std::find(selected_.begin(), selected_.end(), action.ad);
    inner_->observe(round, RoundAction::show(static_cast<std::size_t>(it - selected_.begin())),
                    clicked);
  }

 private:
  std::vector<std::size_t> selected_;
  std::unique_ptr<RuleRun> inner_;
};

class SampledSingleParamRule final : public AllocationRule, public DistributionOracle {
 public:
  explicit SampledSingleParamRule(std::shared_ptr<const AllocationRule> inner)
      : inner_(std::move(inner)) {}

  std::string name() const override { return "sampled-sp"; }

  std::unique_ptr<RuleRun> start(const AdLayout& layout, std::span<const double> bids,
                                 Stream& rng) const override {
    std::vector<std::size_t> selected(layout.num_agents());
    for (std::size_t i = 0; i < layout.num_agents(); ++i) {
      const auto& ads = layout.ads_of(i);
      selected[i] = ads[static_cast<std::size_t>(rng.below(ads.size()))];
    }
    const auto sub_bids = selected_bids(bids, selected);
    auto inner = inner_->start(one_ad_per_agent(layout), sub_bids, rng);
    return std::make_unique<SampledRun>(std::move(selected), std::move(inner));
  }

  const DistributionOracle* oracle() const override { return inner_->oracle() ? this : nullptr; }
  bool never_skips() const override { return inner_->never_skips(); }

  std::vector<double> latent_weights(const AdLayout& layout,
                                     std::span<const double> bids) const override {
    const AdLayout sub = one_ad_per_agent(layout);
    const std::size_t count = selection_count(layout);
    std::vector<double> weights;
    for (std::size_t s = 0; s < count; ++s) {
      const auto sel = decode_selection(layout, s);
      double w = 1.0;
      for (std::size_t i = 0; i < layout.num_agents(); ++i) {
        w /= static_cast<double>(layout.ads_of(i).size());
      }
      for (double inner_w : inner_->oracle()->latent_weights(sub, selected_bids(bids, sel))) {
        weights.push_back(w * inner_w);
      }
    }
    return weights;
  }

  void action_distribution(const AdLayout& layout, std::span<const double> bids, std::size_t latent,
                           const HistoryView& history, std::span<double> out) const override {
    const AdLayout sub = one_ad_per_agent(layout);
    const std::size_t count = selection_count(layout);
    for (std::size_t s = 0; s < count; ++s) {
      const auto sel = decode_selection(layout, s);
      const auto sub_bids = selected_bids(bids, sel);
      const std::size_t inner_count = inner_->oracle()->latent_weights(sub, sub_bids).size();
      if (latent >= inner_count) {
        latent -= inner_count;
        continue;
      }
      std::vector<RoundAction> actions(history.actions.begin(), history.actions.end());
      for (auto& a : actions) {
        if (a.is_skip()) continue;
        const auto it = std::find(sel.begin(), sel.end(), a.ad);
        if (it == sel.end()) throw std::logic_error("history shows an unselected ad");
        a.ad = static_cast<std::size_t>(it - sel.begin());
      }
      std::vector<double> inner_out(sel.size() + 1, 0.0);
      inner_->oracle()->action_distribution(sub, sub_bids, latent, HistoryView{actions, history.clicks},
                                            inner_out);
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t i = 0; i < sel.size(); ++i) out[sel[i]] += inner_out[i];
      out[layout.num_ads()] = inner_out[sel.size()];
      return;
    }
    throw std::out_of_range("latent index out of range");
  }

 private:
  std::shared_ptr<const AllocationRule> inner_;
};

}  // namespace

std::shared_ptr<const AllocationRule> rand_rule() { return std::make_shared<RandRule>(); }

std::shared_ptr<const AllocationRule> skip_rule() { return std::make_shared<SkipRule>(); }

std::shared_ptr<const AllocationRule> all_rule(AllParams params) {
  return std::make_shared<AllRule>(params, 2, std::numeric_limits<std::size_t>::max(), false, 0.0,
                                   "all");
}

std::shared_ptr<const AllocationRule> all_single_agent(AllParams params, double dummy_ctr) {
  return std::make_shared<AllRule>(params, 1, 1, true, dummy_ctr, "all-single");
}

std::shared_ptr<const AllocationRule> single_ad_all_rule(AllParams params) {
  return std::make_shared<AllRule>(params, 1, std::numeric_limits<std::size_t>::max(), false, 0.0,
                                   "all");
}

std::shared_ptr<const AllocationRule> greedy_rule(std::size_t explore_rounds) {
  return std::make_shared<GreedyRule>(explore_rounds);
}

std::shared_ptr<const AllocationRule> sampled_single_param_rule(
    std::shared_ptr<const AllocationRule> inner) {
  if (!inner) inner = single_ad_all_rule();
  return std::make_shared<SampledSingleParamRule>(std::move(inner));
}

const std::vector<std::string>& rule_names() {
  static const std::vector<std::string> names = {"rand", "sampled-sp", "all", "all-single", "greedy"};
  return names;
}

std::shared_ptr<const AllocationRule> make_rule(const std::string& name, AllParams params) {
  if (name == "rand") return rand_rule();
  if (name == "sampled-sp") return sampled_single_param_rule(single_ad_all_rule(params));
  if (name == "all") return all_rule(params);
  if (name == "all-single") return all_single_agent(params);
  if (name == "greedy") return greedy_rule(params.explore_rounds);
  throw std::invalid_argument("unknown rule '" + name + "'");
}

AllRoundClicks all_closed_form_round_clicks(std::span<const double> bids,
                                            const ValidatedInstance& instance, bool dummy_ad) {
  const std::size_t m = instance.num_ads();
  const double slots = static_cast<double>(m + (dummy_ad ? 1 : 0));
  std::vector<double> x(m);
  double x_sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    x[j] = bids[j] * instance.ctr(j) / slots;
    x_sum += x[j];
  }
  AllRoundClicks out{ClickVector(m), ClickVector(m)};
  for (std::size_t j = 0; j < m; ++j) {
    out.exploration[j] = instance.ctr(j) / slots;
    out.exploitation[j] = instance.ctr(j) * (x[j] + (1.0 - x_sum) / slots);
  }
  return out;
}

namespace {
ClickVector over_horizon(const AllRoundClicks& rounds, std::size_t horizon, std::size_t explore) {
  ClickVector out(rounds.exploration.size());
  const double t0 = static_cast<double>(explore);
  const double t1 = static_cast<double>(horizon - explore);
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = t0 * rounds.exploration[j] + t1 * rounds.exploitation[j];
  }
  return out;
}
}  // namespace

ClickVector all_closed_form_clicks(std::span<const double> bids, const ValidatedInstance& instance,
                                   AllParams params) {
  return over_horizon(all_closed_form_round_clicks(bids, instance, false), instance.horizon(),
                      params.explore_rounds);
}

ClickVector all_single_closed_form_clicks(std::span<const double> bids,
                                          const ValidatedInstance& instance, AllParams params) {
  return over_horizon(all_closed_form_round_clicks(bids, instance, true), instance.horizon(),
                      params.explore_rounds);
}

}  // namespace mechmab
