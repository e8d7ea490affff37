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

#include "mechmab/transform.hpp"

#include <cmath>

#include "mechmab/parallel.hpp"
#include "mechmab/quadrature.hpp"
#include "mechmab/stats.hpp"

namespace mechmab {

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidDelta("delta must lie in (0, 1), got " + std::to_string(delta));
  }
}

RescaleDraw draw_rescale(double delta, std::size_t num_agents, Stream& rng) {
  check_delta(delta);
  RescaleDraw draw;
  draw.chi.resize(num_agents, 1.0);
  draw.is_full.resize(num_agents, true);
  const double exponent = 1.0 / (1.0 - delta);
  for (std::size_t i = 0; i < num_agents; ++i) {
    if (rng.uniform() >= delta) continue;
    double gamma = rng.uniform();
    while (gamma == 0.0) gamma = rng.uniform();
    draw.chi[i] = std::pow(gamma, exponent);
    draw.is_full[i] = false;
  }
  return draw;
}

double payment_factor(const RescaleDraw& draw, std::size_t agent, double delta) {
  return draw.is_full[agent] ? 1.0 : 1.0 - 1.0 / delta;
}

std::vector<double> settle_payments(const RescaleDraw& draw, double delta,
                                    std::span<const double> reported_values) {
  std::vector<double> payments(reported_values.size());
  for (std::size_t i = 0; i < payments.size(); ++i) {
    payments[i] = reported_values[i] * payment_factor(draw, i, delta);
  }
  return payments;
}

MechanismSeeds MechanismSeeds::for_trial(std::uint64_t seed, std::uint64_t trial) {
  return MechanismSeeds{stream_key(seed, trial, StreamTag::kEnvironment),
                        stream_key(seed, trial, StreamTag::kRule),
                        stream_key(seed, trial, StreamTag::kRescale)};
}

MechanismRun run_mechanism(const AllocationRule& rule, std::span<const double> bids, double delta,
                           const AdLayout& layout, const ClickRealization& realization,
                           const MechanismSeeds& seeds) {
  check_delta(delta);
  Stream rescale_rng(seeds.rescale);
  MechanismRun out;
  out.draws = draw_rescale(delta, layout.num_agents(), rescale_rng);
  out.modified_bids = rescale(layout, bids, out.draws.chi);
  out.run = simulate(rule, layout, out.modified_bids, realization, seeds.rule);
  out.reported_values.resize(layout.num_agents());
  for (std::size_t i = 0; i < layout.num_agents(); ++i) {
    out.reported_values[i] = agent_value(layout, bids, i, out.run.realized_click_vector);
  }
  out.payments = settle_payments(out.draws, delta, out.reported_values);
  return out;
}

MechanismRun run_mechanism(const AllocationRule& rule, std::span<const double> bids, double delta,
                           const ValidatedInstance& instance, const MechanismSeeds& seeds) {
  const ClickRealization realization = sample_realization(instance, seeds.environment);
  return run_mechanism(rule, bids, delta, instance.layout(), realization, seeds);
}

MatchEstimate match_probability_estimate(const AllocationRule& rule, std::span<const double> bids,
                                         double delta, const ValidatedInstance& instance,
                                         std::size_t trials, std::uint64_t seed) {
  check_delta(delta);
  const std::size_t matches = reduce_trials(
      trials, std::size_t{0},
      [&](std::size_t& acc, std::size_t trial) {
        const auto seeds = MechanismSeeds::for_trial(seed, trial);
        const ClickRealization rho = sample_realization(instance, seeds.environment);
        const RunRecord original = simulate(rule, instance.layout(), bids, rho, seeds.rule);
        const MechanismRun modified = run_mechanism(rule, bids, delta, instance.layout(), rho, seeds);
        if (original.actions == modified.run.actions) ++acc;
      },
      [](std::size_t& acc, const std::size_t& other) { acc += other; });

  MatchEstimate est;
  est.trials = trials;
  est.matches = matches;
  const double n = static_cast<double>(trials);
  est.frequency = static_cast<double>(matches) / n;
  est.std_error = std::sqrt(est.frequency * (1.0 - est.frequency) / n);
  est.ci_low = est.frequency - kZ99 * est.std_error;
  est.ci_high = est.frequency + kZ99 * est.std_error;
  return est;
}

ClickFn transformed_click_fn(ClickFn base, const AdLayout& layout, double delta, std::size_t points,
                             std::size_t panels) {
  check_delta(delta);
  const std::size_t n = layout.num_agents();
  if (n >= 16) throw std::invalid_argument("too many agents for exact resampling integration");
  const CompositeRule rule = composite_gauss_legendre(0.0, 1.0, points, panels);
  std::vector<double> chi_nodes(rule.nodes.size());
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    chi_nodes[q] = std::pow(rule.nodes[q], 1.0 / (1.0 - delta));
  }

  return [base = std::move(base), layout, delta, rule, chi_nodes](std::span<const double> bids) {
    const std::size_t agents = layout.num_agents();
    const std::size_t q = rule.nodes.size();
    ClickVector total(layout.num_ads());
    std::vector<double> chi(agents, 1.0);
    for (std::uint32_t subset = 0; subset < (1U << agents); ++subset) {
      std::vector<std::size_t> resampled;
      for (std::size_t i = 0; i < agents; ++i) {
        if (subset & (1U << i)) resampled.push_back(i);
      }
      const double subset_weight =
          std::pow(delta, static_cast<double>(resampled.size())) *
          std::pow(1.0 - delta, static_cast<double>(agents - resampled.size()));
      // odometer over the tensor grid of gamma nodes of the resampled agents
      std::vector<std::size_t> idx(resampled.size(), 0);
      while (true) {
        double w = subset_weight;
        std::fill(chi.begin(), chi.end(), 1.0);
        for (std::size_t r = 0; r < resampled.size(); ++r) {
          chi[resampled[r]] = chi_nodes[idx[r]];
          w *= rule.weights[idx[r]];
        }
        const ClickVector c = base(rescale(layout, bids, chi));
        for (std::size_t j = 0; j < total.size(); ++j) total[j] += w * c[j];
        std::size_t r = 0;
        while (r < idx.size() && ++idx[r] == q) idx[r++] = 0;
        if (r == idx.size()) break;
      }
    }
    return total;
  };
}

}  // namespace mechmab
