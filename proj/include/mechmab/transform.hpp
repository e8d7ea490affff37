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
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mechmab/instance.hpp"
#include "mechmab/mab_env.hpp"
#include "mechmab/rng.hpp"
#include "mechmab/rule.hpp"

namespace mechmab {

class InvalidDelta : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws InvalidDelta unless 0 < delta < 1.
void check_delta(double delta);

/// Per-agent rescaling factors chi_i: 1 with probability 1 - delta, otherwise
/// gamma^(1 / (1 - delta)) with gamma uniform on (0, 1].
struct RescaleDraw {
  std::vector<double> chi;
  std::vector<bool> is_full;
};

RescaleDraw draw_rescale(double delta, std::size_t num_agents, Stream& rng);

/// 1 if chi_i = 1, 1 - 1/delta otherwise.
double payment_factor(const RescaleDraw& draw, std::size_t agent, double delta);

/// P_i = b_i(o) * payment_factor, where b_i(o) is agent i's reported value of
/// the realized outcome.
std::vector<double> settle_payments(const RescaleDraw& draw, double delta,
                                    std::span<const double> reported_values);

/// Stream keys of one trial: environment, rule and rescaling randomness.
struct MechanismSeeds {
  std::uint64_t environment = 0;
  std::uint64_t rule = 0;
  std::uint64_t rescale = 0;

  static MechanismSeeds for_trial(std::uint64_t seed, std::uint64_t trial);
};

/// One execution of the transformed mechanism.
struct MechanismRun {
  RunRecord run;
  RescaleDraw draws;
  std::vector<double> modified_bids;    // chi (x) b
  std::vector<double> reported_values;  // b_i(o) for the realized click vector
  std::vector<double> payments;
};

/// Calls the rule exactly once, on chi (x) b, and settles payments from the
/// observed clicks after the last round.
MechanismRun run_mechanism(const AllocationRule& rule, std::span<const double> bids, double delta,
                           const ValidatedInstance& instance, const MechanismSeeds& seeds);

/// Same, against a given realization.
MechanismRun run_mechanism(const AllocationRule& rule, std::span<const double> bids, double delta,
                           const AdLayout& layout, const ClickRealization& realization,
                           const MechanismSeeds& seeds);

struct MatchEstimate {
  std::size_t trials = 0;
  std::size_t matches = 0;
  double frequency = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;   // 99%
  double ci_high = 0.0;  // 99%
};

/// Fraction of trials in which A(b) and A(chi (x) b), run on the same click
/// realization with the same rule stream, produce identical action traces.
MatchEstimate match_probability_estimate(const AllocationRule& rule, std::span<const double> bids,
                                         double delta, const ValidatedInstance& instance,
                                         std::size_t trials, std::uint64_t seed);

/// Map from a full bid vector to a click vector.
using ClickFn = std::function<ClickVector(std::span<const double>)>;

/// b -> E_chi[C(chi (x) b)], integrating each resampled chi_i by composite
/// Gauss-Legendre in gamma. Cost grows as 2^n * (points * panels)^n.
ClickFn transformed_click_fn(ClickFn base, const AdLayout& layout, double delta,
                             std::size_t points = 8, std::size_t panels = 1);

}  // namespace mechmab
