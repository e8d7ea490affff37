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
#include <span>
#include <stdexcept>
#include <vector>

#include "mechmab/instance.hpp"
#include "mechmab/mab_env.hpp"
#include "mechmab/rule.hpp"

namespace mechmab {

class TooLargeForEnumeration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotEnumerable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Default bound on m * T for full enumeration of the realization space.
inline constexpr std::size_t kDefaultEnumerationCap = 16;

/// Dense T x m table of per-round quantities.
struct RoundTable {
  std::size_t rounds = 0;
  std::size_t ads = 0;
  std::vector<double> cells;

  RoundTable() = default;
  RoundTable(std::size_t t, std::size_t m) : rounds(t), ads(m), cells(t * m, 0.0) {}
  double& at(std::size_t t, std::size_t j) { return cells[t * ads + j]; }
  double at(std::size_t t, std::size_t j) const { return cells[t * ads + j]; }
  ClickVector row(std::size_t t) const;
  ClickVector column_sums() const;
};

/// A(b, t, rho): probability that ad j is shown at round t for the fixed
/// realization, over the rule's internal randomness.
RoundTable impression_allocation(const AllocationRule& rule, const AdLayout& layout,
                                 std::span<const double> bids, const ClickRealization& realization);

/// C(b, rho) = sum_t Delta_t(rho) A(b, t, rho).
ClickVector realized_click_expectation(const AllocationRule& rule, const AdLayout& layout,
                                       std::span<const double> bids,
                                       const ClickRealization& realization);

/// Expected clicks per (round, ad) over every one of the 2^(mT) click
/// realizations weighted by the CTRs and over the rule's randomness.
RoundTable exact_round_clicks(const AllocationRule& rule, std::span<const double> bids,
                              const ValidatedInstance& instance,
                              std::size_t cap = kDefaultEnumerationCap);

/// C(b, mu): column sums of exact_round_clicks.
ClickVector exact_expected_clicks(const AllocationRule& rule, std::span<const double> bids,
                                  const ValidatedInstance& instance,
                                  std::size_t cap = kDefaultEnumerationCap);

}  // namespace mechmab
