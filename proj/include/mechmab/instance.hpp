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
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mechmab {

enum class InstanceErrorKind {
  kEmpty,             // n = 0, m = 0 or T = 0
  kZeroCtr,           // mu_j = 0
  kCtrOutOfRange,     // mu_j outside (0, 1] for a reason other than zero
  kValueOutOfRange,   // v_j or a bid outside [0, 1]
  kOwnershipOverlap,  // an ad claimed by more than one agent
  kUnownedAd,         // an ad claimed by no agent
  kOwnerOutOfRange,   // owner index >= n
  kEmptyAgent,        // an agent without ads
  kMalformed,         // unparsable instance file
};

const char* to_string(InstanceErrorKind kind);

class InstanceError : public std::runtime_error {
 public:
  InstanceError(InstanceErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  InstanceErrorKind kind() const { return kind_; }

 private:
  InstanceErrorKind kind_;
};

/// One ad as read from user input. `owners` holds every agent that claims
/// the ad; a well-formed instance has exactly one.
struct AdSpec {
  std::vector<std::size_t> owners;
  double value = 0.0;  // value per click v_j
  double ctr = 0.0;    // click-through rate mu_j
};

/// Unvalidated problem instance.
struct AdInstance {
  std::size_t num_agents = 0;
  std::size_t horizon = 0;
  std::vector<AdSpec> ads;
};

/// What an allocation rule is allowed to know: who owns which ad and the
/// horizon. CTRs and values stay hidden behind the environment.
class AdLayout {
 public:
  AdLayout() = default;
  AdLayout(std::size_t num_agents, std::size_t horizon, std::vector<std::size_t> owner);

  std::size_t num_agents() const { return num_agents_; }
  std::size_t num_ads() const { return owner_.size(); }
  std::size_t horizon() const { return horizon_; }
  std::size_t owner(std::size_t ad) const { return owner_.at(ad); }
  const std::vector<std::size_t>& owners() const { return owner_; }
  const std::vector<std::size_t>& ads_of(std::size_t agent) const { return ads_of_.at(agent); }

  AdLayout with_horizon(std::size_t horizon) const;

 private:
  std::size_t num_agents_ = 0;
  std::size_t horizon_ = 0;
  std::vector<std::size_t> owner_;
  std::vector<std::vector<std::size_t>> ads_of_;
};

/// Instance whose invariants have been checked; only validate_instance
/// builds one.
class ValidatedInstance {
 public:
  const AdLayout& layout() const { return layout_; }
  std::size_t num_agents() const { return layout_.num_agents(); }
  std::size_t num_ads() const { return layout_.num_ads(); }
  std::size_t horizon() const { return layout_.horizon(); }
  std::size_t owner(std::size_t ad) const { return layout_.owner(ad); }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& ctrs() const { return ctrs_; }
  double value(std::size_t ad) const { return values_.at(ad); }
  double ctr(std::size_t ad) const { return ctrs_.at(ad); }

  AdInstance raw() const;

 private:
  friend ValidatedInstance validate_instance(const AdInstance&);
  ValidatedInstance(AdLayout layout, std::vector<double> values, std::vector<double> ctrs)
      : layout_(std::move(layout)), values_(std::move(values)), ctrs_(std::move(ctrs)) {}

  AdLayout layout_;
  std::vector<double> values_;
  std::vector<double> ctrs_;
};

/// Throws InstanceError naming the first violated invariant.
ValidatedInstance validate_instance(const AdInstance& instance);

struct AdDescription {
  std::size_t owner;
  double value;
  double ctr;
};

/// Shorthand for building and validating an instance in code.
ValidatedInstance make_instance(std::size_t num_agents, std::size_t horizon,
                                const std::vector<AdDescription>& ads);

/// Reported (or true) value per click for every ad, each in [0, 1].
class BidVector {
 public:
  BidVector() = default;
  explicit BidVector(std::vector<double> bids);

  std::size_t size() const { return bids_.size(); }
  double operator[](std::size_t ad) const { return bids_[ad]; }
  std::span<const double> view() const { return bids_; }
  operator std::span<const double>() const { return bids_; }
  const std::vector<double>& values() const { return bids_; }

  bool operator==(const BidVector&) const = default;

 private:
  std::vector<double> bids_;
};

/// Per-ad (expected or realized) click counts.
struct ClickVector {
  std::vector<double> clicks;

  ClickVector() = default;
  explicit ClickVector(std::vector<double> c) : clicks(std::move(c)) {}
  explicit ClickVector(std::size_t m) : clicks(m, 0.0) {}

  std::size_t size() const { return clicks.size(); }
  double& operator[](std::size_t ad) { return clicks[ad]; }
  double operator[](std::size_t ad) const { return clicks[ad]; }
  operator std::span<const double>() const { return clicks; }
};

/// Per-agent rescaling coefficients lambda_i in [0, 1].
class RescaleCoefficients {
 public:
  explicit RescaleCoefficients(std::vector<double> lambda);
  std::size_t size() const { return lambda_.size(); }
  double operator[](std::size_t agent) const { return lambda_[agent]; }
  std::span<const double> view() const { return lambda_; }

 private:
  std::vector<double> lambda_;
};

/// Value of `agent` for the outcome: sum over its ads of bids[j] * clicks[j].
double agent_value(const AdLayout& layout, std::span<const double> bids, std::size_t agent,
                   std::span<const double> clicks);

/// Dot product of bids and clicks over all ads.
double total_value(std::span<const double> bids, std::span<const double> clicks);

/// lambda (x) b: every ad's bid multiplied by its owner's coefficient.
std::vector<double> rescale(const AdLayout& layout, std::span<const double> bids,
                            std::span<const double> lambda);
BidVector rescale_bids(const BidVector& bids, const RescaleCoefficients& lambda,
                       const AdLayout& layout);

/// Instance files: {"agents": n, "horizon": T, "ads": [{"owner", "value", "ctr"}]}.
/// "owner" may also be an array, which validation rejects unless it has one entry.
AdInstance parse_instance(std::string_view json_text);
AdInstance load_instance(const std::filesystem::path& path);
std::string dump_instance(const AdInstance& instance);

}  // namespace mechmab
