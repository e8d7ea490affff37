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

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mechmab/enumerate.hpp"
#include "mechmab/instance.hpp"
#include "mechmab/mab_env.hpp"
#include "mechmab/rule.hpp"
#include "mechmab/rules.hpp"
#include "mechmab/transform.hpp"

namespace mechmab {

// ---------------------------------------------------------------------------
// Cycle monotonicity

/// A cycle of reported types theta_0 .. theta_{k-1} for one agent with
/// cycle_sum = sum_j [theta_j(o_j) - theta_{j-1 mod k}(o_j)], o_j = C(b_-i, theta_j).
struct CycleWitness {
  std::size_t agent = 0;
  std::vector<std::vector<double>> types;
  double cycle_sum = 0.0;
  std::vector<ClickVector> outcomes;
};

struct CmonOptions {
  /// Cycles up to this length are enumerated exhaustively (subject to the budget).
  std::size_t max_exhaustive_k = 3;
  std::uint64_t exhaustive_budget = 20'000'000;
  /// Random cycles drawn per length when exhaustive search is off.
  std::uint64_t samples = 200'000;
  std::uint64_t seed = 1;
  std::size_t max_witnesses = std::numeric_limits<std::size_t>::max();
};

struct CmonReport {
  std::vector<CycleWitness> witnesses;  // every violating cycle found (capped by max_witnesses)
  std::uint64_t violations = 0;
  std::uint64_t cycles_checked = 0;
  std::uint64_t cycles_total = 0;  // distinct cycles on the grid up to k_max
  bool exhaustive = true;
  double min_cycle_sum = std::numeric_limits<double>::infinity();

  double coverage() const {
    return cycles_total == 0 ? 1.0 : static_cast<double>(cycles_checked) / static_cast<double>(cycles_total);
  }
};

/// Searches cycles of length 2..k_max over `grid` (bid vectors for the agent's
/// own ads, in layout.ads_of(agent) order) with the other agents' bids taken
/// from `other_bids`. A cycle is a witness when its sum is below -tolerance.
/// Cycles are counted once per rotation.
CmonReport check_cmon(const ClickFn& expected_clicks, const AdLayout& layout, std::size_t agent,
                      std::span<const double> other_bids, const std::vector<std::vector<double>>& grid,
                      std::size_t k_max, double tolerance, const CmonOptions& options = {});

/// Cartesian product of per-coordinate levels, `dims` coordinates.
std::vector<std::vector<double>> product_grid(std::span<const double> levels, std::size_t dims);

// ---------------------------------------------------------------------------
// Ex-post weak monotonicity

struct WmonWitness {
  std::vector<double> bids;
  std::vector<double> bids_tilde;
  ClickRealization realization;
  double value = 0.0;
  std::size_t round = 0;  // set by construct_wmon_counterexample
  std::size_t ad = 0;     // set by construct_wmon_counterexample
};

/// (b~ - b)^T sum_t Delta_t(rho) (A(b~, t, rho) - A(b, t, rho)).
double wmon_value(const AllocationRule& rule, const AdLayout& layout, std::span<const double> bids,
                  std::span<const double> bids_tilde, const ClickRealization& realization);

/// Every realization of a T x m table.
std::vector<ClickRealization> all_realizations(const AdLayout& layout);

/// Most negative WMON value over all grid pairs and realizations, if below -tolerance.
std::optional<WmonWitness> find_wmon_violation(const AllocationRule& rule, const AdLayout& layout,
                                               const std::vector<std::vector<double>>& bid_grid,
                                               const std::vector<ClickRealization>& realizations,
                                               double tolerance = 1e-9);

/// Builds the ex-post counterexample for a never-skipping rule whose
/// allocation differs between `bids` and `bids_other`: the earliest round t
/// where allocations differ, b~ = 1 + max(b, b'), and the realization that
/// clicks only ad i at round t and nothing afterwards.
std::optional<WmonWitness> construct_wmon_counterexample(const AllocationRule& rule,
                                                         const AdLayout& layout,
                                                         std::span<const double> bids,
                                                         std::span<const double> bids_other);

// ---------------------------------------------------------------------------
// Payments

/// E[b_i(A(b))] - integral_0^1 b_i(A(b_-i, t b_i)) dt by composite Gauss-Legendre.
double myerson_payment_oracle(const ClickFn& expected_clicks, std::span<const double> bids,
                              std::size_t agent, const AdLayout& layout,
                              std::size_t quadrature_nodes = 8, std::size_t panels = 1);

// ---------------------------------------------------------------------------
// Welfare analytics

struct MomentStats {
  double m1 = 0.0;
  double m2_sq = 0.0;
  std::optional<double> sigma;  // empty when M1 = 0
  bool degenerate() const { return !sigma.has_value(); }
};

/// Power means of the products b_j mu_j with 1/divisor normalization.
MomentStats moments_of(std::span<const double> products, std::size_t divisor);
MomentStats moments(std::span<const double> bids, const ValidatedInstance& instance);

struct WelfareReport {
  std::string rule;
  double exploration_round_welfare = 0.0;
  double exploit_round_welfare = 0.0;  // W0
  double rand_round_welfare = 0.0;     // W0(Rand) = M1
  double total_welfare = 0.0;
  MomentStats stats;
  /// Closed-form identity being asserted and how far the computed W0 is from it.
  double predicted_exploit_round_welfare = 0.0;
  double identity_residual = 0.0;
};

/// Welfare decomposition with bids taken as values. Rules: rand, all,
/// all-single, sampled-sp.
WelfareReport welfare_report(const std::string& rule_name, std::span<const double> bids,
                             const ValidatedInstance& instance, AllParams params = {});

class ScenarioMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ScenarioKind {
  kMultiAgent,     // at least two agents, compared against Rand
  kSingleAgent,    // one agent with m ads, compared against Rand
  kDominantAgent,  // one agent holds k > m/2 ads, others bid zero; compared against sampled-sp
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::kMultiAgent;
  double epsilon = 0.0;  // asserted lower bound on max_j b_j mu_j
};

struct ThresholdVerdict {
  ScenarioKind kind;
  std::optional<double> sigma;
  double threshold = 1.0;
  bool predicts_improvement = false;
  std::string baseline;
};

ThresholdVerdict threshold_check(std::span<const double> bids, const ValidatedInstance& instance,
                                 const Scenario& scenario);

// ---------------------------------------------------------------------------
// Affine-maximizer machinery behind the CMON property of ALL

class InvalidDimensions : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// H_ii = tau rho_i^2, H_ij = rho_i rho_j with rho_i = sqrt(alpha m) / mu_i,
/// alpha = 1 / (m - k), tau = 1 + m - k.
struct HessianSpec {
  std::size_t m = 0;
  std::size_t k = 0;
  double alpha = 0.0;
  double tau = 0.0;
  Eigen::VectorXd rho;
  Eigen::MatrixXd matrix;
};

struct HessianCheck {
  HessianSpec spec;
  double min_eigenvalue = 0.0;
  Eigen::MatrixXd gram_vectors;  // row i is w_i in R^(k+1)
  double gram_residual = 0.0;    // max_ij |w_i . w_j - H_ij| / max(1, |H_ij|)
  double gram_abs_residual = 0.0;
  Eigen::Index gram_rank = 0;
};

HessianSpec build_hessian(std::span<const double> agent_ctrs, std::size_t m);
HessianCheck hessian_build_and_check(std::span<const double> agent_ctrs, std::size_t m);

/// The per-agent system of one exploitation round of ALL: p* (expected clicks
/// of the agent's ads), f_i, G, beta and w.
class AffineSystem {
 public:
  AffineSystem(std::span<const double> bids, std::span<const double> ctrs,
               std::span<const std::size_t> agent_ads);

  std::size_t k() const { return ads_.size(); }
  std::size_t m() const { return m_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  const Eigen::VectorXd& p_star() const { return p_star_; }
  const Eigen::VectorXd& agent_bids() const { return b_; }

  Eigen::VectorXd f(const Eigen::VectorXd& p) const;
  double g(const Eigen::VectorXd& p) const;
  double objective(const Eigen::VectorXd& p) const { return b_.dot(p) - g(p); }
  Eigen::VectorXd w() const;
  HessianSpec hessian() const;

 private:
  std::vector<std::size_t> ads_;
  std::size_t m_;
  Eigen::VectorXd mu_;
  Eigen::VectorXd b_;
  Eigen::VectorXd p_star_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
};

struct AffineResidualReport {
  Eigen::VectorXd p_star;
  double gradient_residual = 0.0;     // max_i |f_i(p*) - b_i|
  double fd_gradient_residual = 0.0;  // central differences of G at p*
  double critical_residual = 0.0;     // |H p* - w|_inf
  double solve_residual = 0.0;        // |H^-1 w - p*|_inf
  std::size_t grid_points = 0;
  std::size_t grid_violations = 0;    // sampled p with objective >= objective(p*)
  double min_objective_gap = std::numeric_limits<double>::infinity();
};

AffineResidualReport affine_maximizer_residual(std::span<const double> bids, std::span<const double> ctrs,
                                               std::span<const std::size_t> agent_ads,
                                               std::size_t grid_points = 1000, std::uint64_t seed = 7);

// ---------------------------------------------------------------------------
// Homogeneity of welfare in the CTRs

using WelfareFn = std::function<double(std::span<const double> ctrs)>;

/// max over z of |W(z mu) - z W(mu)|; every z must lie in (0, 1].
double homogeneity_probe(const WelfareFn& welfare, std::span<const double> ctrs,
                         std::span<const double> z_grid);

/// Welfare of a time-invariant rule that shows ad j with probability a_j each round.
WelfareFn fixed_distribution_welfare(std::vector<double> per_round, std::vector<double> bids,
                                     std::size_t horizon);

/// Welfare of any enumerable rule, computed by exact enumeration.
WelfareFn enumerated_welfare(std::shared_ptr<const AllocationRule> rule, std::vector<double> bids,
                             AdInstance base);

}  // namespace mechmab
