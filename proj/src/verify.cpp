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

#include "mechmab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

#include "mechmab/quadrature.hpp"
#include "mechmab/rng.hpp"

namespace mechmab {

namespace {

std::vector<double> with_agent_bids(const AdLayout& layout, std::span<const double> base,
                                    std::size_t agent, std::span<const double> own) {
  std::vector<double> bids(base.begin(), base.end());
  const auto& ads = layout.ads_of(agent);
  for (std::size_t idx = 0; idx < ads.size(); ++idx) bids[ads[idx]] = own[idx];
  return bids;
}

// Distinct rotation classes of cycles of length k with no repeated
// neighbours on g grid points, counted as sequences whose first entry is the
// unique minimum (exact for k <= 3).
std::uint64_t canonical_cycle_count(std::uint64_t g, std::size_t k) {
  std::uint64_t total = 0;
  for (std::uint64_t s = 0; s < g; ++s) {
    const std::uint64_t r = g - 1 - s;
    std::uint64_t count = r;
    for (std::size_t step = 2; step < k; ++step) count *= (r == 0 ? 0 : r - 1);
    total += count;
  }
  return total;
}

// Proper colourings of a k-cycle with g colours, divided by k.
std::uint64_t approx_cycle_count(std::uint64_t g, std::size_t k) {
  const double c = std::pow(static_cast<double>(g) - 1.0, static_cast<double>(k)) +
                   ((k % 2 == 0) ? 1.0 : -1.0) * (static_cast<double>(g) - 1.0);
  return static_cast<std::uint64_t>(std::llround(c / static_cast<double>(k)));
}

}  // namespace

std::vector<std::vector<double>> product_grid(std::span<const double> levels, std::size_t dims) {
  std::vector<std::vector<double>> out;
  if (levels.empty()) return out;
  std::vector<std::size_t> idx(dims, 0);
  while (true) {
    std::vector<double> point(dims);
    for (std::size_t d = 0; d < dims; ++d) point[d] = levels[idx[d]];
    out.push_back(std::move(point));
    std::size_t d = 0;
    while (d < dims && ++idx[d] == levels.size()) idx[d++] = 0;
    if (d == dims) break;
  }
  return out;
}

CmonReport check_cmon(const ClickFn& expected_clicks, const AdLayout& layout, std::size_t agent,
                      std::span<const double> other_bids, const std::vector<std::vector<double>>& grid,
                      std::size_t k_max, double tolerance, const CmonOptions& options) {
  if (k_max < 2) throw std::invalid_argument("check_cmon: k_max must be at least 2");
  const auto& ads = layout.ads_of(agent);
  for (const auto& point : grid) {
    if (point.size() != ads.size()) throw std::invalid_argument("check_cmon: grid point has wrong dimension");
  }
  const std::size_t g = grid.size();
  std::vector<ClickVector> outcomes;
  outcomes.reserve(g);
  for (const auto& point : grid) outcomes.push_back(expected_clicks(with_agent_bids(layout, other_bids, agent, point)));

  // value[a * g + b] = theta_a(o_b)
  std::vector<double> value(g * g, 0.0);
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = 0; b < g; ++b) {
      double v = 0.0;
      for (std::size_t idx = 0; idx < ads.size(); ++idx) v += grid[a][idx] * outcomes[b][ads[idx]];
      value[a * g + b] = v;
    }
  }

  CmonReport report;
  auto consider = [&](const std::vector<std::size_t>& cycle) {
    const std::size_t k = cycle.size();
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t cur = cycle[j];
      const std::size_t prev = cycle[(j + k - 1) % k];
      sum += value[cur * g + cur] - value[prev * g + cur];
    }
    ++report.cycles_checked;
    report.min_cycle_sum = std::min(report.min_cycle_sum, sum);
    if (sum < -tolerance) {
      ++report.violations;
      if (report.witnesses.size() < options.max_witnesses) {
        CycleWitness w;
        w.agent = agent;
        w.cycle_sum = sum;
        for (std::size_t c : cycle) {
          w.types.push_back(grid[c]);
          w.outcomes.push_back(outcomes[c]);
        }
        report.witnesses.push_back(std::move(w));
      }
    }
  };

  if (g < 2) return report;
  Stream rng(stream_key(options.seed, 0, StreamTag::kSampling));
  for (std::size_t k = 2; k <= k_max; ++k) {
    const std::uint64_t exhaustive_count = canonical_cycle_count(g, k);
    const bool exhaustive = k <= options.max_exhaustive_k && exhaustive_count <= options.exhaustive_budget;
    if (exhaustive) {
      report.cycles_total += exhaustive_count;
      std::vector<std::size_t> cycle(k);
      // Depth-first over sequences whose first entry is the strict minimum and
      // whose neighbours (cyclically) differ.
      std::function<void(std::size_t)> extend = [&](std::size_t pos) {
        if (pos == k) {
          if (cycle[k - 1] != cycle[0]) consider(cycle);
          return;
        }
        for (std::size_t c = cycle[0] + 1; c < g; ++c) {
          if (c == cycle[pos - 1]) continue;
          cycle[pos] = c;
          extend(pos + 1);
        }
      };
      for (std::size_t s = 0; s < g; ++s) {
        cycle[0] = s;
        extend(1);
      }
    } else {
      report.exhaustive = false;
      report.cycles_total += approx_cycle_count(g, k);
      std::vector<std::size_t> cycle(k);
      for (std::uint64_t draw = 0; draw < options.samples; ++draw) {
        cycle[0] = rng.below(g);
        for (std::size_t pos = 1; pos < k; ++pos) {
          do {
            cycle[pos] = rng.below(g);
          } while (cycle[pos] == cycle[pos - 1] || (pos == k - 1 && cycle[pos] == cycle[0]));
        }
        consider(cycle);
      }
    }
  }
  return report;
}

double wmon_value(const AllocationRule& rule, const AdLayout& layout, std::span<const double> bids,
                  std::span<const double> bids_tilde, const ClickRealization& realization) {
  const RoundTable a = impression_allocation(rule, layout, bids, realization);
  const RoundTable at = impression_allocation(rule, layout, bids_tilde, realization);
  double v = 0.0;
  for (std::size_t t = 0; t < a.rounds; ++t) {
    for (std::size_t j = 0; j < a.ads; ++j) {
      if (realization.at(t, j)) v += (bids_tilde[j] - bids[j]) * (at.at(t, j) - a.at(t, j));
    }
  }
  return v;
}

std::vector<ClickRealization> all_realizations(const AdLayout& layout) {
  const std::size_t cells = layout.horizon() * layout.num_ads();
  if (cells > kDefaultEnumerationCap) {
    throw TooLargeForEnumeration("all_realizations: m * T exceeds the enumeration cap");
  }
  std::vector<ClickRealization> out;
  out.reserve(std::size_t{1} << cells);
  for (std::uint64_t idx = 0; idx < (std::uint64_t{1} << cells); ++idx) {
    out.push_back(ClickRealization::from_index(layout.horizon(), layout.num_ads(), idx));
  }
  return out;
}

std::optional<WmonWitness> find_wmon_violation(const AllocationRule& rule, const AdLayout& layout,
                                               const std::vector<std::vector<double>>& bid_grid,
                                               const std::vector<ClickRealization>& realizations,
                                               double tolerance) {
  const std::size_t g = bid_grid.size();
  const std::size_t r = realizations.size();
  std::vector<RoundTable> tables(g * r);
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t q = 0; q < r; ++q) {
      tables[a * r + q] = impression_allocation(rule, layout, bid_grid[a], realizations[q]);
    }
  }
  std::optional<WmonWitness> best;
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = a + 1; b < g; ++b) {
      for (std::size_t q = 0; q < r; ++q) {
        const RoundTable& ta = tables[a * r + q];
        const RoundTable& tb = tables[b * r + q];
        double v = 0.0;
        for (std::size_t t = 0; t < ta.rounds; ++t) {
          for (std::size_t j = 0; j < ta.ads; ++j) {
            if (realizations[q].at(t, j)) v += (bid_grid[b][j] - bid_grid[a][j]) * (tb.at(t, j) - ta.at(t, j));
          }
        }
        if (v < -tolerance && (!best || v < best->value)) {
          best = WmonWitness{bid_grid[a], bid_grid[b], realizations[q], v, 0, 0};
        }
      }
    }
  }
  return best;
}

std::optional<WmonWitness> construct_wmon_counterexample(const AllocationRule& rule,
                                                         const AdLayout& layout,
                                                         std::span<const double> bids,
                                                         std::span<const double> bids_other) {
  constexpr double kEps = 1e-12;
  const std::size_t m = layout.num_ads();
  const std::size_t horizon = layout.horizon();
  std::vector<double> tilde(m);
  for (std::size_t j = 0; j < m; ++j) tilde[j] = 1.0 + std::max(bids[j], bids_other[j]);
  const std::vector<std::vector<double>> profiles = {std::vector<double>(bids.begin(), bids.end()),
                                                      std::vector<double>(bids_other.begin(), bids_other.end()),
                                                      tilde};
  const auto realizations = all_realizations(layout);
  std::vector<std::vector<RoundTable>> tables(3);
  for (std::size_t p = 0; p < 3; ++p) {
    for (const auto& rho : realizations) tables[p].push_back(impression_allocation(rule, layout, profiles[p], rho));
  }
  auto rows_differ = [&](const RoundTable& x, const RoundTable& y, std::size_t t) {
    for (std::size_t j = 0; j < m; ++j) {
      if (std::abs(x.at(t, j) - y.at(t, j)) > kEps) return true;
    }
    return false;
  };

  // Earliest round at which any two of the three profiles disagree.
  std::optional<std::size_t> first;
  for (std::size_t t = 0; t < horizon && !first; ++t) {
    for (std::size_t q = 0; q < realizations.size() && !first; ++q) {
      if (rows_differ(tables[0][q], tables[1][q], t) || rows_differ(tables[0][q], tables[2][q], t) ||
          rows_differ(tables[1][q], tables[2][q], t)) {
        first = t;
      }
    }
  }
  if (!first) return std::nullopt;
  const std::size_t t = *first;

  for (std::size_t q = 0; q < realizations.size(); ++q) {
    for (std::size_t base = 0; base < 2; ++base) {
      const RoundTable& tb = tables[base][q];
      const RoundTable& tt = tables[2][q];
      if (!rows_differ(tb, tt, t)) continue;
      for (std::size_t i = 0; i < m; ++i) {
        if (tt.at(t, i) < tb.at(t, i) - kEps) {
          ClickRealization rho(horizon, m);
          for (std::size_t s = 0; s < t; ++s) {
            for (std::size_t j = 0; j < m; ++j) rho.set(s, j, realizations[q].at(s, j));
          }
          rho.set(t, i, true);
          WmonWitness w;
          w.bids = profiles[base];
          w.bids_tilde = tilde;
          w.realization = rho;
          w.value = wmon_value(rule, layout, w.bids, w.bids_tilde, rho);
          w.round = t;
          w.ad = i;
          return w;
        }
      }
    }
  }
  return std::nullopt;
}

double myerson_payment_oracle(const ClickFn& expected_clicks, std::span<const double> bids,
                              std::size_t agent, const AdLayout& layout, std::size_t quadrature_nodes,
                              std::size_t panels) {
  if (quadrature_nodes < 2) throw std::invalid_argument("myerson_payment_oracle: need at least 2 nodes");
  const auto& ads = layout.ads_of(agent);
  const double realized = agent_value(layout, bids, agent, expected_clicks(bids));
  std::vector<double> scaled(bids.begin(), bids.end());
  const double area = integrate(
      [&](double t) {
        for (std::size_t j : ads) scaled[j] = t * bids[j];
        return agent_value(layout, bids, agent, expected_clicks(scaled));
      },
      0.0, 1.0, quadrature_nodes, panels);
  return realized - area;
}

MomentStats moments_of(std::span<const double> products, std::size_t divisor) {
  MomentStats s;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double x : products) {
    sum += x;
    sum_sq += x * x;
  }
  const double d = static_cast<double>(divisor);
  s.m1 = sum / d;
  s.m2_sq = sum_sq / d;
  if (s.m1 > 0.0) s.sigma = s.m2_sq / (s.m1 * s.m1);
  return s;
}

MomentStats moments(std::span<const double> bids, const ValidatedInstance& instance) {
  std::vector<double> products(instance.num_ads());
  for (std::size_t j = 0; j < products.size(); ++j) products[j] = bids[j] * instance.ctr(j);
  return moments_of(products, products.size());
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

WelfareReport welfare_report(const std::string& rule_name, std::span<const double> bids,
                             const ValidatedInstance& instance, AllParams params) {
  const std::size_t m = instance.num_ads();
  const std::size_t horizon = instance.horizon();
  std::vector<double> products(m);
  for (std::size_t j = 0; j < m; ++j) products[j] = bids[j] * instance.ctr(j);

  WelfareReport r;
  r.rule = rule_name;
  r.stats = moments_of(products, m);
  r.rand_round_welfare = r.stats.m1;
  const double explore = static_cast<double>(params.explore_rounds);
  const double exploit = static_cast<double>(horizon) - explore;

  if (rule_name == "rand") {
    r.exploration_round_welfare = r.stats.m1;
    r.exploit_round_welfare = r.stats.m1;
    r.predicted_exploit_round_welfare = r.stats.m1;
    r.total_welfare = static_cast<double>(horizon) * r.stats.m1;
  } else if (rule_name == "all") {
    const auto round = all_closed_form_round_clicks(bids, instance, false);
    r.exploration_round_welfare = dot(bids, round.exploration);
    r.exploit_round_welfare = dot(bids, round.exploitation);
    r.predicted_exploit_round_welfare = r.stats.m1 + r.stats.m2_sq - r.stats.m1 * r.stats.m1;
    r.total_welfare = explore * r.exploration_round_welfare + exploit * r.exploit_round_welfare;
  } else if (rule_name == "all-single") {
    const auto round = all_closed_form_round_clicks(bids, instance, true);
    r.exploration_round_welfare = dot(bids, round.exploration);
    r.exploit_round_welfare = dot(bids, round.exploitation);
    // The dummy contributes a zero product but counts in the 1/(m+1) normalization.
    const MomentStats aug = moments_of(products, m + 1);
    r.predicted_exploit_round_welfare = aug.m1 + aug.m2_sq - aug.m1 * aug.m1;
    r.total_welfare = explore * r.exploration_round_welfare + exploit * r.exploit_round_welfare;
  } else if (rule_name == "sampled-sp") {
    const AdLayout& layout = instance.layout();
    const std::size_t n = layout.num_agents();
    std::uint64_t selections = 1;
    for (std::size_t i = 0; i < n; ++i) {
      selections *= layout.ads_of(i).size();
      if (selections > 1'000'000) throw std::invalid_argument("welfare_report: too many selections");
    }
    std::vector<std::size_t> pick(n, 0);
    double explore_sum = 0.0;
    double exploit_sum = 0.0;
    double predicted_sum = 0.0;
    for (std::uint64_t s = 0; s < selections; ++s) {
      std::vector<AdDescription> sub;
      std::vector<double> sub_bids;
      std::vector<double> sub_products;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ad = layout.ads_of(i)[pick[i]];
        sub.push_back({i, instance.value(ad), instance.ctr(ad)});
        sub_bids.push_back(bids[ad]);
        sub_products.push_back(products[ad]);
      }
      const ValidatedInstance sub_instance = make_instance(n, horizon, sub);
      const auto round = all_closed_form_round_clicks(sub_bids, sub_instance, false);
      explore_sum += dot(sub_bids, round.exploration);
      exploit_sum += dot(sub_bids, round.exploitation);
      const MomentStats sm = moments_of(sub_products, n);
      predicted_sum += sm.m1 + sm.m2_sq - sm.m1 * sm.m1;
      for (std::size_t i = 0; i < n; ++i) {
        if (++pick[i] < layout.ads_of(i).size()) break;
        pick[i] = 0;
      }
    }
    const double w = 1.0 / static_cast<double>(selections);
    r.exploration_round_welfare = explore_sum * w;
    r.exploit_round_welfare = exploit_sum * w;
    r.predicted_exploit_round_welfare = predicted_sum * w;
    r.total_welfare = explore * r.exploration_round_welfare + exploit * r.exploit_round_welfare;
  } else {
    throw std::invalid_argument("welfare_report: unsupported rule '" + rule_name + "'");
  }
  r.identity_residual = std::abs(r.exploit_round_welfare - r.predicted_exploit_round_welfare);
  return r;
}

ThresholdVerdict threshold_check(std::span<const double> bids, const ValidatedInstance& instance,
                                 const Scenario& scenario) {
  const AdLayout& layout = instance.layout();
  const std::size_t m = instance.num_ads();
  const double eps = scenario.epsilon;
  if (!(eps > 0.0 && eps <= 1.0)) throw ScenarioMismatch("epsilon must lie in (0, 1]");
  double best = 0.0;
  for (std::size_t j = 0; j < m; ++j) best = std::max(best, bids[j] * instance.ctr(j));
  if (best < eps - 1e-12) {
    std::ostringstream msg;
    msg << "max_j b_j mu_j = " << best << " is below the asserted epsilon " << eps;
    throw ScenarioMismatch(msg.str());
  }

  ThresholdVerdict v;
  v.kind = scenario.kind;
  const MomentStats stats = moments(bids, instance);
  v.sigma = stats.sigma;
  const double md = static_cast<double>(m);
  switch (scenario.kind) {
    case ScenarioKind::kMultiAgent:
      if (layout.num_agents() < 2) throw ScenarioMismatch("multi-agent scenario needs at least two agents");
      v.threshold = 1.0;
      v.baseline = "rand";
      break;
    case ScenarioKind::kSingleAgent: {
      if (layout.num_agents() != 1) throw ScenarioMismatch("single-agent scenario needs exactly one agent");
      if (instance.horizon() < 2) throw ScenarioMismatch("single-agent scenario needs T >= 2");
      const double horizon = static_cast<double>(instance.horizon());
      v.threshold = 1.0 + (md + 1.0) / (md * eps) + (md + 1.0) / (eps * (horizon - 1.0));
      v.baseline = "rand";
      break;
    }
    case ScenarioKind::kDominantAgent: {
      std::optional<std::size_t> dominant;
      for (std::size_t i = 0; i < layout.num_agents(); ++i) {
        if (2 * layout.ads_of(i).size() > m) dominant = i;
      }
      if (!dominant) throw ScenarioMismatch("no agent holds more than half of the ads");
      if (layout.ads_of(*dominant).size() == m) throw ScenarioMismatch("dominant agent must leave some ads to others");
      for (std::size_t j = 0; j < m; ++j) {
        if (layout.owner(j) != *dominant && bids[j] != 0.0) {
          throw ScenarioMismatch("agents other than the dominant one must bid zero");
        }
      }
      const double k = static_cast<double>(layout.ads_of(*dominant).size());
      v.threshold = 1.0 + md * (md - k) / (k * eps);
      v.baseline = "sampled-sp";
      break;
    }
  }
  v.predicts_improvement = v.sigma.has_value() && *v.sigma > v.threshold;
  return v;
}

HessianSpec build_hessian(std::span<const double> agent_ctrs, std::size_t m) {
  const std::size_t k = agent_ctrs.size();
  if (k < 1 || k >= m) throw InvalidDimensions("hessian: need 1 <= k < m");
  for (double mu : agent_ctrs) {
    if (!(mu > 0.0)) throw InvalidDimensions("hessian: CTRs must be positive");
  }
  HessianSpec h;
  h.m = m;
  h.k = k;
  h.alpha = 1.0 / static_cast<double>(m - k);
  h.tau = 1.0 + static_cast<double>(m - k);
  h.rho.resize(static_cast<Eigen::Index>(k));
  const double scale = std::sqrt(h.alpha * static_cast<double>(m));
  for (std::size_t i = 0; i < k; ++i) h.rho(static_cast<Eigen::Index>(i)) = scale / agent_ctrs[i];
  h.matrix = h.rho * h.rho.transpose();
  h.matrix.diagonal() *= h.tau;
  return h;
}

HessianCheck hessian_build_and_check(std::span<const double> agent_ctrs, std::size_t m) {
  HessianCheck c;
  c.spec = build_hessian(agent_ctrs, m);
  const auto k = static_cast<Eigen::Index>(c.spec.k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c.spec.matrix, Eigen::EigenvaluesOnly);
  c.min_eigenvalue = solver.eigenvalues().minCoeff();

  c.gram_vectors = Eigen::MatrixXd::Zero(k, k + 1);
  const double lift = std::sqrt(c.spec.tau - 1.0);
  for (Eigen::Index i = 0; i < k; ++i) {
    c.gram_vectors(i, i) = lift * c.spec.rho(i);
    c.gram_vectors(i, k) = c.spec.rho(i);
  }
  const Eigen::MatrixXd gram = c.gram_vectors * c.gram_vectors.transpose();
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double target = c.spec.matrix(i, j);
      const double diff = std::abs(gram(i, j) - target);
      c.gram_abs_residual = std::max(c.gram_abs_residual, diff);
      c.gram_residual = std::max(c.gram_residual, diff / std::max(1.0, std::abs(target)));
    }
  }
  c.gram_rank = Eigen::FullPivLU<Eigen::MatrixXd>(c.gram_vectors).rank();
  return c;
}

AffineSystem::AffineSystem(std::span<const double> bids, std::span<const double> ctrs,
                           std::span<const std::size_t> agent_ads)
    : ads_(agent_ads.begin(), agent_ads.end()), m_(ctrs.size()) {
  const std::size_t k = ads_.size();
  if (k < 1 || k >= m_) throw InvalidDimensions("affine system: need 1 <= k < m");
  const double md = static_cast<double>(m_);
  alpha_ = 1.0 / static_cast<double>(m_ - k);
  std::vector<bool> own(m_, false);
  for (std::size_t j : ads_) own.at(j) = true;
  double total_x = 0.0;
  double outside_x = 0.0;
  for (std::size_t j = 0; j < m_; ++j) {
    if (!(ctrs[j] > 0.0)) throw InvalidDimensions("affine system: CTRs must be positive");
    const double x = bids[j] * ctrs[j] / md;
    total_x += x;
    if (!own[j]) outside_x += x;
  }
  beta_ = 1.0 / md - alpha_ * (outside_x - static_cast<double>(k) / md);
  mu_.resize(static_cast<Eigen::Index>(k));
  b_.resize(static_cast<Eigen::Index>(k));
  p_star_.resize(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    const std::size_t j = ads_[i];
    mu_(e) = ctrs[j];
    b_(e) = bids[j];
    p_star_(e) = ctrs[j] * (bids[j] * ctrs[j] / md + (1.0 - total_x) / md);
  }
}

Eigen::VectorXd AffineSystem::f(const Eigen::VectorXd& p) const {
  const double md = static_cast<double>(m_);
  const double coupled = (p.array() / mu_.array()).sum();
  Eigen::VectorXd out(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    out(i) = p(i) * md / (mu_(i) * mu_(i)) + alpha_ * md * coupled / mu_(i) - beta_ * md / mu_(i);
  }
  return out;
}

double AffineSystem::g(const Eigen::VectorXd& p) const {
  const double md = static_cast<double>(m_);
  double value = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    value += -p(i) * md * beta_ / mu_(i) + 0.5 * md * p(i) * p(i) * (1.0 + alpha_) / (mu_(i) * mu_(i));
    for (Eigen::Index j = i + 1; j < p.size(); ++j) value += p(i) * p(j) * md * alpha_ / (mu_(i) * mu_(j));
  }
  return value;
}

Eigen::VectorXd AffineSystem::w() const {
  const double md = static_cast<double>(m_);
  return b_.array() + beta_ * md / mu_.array();
}

HessianSpec AffineSystem::hessian() const {
  std::vector<double> mu(mu_.data(), mu_.data() + mu_.size());
  return build_hessian(mu, m_);
}

AffineResidualReport affine_maximizer_residual(std::span<const double> bids, std::span<const double> ctrs,
                                               std::span<const std::size_t> agent_ads,
                                               std::size_t grid_points, std::uint64_t seed) {
  const AffineSystem sys(bids, ctrs, agent_ads);
  AffineResidualReport r;
  r.p_star = sys.p_star();
  const Eigen::VectorXd& p = r.p_star;
  r.gradient_residual = (sys.f(p) - sys.agent_bids()).cwiseAbs().maxCoeff();

  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double h = 1e-4 * std::max(1e-3, std::abs(p(i)));
    Eigen::VectorXd up = p;
    Eigen::VectorXd down = p;
    up(i) += h;
    down(i) -= h;
    const double grad = (sys.g(up) - sys.g(down)) / (2.0 * h);
    r.fd_gradient_residual = std::max(r.fd_gradient_residual, std::abs(grad - sys.agent_bids()(i)));
  }

  const HessianSpec h = sys.hessian();
  const Eigen::VectorXd w = sys.w();
  r.critical_residual = (h.matrix * p - w).cwiseAbs().maxCoeff();
  r.solve_residual = (h.matrix.ldlt().solve(w) - p).cwiseAbs().maxCoeff();

  Stream rng(stream_key(seed, 0, StreamTag::kSampling));
  const double best = sys.objective(p);
  r.grid_points = grid_points;
  for (std::size_t s = 0; s < grid_points; ++s) {
    Eigen::VectorXd q(p.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = rng.uniform();
    const double gap = best - sys.objective(q);
    r.min_objective_gap = std::min(r.min_objective_gap, gap);
    if (!(gap > 0.0)) ++r.grid_violations;
  }
  return r;
}

double homogeneity_probe(const WelfareFn& welfare, std::span<const double> ctrs,
                         std::span<const double> z_grid) {
  const double base = welfare(ctrs);
  std::vector<double> scaled(ctrs.size());
  double worst = 0.0;
  for (double z : z_grid) {
    if (!(z > 0.0 && z <= 1.0)) throw std::invalid_argument("homogeneity_probe: z must lie in (0, 1]");
    for (std::size_t j = 0; j < ctrs.size(); ++j) scaled[j] = z * ctrs[j];
    worst = std::max(worst, std::abs(welfare(scaled) - z * base));
  }
  return worst;
}

WelfareFn fixed_distribution_welfare(std::vector<double> per_round, std::vector<double> bids,
                                     std::size_t horizon) {
  return [per_round = std::move(per_round), bids = std::move(bids), horizon](std::span<const double> ctrs) {
    double w = 0.0;
    for (std::size_t j = 0; j < ctrs.size(); ++j) w += per_round[j] * bids[j] * ctrs[j];
    return static_cast<double>(horizon) * w;
  };
}

WelfareFn enumerated_welfare(std::shared_ptr<const AllocationRule> rule, std::vector<double> bids,
                             AdInstance base) {
  return [rule = std::move(rule), bids = std::move(bids), base = std::move(base)](std::span<const double> ctrs) {
    AdInstance inst = base;
    for (std::size_t j = 0; j < inst.ads.size(); ++j) inst.ads[j].ctr = ctrs[j];
    const ValidatedInstance v = validate_instance(inst);
    const ClickVector c = exact_expected_clicks(*rule, bids, v);
    return dot(bids, c);
  };
}

}  // namespace mechmab
