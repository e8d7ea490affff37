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

#include <doctest.h>

#include <cmath>

#include "mechmab/enumerate.hpp"
#include "mechmab/rules.hpp"
#include "mechmab/verify.hpp"
#include "toy_rules.hpp"

using namespace mechmab;

namespace {

ClickFn exact_fn(std::shared_ptr<const AllocationRule> rule, const ValidatedInstance& inst) {
  return [rule, &inst](std::span<const double> b) { return exact_expected_clicks(*rule, b, inst); };
}

}  // namespace

TEST_CASE("cycle sums on hand-checkable outcome maps") {
  const AdLayout layout(1, 1, {0});
  const ClickFn identity = [](std::span<const double> b) { return ClickVector(std::vector<double>{b[0]}); };
  const ClickFn reversed = [](std::span<const double> b) { return ClickVector(std::vector<double>{1.0 - b[0]}); };
  const std::vector<double> none = {0.0};
  const std::vector<std::vector<double>> grid = {{0.0}, {0.5}, {1.0}};

  const auto good = check_cmon(identity, layout, 0, none, grid, 3, 1e-9);
  CHECK(good.witnesses.empty());
  CHECK(good.cycles_total == 5);  // three 2-cycles, two orientations of the 3-cycle
  CHECK(good.cycles_checked == 5);
  CHECK(good.min_cycle_sum == doctest::Approx(0.25));

  const auto bad = check_cmon(reversed, layout, 0, none, grid, 2, 1e-9);
  CHECK(bad.violations == 3);
  REQUIRE(bad.witnesses.size() == 3);
  // (theta_0 - theta_1)^2 with the sign flipped
  CHECK(bad.min_cycle_sum == doctest::Approx(-1.0));
  for (const auto& w : bad.witnesses) {
    const double d = w.types[0][0] - w.types[1][0];
    CHECK(w.cycle_sum == doctest::Approx(-d * d));
    CHECK(w.outcomes.size() == 2);
  }
}

TEST_CASE("CMON search over allocation rules") {
  const auto inst = make_instance(2, 2, {{0, 1, 0.5}, {1, 1, 0.5}});
  const std::vector<double> levels = {0.0, 0.5, 1.0};
  const auto grid = product_grid(levels, 1);
  const std::vector<double> others = {0.0, 0.7};

  const auto rand = check_cmon(exact_fn(rand_rule(), inst), inst.layout(), 0, others, grid, 3, 1e-9);
  CHECK(rand.witnesses.empty());
  CHECK(std::abs(rand.min_cycle_sum) <= 1e-15);

  for (std::size_t agent : {0u, 1u}) {
    const auto all = check_cmon(exact_fn(all_rule(), inst), inst.layout(), agent, others, grid, 3, 1e-9);
    CHECK(all.witnesses.empty());
    CHECK(all.exhaustive);
  }

  const auto anti = std::make_shared<testing::AntiMonotoneRule>(1);
  const auto found = check_cmon(exact_fn(anti, inst), inst.layout(), 0, others, grid, 2, 1e-9);
  CHECK(found.violations > 0);
  REQUIRE_FALSE(found.witnesses.empty());
  CHECK(found.witnesses.front().types.size() == 2);
}

TEST_CASE("CMON search samples cycles beyond the exhaustive limit") {
  const auto inst = make_instance(2, 2, {{0, 1, 0.5}, {1, 1, 0.5}});
  const std::vector<double> levels = {0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<double> others = {0.0, 0.7};
  CmonOptions opts;
  opts.samples = 2000;
  const auto rep = check_cmon(exact_fn(all_rule(), inst), inst.layout(), 0, others, product_grid(levels, 1), 5,
                              1e-9, opts);
  CHECK_FALSE(rep.exhaustive);
  CHECK(rep.witnesses.empty());
  CHECK(rep.coverage() > 0.0);
  CHECK(rep.cycles_checked == 10 + 20 + 2 * 2000);  // C(5,2) two-cycles, 2 C(5,3) three-cycles
}

TEST_CASE("greedy violates ex-post weak monotonicity") {
  const AdLayout layout(2, 2, {0, 1});
  const auto greedy = greedy_rule(0);
  const std::vector<double> levels = {0.0, 1.0, 2.0};
  const auto grid = product_grid(levels, 2);
  const auto rhos = all_realizations(layout);
  CHECK(rhos.size() == 16);

  const auto worst = find_wmon_violation(*greedy, layout, grid, rhos);
  REQUIRE(worst.has_value());
  CHECK(worst->value == doctest::Approx(-2.0));
  CHECK(worst->value <= -1.0 + 1e-9);

  const std::vector<double> b = {1.0, 0.0};
  const std::vector<double> b_other = {0.0, 1.0};
  const auto built = construct_wmon_counterexample(*greedy, layout, b, b_other);
  REQUIRE(built.has_value());
  CHECK(built->bids == b_other);
  CHECK(built->bids_tilde == std::vector<double>{2.0, 2.0});
  CHECK(built->round == 0);
  CHECK(built->ad == 1);
  CHECK(realization_to_json(built->realization) == "[[0,1],[0,0]]");
  CHECK(built->value == doctest::Approx(-1.0));

  CHECK_FALSE(find_wmon_violation(*rand_rule(), layout, grid, rhos).has_value());
  CHECK_FALSE(find_wmon_violation(*skip_rule(), layout, grid, rhos).has_value());
  CHECK_FALSE(construct_wmon_counterexample(*rand_rule(), layout, b, b_other).has_value());
}

TEST_CASE("two-cycle CMON on ex-post outcomes agrees with the WMON search") {
  // One agent owning every ad, so both checkers vary the same coordinates.
  const AdLayout layout(1, 2, {0, 0});
  const auto rhos = all_realizations(layout);
  struct Case {
    std::shared_ptr<const AllocationRule> rule;
    std::vector<double> levels;
  };
  const std::vector<Case> cases = {
      {rand_rule(), {0.0, 1.0, 2.0}},
      {skip_rule(), {0.0, 1.0, 2.0}},
      {greedy_rule(0), {0.0, 1.0, 2.0}},
      {greedy_rule(1), {0.0, 0.5, 1.0}},
      {std::make_shared<testing::AntiMonotoneRule>(1), {0.0, 0.5, 1.0}},
      {all_single_agent(), {0.0, 0.5, 1.0}},
      {make_rule("sampled-sp"), {0.0, 0.5, 1.0}},
  };
  const std::vector<double> none = {0.0, 0.0};
  for (const auto& c : cases) {
    CAPTURE(c.rule->name());
    const auto grid = product_grid(c.levels, 2);
    const auto wmon = find_wmon_violation(*c.rule, layout, grid, rhos);
    double cmon_min = 0.0;
    bool cmon_found = false;
    for (const auto& rho : rhos) {
      const ClickFn ex_post = [&](std::span<const double> b) {
        return realized_click_expectation(*c.rule, layout, b, rho);
      };
      const auto rep = check_cmon(ex_post, layout, 0, none, grid, 2, 1e-9);
      cmon_found = cmon_found || rep.violations > 0;
      cmon_min = std::min(cmon_min, rep.min_cycle_sum);
    }
    CHECK(cmon_found == wmon.has_value());
    if (wmon) CHECK(wmon->value == doctest::Approx(cmon_min).epsilon(1e-12));
  }
}

TEST_CASE("payment oracle") {
  const auto inst = make_instance(2, 3, {{0, 1.0, 0.8}, {1, 0.6, 0.5}});
  const auto clicks = exact_fn(all_rule(), inst);
  const std::vector<double> zero_first = {0.0, 0.6};
  CHECK(myerson_payment_oracle(clicks, zero_first, 0, inst.layout()) == 0.0);

  for (double b : {0.3, 0.8, 1.0}) {
    for (double mu : {0.4, 1.0}) {
      for (std::size_t t0 : {1u, 2u}) {
        const auto single = make_instance(1, 4, {{0, b, mu}});
        const AllParams params{t0};
        const ClickFn closed = [&](std::span<const double> x) {
          return all_single_closed_form_clicks(x, single, params);
        };
        const std::vector<double> bids = {b};
        const double analytic = static_cast<double>(4 - t0) * mu * mu * b * b / 8.0;
        CHECK(myerson_payment_oracle(closed, bids, 0, single.layout(), 2) == doctest::Approx(analytic).epsilon(1e-13));
        const ClickFn enumerated = exact_fn(all_single_agent(params), single);
        CHECK(myerson_payment_oracle(enumerated, bids, 0, single.layout(), 2) ==
              doctest::Approx(analytic).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS(myerson_payment_oracle(clicks, zero_first, 0, inst.layout(), 1));
}

TEST_CASE("moments and skew") {
  const auto inst = make_instance(2, 2, {{0, 1, 1.0}, {1, 1, 1.0}});
  const std::vector<double> one_zero = {1.0, 0.0};
  const auto s = moments(one_zero, inst);
  CHECK(s.m1 == 0.5);
  CHECK(s.m2_sq == 0.5);
  REQUIRE(s.sigma.has_value());
  CHECK(*s.sigma == 2.0);
  CHECK(s.m2_sq - s.m1 * s.m1 == 0.25);

  const std::vector<double> flat = {0.4, 0.4, 0.4};
  CHECK(*moments_of(flat, 3).sigma == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<double> spike = {1.0, 0.0, 0.0, 0.0};
  CHECK(*moments_of(spike, 4).sigma == 4.0);
  const std::vector<double> zeros = {0.0, 0.0};
  CHECK(moments(zeros, inst).degenerate());

  Stream rng(31);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t m = 1 + rng.below(8);
    std::vector<double> p(m);
    for (double& x : p) x = rng.uniform() * (rng.below(3) == 0 ? 0.0 : 1.0);
    const auto st = moments_of(p, m);
    if (st.degenerate()) continue;
    CHECK(*st.sigma >= 1.0 - 1e-12);
    CHECK(*st.sigma <= static_cast<double>(m) + 1e-12);
  }
}

TEST_CASE("welfare decomposition") {
  SUBCASE("gap of 0.25 for a one-hot two-agent instance") {
    const auto inst = make_instance(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
    const auto r = welfare_report("all", inst.values(), inst);
    CHECK(r.exploit_round_welfare - r.rand_round_welfare == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(r.identity_residual <= 1e-15);
  }
  SUBCASE("uniform instances have no gap") {
    const auto inst = make_instance(3, 3, {{0, 0.5, 0.8}, {1, 0.5, 0.8}, {2, 0.5, 0.8}});
    const auto r = welfare_report("all", inst.values(), inst);
    CHECK(std::abs(r.exploit_round_welfare - r.rand_round_welfare) <= 1e-15);
  }
  SUBCASE("single-agent example") {
    const auto inst = make_instance(1, 2, {{0, 1, 1.0}, {0, 1, 1.0}});
    const auto r = welfare_report("all-single", inst.values(), inst);
    CHECK(std::abs(r.exploit_round_welfare - 8.0 / 9.0) <= 1e-15);
    CHECK(std::abs(r.exploration_round_welfare - 2.0 / 3.0) <= 1e-15);
    CHECK(std::abs(r.exploration_round_welfare - 2.0 / 3.0 * r.rand_round_welfare) <= 1e-15);
    CHECK(std::abs(r.total_welfare - 14.0 / 9.0) <= 1e-15);
    CHECK(r.identity_residual <= 1e-15);
  }
  SUBCASE("closed forms agree with the enumeration") {
    Stream rng(404);
    for (int rep = 0; rep < 40; ++rep) {
      const std::size_t m = 2 + rng.below(3);
      const std::size_t horizon = 2 + rng.below(12 / m - 1);
      const bool single = rep % 4 == 0;
      const std::size_t agents = single ? 1 : 2 + rng.below(m - 1);
      std::vector<AdDescription> ads;
      for (std::size_t j = 0; j < m; ++j) ads.push_back({j < agents ? j : rng.below(agents), rng.uniform(),
                                                         0.05 + 0.95 * rng.uniform()});
      const auto inst = make_instance(agents, horizon, ads);
      const AllParams params{1 + rng.below(horizon - 1)};
      for (const std::string name : {"rand", single ? "all-single" : "all", "sampled-sp"}) {
        CAPTURE(name);
        const auto r = welfare_report(name, inst.values(), inst, params);
        CHECK(r.identity_residual <= 1e-12);
        const auto exact = exact_expected_clicks(*make_rule(name, params), inst.values(), inst);
        CHECK(std::abs(total_value(inst.values(), exact) - r.total_welfare) <= 1e-12);
      }
    }
  }
  CHECK_THROWS(welfare_report("greedy", std::vector<double>{1.0}, make_instance(1, 2, {{0, 1, 1.0}})));
}

TEST_CASE("skew thresholds") {
  SUBCASE("uniform instance never clears the bar") {
    const auto inst = make_instance(2, 5, {{0, 0.5, 1.0}, {1, 0.5, 1.0}});
    const auto v = threshold_check(inst.values(), inst, Scenario{ScenarioKind::kMultiAgent, 0.5});
    CHECK(v.threshold == 1.0);
    CHECK_FALSE(v.predicts_improvement);
    CHECK(v.baseline == "rand");
  }
  SUBCASE("two skewed agents") {
    const auto inst = make_instance(2, 5, {{0, 1.0, 1.0}, {1, 0.2, 1.0}});
    const auto v = threshold_check(inst.values(), inst, Scenario{ScenarioKind::kMultiAgent, 1.0});
    CHECK(v.predicts_improvement);
  }
  SUBCASE("single agent bound") {
    const auto inst = make_instance(1, 101, {{0, 0.9, 1.0}, {0, 0.0, 1.0}});
    const auto v = threshold_check(inst.values(), inst, Scenario{ScenarioKind::kSingleAgent, 0.9});
    CHECK(v.threshold == doctest::Approx(1.0 + 3.0 / 1.8 + 3.0 / 90.0).epsilon(1e-15));
    CHECK(v.threshold == doctest::Approx(2.7).epsilon(1e-15));
    CHECK(*v.sigma == doctest::Approx(2.0));
    CHECK_FALSE(v.predicts_improvement);
  }
  SUBCASE("dominant agent bound") {
    const auto inst = make_instance(2, 4, {{0, 1.0, 1.0}, {0, 0.0, 1.0}, {0, 0.0, 1.0}, {1, 0.0, 1.0}});
    const auto v = threshold_check(inst.values(), inst, Scenario{ScenarioKind::kDominantAgent, 1.0});
    CHECK(v.threshold == doctest::Approx(1.0 + 4.0 * 1.0 / 3.0));
    CHECK(*v.sigma == doctest::Approx(4.0));
    CHECK(v.predicts_improvement);
    CHECK(v.baseline == "sampled-sp");
  }
  SUBCASE("scenario mismatches") {
    const auto pair = make_instance(2, 4, {{0, 0.5, 1.0}, {1, 0.5, 1.0}});
    CHECK_THROWS_AS(threshold_check(pair.values(), pair, Scenario{ScenarioKind::kSingleAgent, 0.5}), ScenarioMismatch);
    CHECK_THROWS_AS(threshold_check(pair.values(), pair, Scenario{ScenarioKind::kMultiAgent, 0.9}), ScenarioMismatch);
    CHECK_THROWS_AS(threshold_check(pair.values(), pair, Scenario{ScenarioKind::kDominantAgent, 0.5}),
                    ScenarioMismatch);
    const auto solo = make_instance(1, 4, {{0, 0.5, 1.0}});
    CHECK_THROWS_AS(threshold_check(solo.values(), solo, Scenario{ScenarioKind::kMultiAgent, 0.5}), ScenarioMismatch);
  }
}

TEST_CASE("Hessian of the affine objective") {
  const std::vector<double> one = {0.5};
  const auto a = hessian_build_and_check(one, 2);
  CHECK(a.spec.tau == 2.0);
  CHECK(a.spec.rho(0) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(a.spec.matrix(0, 0) == doctest::Approx(16.0).epsilon(1e-15));
  CHECK(a.min_eigenvalue > 0.0);

  const std::vector<double> two = {1.0, 1.0};
  const auto b = hessian_build_and_check(two, 3);
  CHECK(b.spec.matrix(0, 0) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(b.spec.matrix(0, 1) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(b.min_eigenvalue == doctest::Approx(3.0).epsilon(1e-14));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.spec.matrix);
  CHECK(es.eigenvalues()(1) == doctest::Approx(9.0).epsilon(1e-14));

  Stream rng(8);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t m = 2 + rng.below(12);
    const std::size_t k = 1 + rng.below(m - 1);
    std::vector<double> mu(k);
    for (double& x : mu) x = 0.05 + 0.95 * rng.uniform();
    const auto c = hessian_build_and_check(mu, m);
    CHECK(c.min_eigenvalue > 0.0);
    CHECK(c.gram_residual <= 1e-12);
    CHECK(c.gram_rank == static_cast<Eigen::Index>(k));
    CHECK(c.spec.tau == doctest::Approx((1.0 + c.spec.alpha) / c.spec.alpha).epsilon(1e-15));
    CHECK(c.spec.matrix.isApprox(c.spec.matrix.transpose()));
  }
  CHECK_THROWS_AS(hessian_build_and_check(two, 2), InvalidDimensions);
  CHECK_THROWS_AS(hessian_build_and_check(std::vector<double>{}, 2), InvalidDimensions);
  CHECK_THROWS_AS(hessian_build_and_check(std::vector<double>{0.0}, 2), InvalidDimensions);
}

TEST_CASE("ALL's exploitation round is an affine maximizer") {
  const std::vector<double> b1 = {0.7, 0.4};
  const std::vector<double> mu1 = {0.6, 0.9};
  const std::vector<std::size_t> first = {0};
  const auto scalar = affine_maximizer_residual(b1, mu1, first);
  CHECK(scalar.gradient_residual <= 1e-10);
  CHECK(scalar.grid_violations == 0);

  Stream rng(17);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> b(3);
    std::vector<double> mu(3);
    for (std::size_t j = 0; j < 3; ++j) {
      b[j] = rng.uniform();
      mu[j] = 0.05 + 0.95 * rng.uniform();
    }
    const std::vector<std::size_t> ads = {0, 1};
    const auto r = affine_maximizer_residual(b, mu, ads, 1000, 100 + i);
    worst = std::max({worst, r.gradient_residual, r.critical_residual, r.solve_residual});
    CHECK(r.fd_gradient_residual <= 1e-6);
    CHECK(r.grid_violations == 0);
    CHECK(r.min_objective_gap > 0.0);
  }
  CHECK(worst <= 1e-9);

  // p* is the exploitation-round click vector of ALL
  const auto inst = make_instance(2, 2, {{0, 0.7, 0.6}, {1, 0.4, 0.9}});
  const auto closed = all_closed_form_round_clicks(b1, inst);
  CHECK(scalar.p_star(0) == doctest::Approx(closed.exploitation[0]).epsilon(1e-15));
}

TEST_CASE("homogeneity of welfare in the CTRs") {
  const auto inst = make_instance(2, 3, {{0, 0.9, 0.8}, {1, 0.5, 0.6}});
  const std::vector<double> z = {0.1, 0.5, 0.9, 1.0};
  const std::vector<double> bids = inst.values();
  const double rand = homogeneity_probe(enumerated_welfare(rand_rule(), bids, inst.raw()), inst.ctrs(), z);
  CHECK(rand <= 1e-14);
  const double fixed =
      homogeneity_probe(fixed_distribution_welfare({0.3, 0.7}, bids, 3), inst.ctrs(), z);
  CHECK(fixed <= 1e-15);
  const double all = homogeneity_probe(enumerated_welfare(all_rule(), bids, inst.raw()), inst.ctrs(), z);
  CHECK(all > 1e-3);
  CHECK_THROWS(homogeneity_probe(fixed_distribution_welfare({0.3, 0.7}, bids, 3), inst.ctrs(),
                                 std::vector<double>{1.5}));
}
