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
#include <numeric>
#include <set>
#include <stdexcept>

#include "mechmab/parallel.hpp"
#include "mechmab/quadrature.hpp"
#include "mechmab/rng.hpp"
#include "mechmab/stats.hpp"

using namespace mechmab;

TEST_CASE("streams are reproducible and separated by tag and trial") {
  Stream a(7, 3, StreamTag::kRule);
  Stream b(7, 3, StreamTag::kRule);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  CHECK(stream_key(7, 3, StreamTag::kRule) != stream_key(7, 3, StreamTag::kEnvironment));
  CHECK(stream_key(7, 3, StreamTag::kRule) != stream_key(7, 4, StreamTag::kRule));
  CHECK(stream_key(7, 3, StreamTag::kRule) != stream_key(8, 3, StreamTag::kRule));

  std::set<std::uint64_t> keys;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    for (auto tag : {StreamTag::kEnvironment, StreamTag::kRule, StreamTag::kRescale, StreamTag::kSampling}) {
      keys.insert(stream_key(1, t, tag));
    }
  }
  CHECK(keys.size() == 4000);
}

TEST_CASE("uniform, bounded and Bernoulli draws") {
  Stream rng(123);
  MeanAccumulator u;
  std::vector<int> counts(7, 0);
  int heads = 0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform();
    CHECK_MESSAGE((x >= 0.0 && x < 1.0), x);
    u.add(x);
    ++counts[rng.below(7)];
    heads += rng.bernoulli(0.3) ? 1 : 0;
  }
  CHECK(std::abs(u.mean() - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  for (int c : counts) CHECK(std::abs(c / static_cast<double>(n) - 1.0 / 7.0) < 0.004);
  CHECK(std::abs(heads / static_cast<double>(n) - 0.3) < 0.004);
  CHECK(rng.bernoulli(1.0));
  CHECK_FALSE(rng.bernoulli(0.0));
  CHECK(rng.below(1) == 0);
}

TEST_CASE("Gauss-Legendre nodes and exactness") {
  const auto& two = gauss_legendre(2);
  CHECK(two.nodes[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(two.nodes[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(two.weights[0] == doctest::Approx(1.0).epsilon(1e-15));

  for (std::size_t points : {2u, 3u, 5u, 8u, 12u}) {
    const auto& rule = gauss_legendre(points);
    CHECK(std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0) == doctest::Approx(2.0).epsilon(1e-14));
    for (std::size_t deg = 0; deg < 2 * points; ++deg) {
      const double exact = 1.0 / static_cast<double>(deg + 1);  // integral of t^deg on [0, 1]
      const double got = integrate([deg](double t) { return std::pow(t, static_cast<double>(deg)); }, 0.0, 1.0,
                                   points);
      CHECK(got == doctest::Approx(exact).epsilon(1e-13));
    }
  }
  CHECK(integrate([](double t) { return std::sin(t); }, 0.0, M_PI, 8, 4) == doctest::Approx(2.0).epsilon(1e-13));
  const auto composite = composite_gauss_legendre(0.0, 2.0, 3, 5);
  CHECK(composite.nodes.size() == 15);
  CHECK(std::accumulate(composite.weights.begin(), composite.weights.end(), 0.0) ==
        doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("accumulators merge like one pass") {
  Stream rng(5);
  MeanAccumulator whole;
  MeanAccumulator left;
  MeanAccumulator right;
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform() * 10.0 - 3.0;
    whole.add(x);
    (i < 377 ? left : right).add(x);
  }
  left.merge(right);
  CHECK(left.count() == whole.count());
  CHECK(left.mean() == doctest::Approx(whole.mean()).epsilon(1e-13));
  CHECK(left.variance() == doctest::Approx(whole.variance()).epsilon(1e-12));
  MeanAccumulator empty;
  empty.merge(whole);
  CHECK(empty.mean() == whole.mean());
}

TEST_CASE("trial reduction does not depend on the worker count") {
  auto run = [](std::size_t workers) {
    return reduce_trials(
        20'000, MeanAccumulator{},
        [](MeanAccumulator& acc, std::size_t t) { acc.add(Stream(9, t, StreamTag::kSampling).uniform()); },
        [](MeanAccumulator& acc, const MeanAccumulator& other) { acc.merge(other); }, workers);
  };
  const auto one = run(1);
  const auto four = run(4);
  CHECK(one.count() == 20'000);
  CHECK(one.mean() == four.mean());
  CHECK(one.variance() == four.variance());

  const auto rows = map_trials<std::size_t>(10'000, [](std::size_t t) { return t * t; }, 3);
  for (std::size_t t = 0; t < rows.size(); ++t) CHECK(rows[t] == t * t);

  CHECK_THROWS_AS(reduce_trials(
                      10'000, 0,
                      [](int&, std::size_t t) {
                        if (t == 7777) throw std::runtime_error("boom");
                      },
                      [](int&, const int&) {}, 2),
                  std::runtime_error);
}
