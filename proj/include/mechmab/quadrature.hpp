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
#include <functional>
#include <vector>

namespace mechmab {

/// Gauss-Legendre rule on [-1, 1] (Golub-Welsch).
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GaussLegendre& gauss_legendre(std::size_t points);

/// Composite rule on [a, b]: `panels` equal sub-intervals, `points` nodes each.
/// Exact for polynomials of degree < 2 * points.
struct CompositeRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

CompositeRule composite_gauss_legendre(double a, double b, std::size_t points, std::size_t panels = 1);

double integrate(const std::function<double(double)>& f, double a, double b, std::size_t points = 8,
                 std::size_t panels = 1);

}  // namespace mechmab
