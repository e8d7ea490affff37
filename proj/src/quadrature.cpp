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

#include "mechmab/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace mechmab {

namespace {

GaussLegendre golub_welsch(std::size_t n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    const double beta = kk / std::sqrt(4.0 * kk * kk - 1.0);
    jacobi(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = beta;
    jacobi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussLegendre rule;
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    rule.nodes.push_back(solver.eigenvalues()(idx));
    const double v0 = solver.eigenvectors()(0, idx);
    rule.weights.push_back(2.0 * v0 * v0);
  }
  return rule;
}

}  // namespace

const GaussLegendre& gauss_legendre(std::size_t points) {
  if (points < 1) throw std::invalid_argument("quadrature needs at least one node");
  static std::mutex mutex;
  static std::map<std::size_t, GaussLegendre> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(points);
  if (it == cache.end()) it = cache.emplace(points, golub_welsch(points)).first;
  return it->second;
}

CompositeRule composite_gauss_legendre(double a, double b, std::size_t points, std::size_t panels) {
  if (panels < 1) throw std::invalid_argument("composite rule needs at least one panel");
  const GaussLegendre& base = gauss_legendre(points);
  CompositeRule out;
  const double width = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + width * static_cast<double>(p);
    const double mid = lo + 0.5 * width;
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      out.nodes.push_back(mid + 0.5 * width * base.nodes[i]);
      out.weights.push_back(0.5 * width * base.weights[i]);
    }
  }
  return out;
}

double integrate(const std::function<double(double)>& f, double a, double b, std::size_t points,
                 std::size_t panels) {
  const CompositeRule rule = composite_gauss_legendre(a, b, points, panels);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(rule.nodes[i]);
  return sum;
}

}  // namespace mechmab
