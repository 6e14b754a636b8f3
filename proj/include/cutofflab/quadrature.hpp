#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "cutofflab/core.hpp"

namespace cutofflab {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw error(errc::invalid_parameters, "gauss_legendre: n must be positive");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  // Returns (P_n(x), P_n'(x)).
  auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  for (int i = 0; i < half; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Composite rule on [a, b]: `panels` equal panels, each with the base rule.
inline QuadratureRule composite(const QuadratureRule& base, double a, double b, int panels) {
  QuadratureRule out;
  const double width = (b - a) / panels;
  out.nodes.reserve(base.nodes.size() * panels);
  out.weights.reserve(base.nodes.size() * panels);
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      out.nodes.push_back(lo + 0.5 * width * (base.nodes[i] + 1.0));
      out.weights.push_back(0.5 * width * base.weights[i]);
    }
  }
  return out;
}

}  // namespace cutofflab
