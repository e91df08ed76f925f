#include "dsol/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "dsol/error.hpp"

namespace dsol {

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: n must be positive");
  QuadratureRule r{std::vector<double>(static_cast<std::size_t>(n)), std::vector<double>(static_cast<std::size_t>(n))};
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[static_cast<std::size_t>(i)] = -x;
    r.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    r.weights[static_cast<std::size_t>(i)] = w;
    r.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return r;
}

double integrate(const std::function<double(double)>& f, double a, double b, int panels, int order) {
  static thread_local int cached_order = 0;
  static thread_local QuadratureRule rule;
  if (cached_order != order) {
    rule = gauss_legendre(order);
    cached_order = order;
  }
  const double w = (b - a) / panels;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * w;
    double part = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) part += rule.weights[i] * f(lo + 0.5 * w * (rule.nodes[i] + 1.0));
    acc += 0.5 * w * part;
  }
  return acc;
}

QuadratureRule half_line_rule(int n, double scale) {
  if (n < 3) throw DomainError("half_line_rule: need at least 3 nodes");
  if (!(scale > 0.0)) throw DomainError("half_line_rule: scale must be positive");
  // u = (1 + tanh(pi/2 sinh s)) / 2 gives u / (1 - u) = exp(pi sinh s), so the
  // map is evaluated in closed form without forming 1 - u.
  const double S = 5.0;
  const double ds = 2.0 * S / (n - 1);
  QuadratureRule r;
  for (int i = 0; i < n; ++i) {
    const double s = -S + i * ds;
    const double t = scale * std::exp(std::numbers::pi * std::sinh(s));
    r.nodes.push_back(t);
    r.weights.push_back(ds * std::numbers::pi * std::cosh(s) * t);
  }
  return r;
}

}  // namespace dsol
