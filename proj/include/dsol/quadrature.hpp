#pragma once

#include <functional>
#include <vector>

namespace dsol {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

// Composite Gauss-Legendre on [a, b] with equal panels.
double integrate(const std::function<double(double)>& f, double a, double b, int panels = 64, int order = 16);

// Nodes/weights for int_0^inf g(t) dt through t = scale * u / (1 - u) with
// tanh-sinh nodes in u. Algebraic behaviour at both ends of the half line is
// integrated at double-exponential rate. The weights include the Jacobian.
QuadratureRule half_line_rule(int n, double scale);

}  // namespace dsol
