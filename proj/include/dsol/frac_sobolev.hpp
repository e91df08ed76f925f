#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dsol/fourier.hpp"
#include "dsol/grid.hpp"

namespace dsol {

// Fractional powers of A = -Delta_gamma + lambda, with -Delta_gamma = -d^2/dx^2 - gamma delta.
// On the grid the operator is the Fourier Laplacian minus (gamma/h) at the
// origin node, so the rank-one resolvent formula holds exactly and only the
// t-integral is approximated.
struct FracParams {
  double s = 1.0;
  double lambda = 1.0;
  double gamma = -1.0;
  int quad_nodes = 201;
  double tol = 1e-8;  // relative t-quadrature error estimate allowed

  // 0 < s < 3/2, gamma != 0, lambda > 0 (gamma < 0) or lambda > gamma^2/4 (gamma > 0)
  void validate() const;
};

// 1 for gamma < 0, gamma^2/4 + 1 for gamma > 0.
double default_lambda(double gamma);
FracParams frac_params(double s, double gamma, int quad_nodes = 201);

// e^{-k|x|} / (2k): the free resolvent kernel at spectral parameter -k^2.
double green_function(double k, double x);

// Free resolvent (Fourier multiplier 1/(xi^2 + mu)) plus the rank-one
// correction built from the sampled kernel.
GridFunction krein_resolvent(const GridFunction& f, double mu, double gamma);

// (-Delta_0 + lambda)^{s/2} f; s may be negative.
GridFunction free_fractional_apply(const GridFunction& f, double s, double lambda);

// (-Delta_gamma + lambda)^{s/2} f. Throws ConvergenceError when the nested
// quadrature estimate exceeds tol.
GridFunction fractional_apply(const GridFunction& f, const FracParams& p);
double hgamma_norm(const GridFunction& f, const FracParams& p);

struct ABParts {
  GridFunction A, B;
};
// A = (-Delta_0+lambda)^{-s/2} (-Delta_gamma+lambda)^{s/2} g and the B integral
// built from c_g(t) = <(-Delta_gamma+lambda)^{s/2} g, G_t>.
ABParts abc_decomposition(const GridFunction& g, const FracParams& p);
// Same integral with c^0_f(t) = <(-Delta_0+lambda)^{s/2} f, G_t>; C(A(g)) = B(g).
GridFunction c_operator(const GridFunction& f, const FracParams& p);

// <G_t, (-Delta_0+lambda)^{s/2} f> with G_t the grid kernel at mu = lambda + t.
double c_f0(const GridFunction& f, const FracParams& p, double t);

struct DecayReport {
  std::vector<double> t, c;
  double exponent = 0.0;  // least-squares slope of log|c| against log(1+t)
  double C = 0.0;         // max |c| (1+t)^{3/4} / ||f||_{H^s}
  bool pass = false;      // exponent <= -3/4 + 0.05
};
DecayReport c_f0_decay_check(const GridFunction& f, const FracParams& p, const std::vector<double>& t_samples);
std::vector<double> log_samples(double t_min, double t_max, int count);

struct TestFunction {
  std::string id;
  std::function<double(double)> fn;
};
// Gaussians, an offset bump, odd and mixed-parity profiles.
std::vector<TestFunction> default_battery();

struct EquivalenceRow {
  double s = 0.0, gamma = 0.0, lambda = 0.0;
  std::string id;
  double ratio = 0.0;          // ||f||_{H^s_gamma} / ||f||_{H^s}
  double inverse_ratio = 0.0;  // 1 / ratio
};
std::vector<EquivalenceRow> norm_equivalence(const std::vector<TestFunction>& battery, const Grid& grid,
                                            const std::vector<double>& s_values,
                                            const std::vector<double>& gamma_values, int quad_nodes = 201);
// max over rows of max(ratio, inverse_ratio)
double equivalence_constant(const std::vector<EquivalenceRow>& rows);

}  // namespace dsol
