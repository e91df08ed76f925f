#include "dsol/frac_sobolev.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "dsol/parallel.hpp"
#include "dsol/quadrature.hpp"

namespace dsol {

void FracParams::validate() const {
  if (!(s > 0.0 && s < 1.5)) throw DomainError("FracParams: s must lie in (0, 3/2)");
  if (gamma == 0.0 || !std::isfinite(gamma)) throw DomainError("FracParams: gamma must be nonzero");
  if (gamma < 0.0 && !(lambda > 0.0)) throw DomainError("FracParams: lambda must be positive for gamma < 0");
  if (gamma > 0.0 && !(lambda > 0.25 * gamma * gamma))
    throw DomainError("FracParams: lambda must exceed gamma^2/4 for gamma > 0");
  if (quad_nodes < 5) throw DomainError("FracParams: quad_nodes must be at least 5");
  if (!(tol > 0.0)) throw DomainError("FracParams: tol must be positive");
}

double default_lambda(double gamma) { return gamma > 0.0 ? 0.25 * gamma * gamma + 1.0 : 1.0; }

FracParams frac_params(double s, double gamma, int quad_nodes) {
  FracParams p;
  p.s = s;
  p.gamma = gamma;
  p.lambda = default_lambda(gamma);
  p.quad_nodes = quad_nodes;
  p.validate();
  return p;
}

double green_function(double k, double x) {
  if (!(k > 0.0)) throw DomainError("green_function: argument must be positive");
  return std::exp(-k * std::abs(x)) / (2.0 * k);
}

GridFunction krein_resolvent(const GridFunction& f, double mu, double gamma) {
  if (!(mu > 0.0)) throw DomainError("krein_resolvent: mu must be positive");
  const double k = std::sqrt(mu);
  if (gamma >= 2.0 * k) throw DomainError("krein_resolvent: mu at or below the bound state");
  const Grid& g = f.grid;
  GridFunction G = GridFunction::sample_real(g, [&](double x) { return green_function(k, x); });
  cplx kappa = 0.0;
  for (Eigen::Index j = 0; j < f.values.size(); ++j) kappa += f.values[j] * G.values[j].real();
  kappa *= g.h();
  GridFunction u = apply_multiplier(f, [&](double xi) { return 1.0 / (xi * xi + mu); });
  u.values += (2.0 * k * gamma / (2.0 * k - gamma)) * kappa * G.values;
  return u;
}

namespace {

struct SpectralOps {
  RVec xi2;
  double L;

  explicit SpectralOps(const Grid& g) : xi2(frequencies(g).array().square()), L(static_cast<double>(g.n_points() - 1) * g.h()) {}

  // grid kernel g_mu has coefficients 1/(xi^2 + mu); g0 = g_mu(0)
  double g0(double mu) const { return (1.0 / (xi2.array() + mu)).sum() / L; }
  cplx pair(const CVec& a, double mu) const { return (a.array() / (xi2.array() + mu)).sum() / L; }
  double norm(const CVec& a) const { return std::sqrt(a.squaredNorm() / L); }
};

// sign * sin(pi s/2)/pi * int_0^inf t^power beta(mu) <src, g_mu> g_mu dt,
// beta(mu) = gamma / (1 - gamma g_mu(0)), as Fourier coefficients.
CVec krein_integral(const SpectralOps& ops, const CVec& src, const FracParams& p, double power, double sign,
                    int nodes) {
  const QuadratureRule rule = half_line_rule(nodes, p.lambda);
  CVec acc = CVec::Zero(src.size());
  if (src.cwiseAbs().maxCoeff() == 0.0) return acc;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double t = rule.nodes[i];
    const double mu = p.lambda + t;
    const double beta = p.gamma / (1.0 - p.gamma * ops.g0(mu));
    const cplx scalar = rule.weights[i] * std::pow(t, power) * beta * ops.pair(src, mu);
    if (scalar == 0.0) continue;
    acc.array() += scalar / (ops.xi2.array() + mu);
  }
  return acc * (sign * std::sin(0.5 * std::numbers::pi * p.s) / std::numbers::pi);
}

CVec checked_krein_integral(const SpectralOps& ops, const CVec& src, const FracParams& p, double power, double sign,
                            double scale, const char* where) {
  const CVec fine = krein_integral(ops, src, p, power, sign, p.quad_nodes);
  const CVec coarse = krein_integral(ops, src, p, power, sign, (p.quad_nodes + 1) / 2);
  const double est = ops.norm(fine - coarse);
  const double ref = std::max(scale, ops.norm(fine));
  if (est > p.tol * ref) {
    throw ConvergenceError(std::string(where) + ": t-quadrature estimate exceeds tol", p.quad_nodes, est / ref);
  }
  return fine;
}

void check_operator(const SpectralOps& ops, const FracParams& p) {
  p.validate();
  // the grid operator must stay positive at t = 0
  if (p.gamma > 0.0 && !(1.0 - p.gamma * ops.g0(p.lambda) > 0.0))
    throw DomainError("FracParams: lambda is not above the grid bound state");
}

CVec free_power(const Spectrum& sp, const SpectralOps& ops, double s, double lambda) {
  return (sp.coeff.array() * (ops.xi2.array() + lambda).pow(0.5 * s)).matrix();
}

// Fourier coefficients of (-Delta_gamma + lambda)^{s/2} f
CVec gamma_power(const GridFunction& f, const FracParams& p, const SpectralOps& ops) {
  check_operator(ops, p);
  const Spectrum sp = forward_transform(f);
  CVec out = free_power(sp, ops, p.s, p.lambda);
  // only the even part sees the point interaction; taking it on the grid makes
  // the correction vanish exactly for odd input
  const Spectrum ev = forward_transform(even_part(f));
  out += checked_krein_integral(ops, ev.coeff, p, 0.5 * p.s, -1.0, ops.norm(out), "fractional_apply");
  return out;
}

GridFunction from_coeffs(const Grid& g, CVec c) {
  Spectrum sp{g, std::move(c), frequencies(g)};
  return inverse_transform(sp);
}

}  // namespace

GridFunction free_fractional_apply(const GridFunction& f, double s, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("free_fractional_apply: lambda must be positive");
  const SpectralOps ops(f.grid);
  return from_coeffs(f.grid, free_power(forward_transform(f), ops, s, lambda));
}

GridFunction fractional_apply(const GridFunction& f, const FracParams& p) {
  const SpectralOps ops(f.grid);
  return from_coeffs(f.grid, gamma_power(f, p, ops));
}

double hgamma_norm(const GridFunction& f, const FracParams& p) {
  const SpectralOps ops(f.grid);
  return ops.norm(gamma_power(f, p, ops));
}

ABParts abc_decomposition(const GridFunction& g, const FracParams& p) {
  const SpectralOps ops(g.grid);
  const CVec phi = gamma_power(g, p, ops);
  const CVec a = (phi.array() * (ops.xi2.array() + p.lambda).pow(-0.5 * p.s)).matrix();
  const CVec b = checked_krein_integral(ops, phi, p, -0.5 * p.s, 1.0, ops.norm(a), "abc_decomposition");
  return ABParts{from_coeffs(g.grid, a), from_coeffs(g.grid, b)};
}

GridFunction c_operator(const GridFunction& f, const FracParams& p) {
  const SpectralOps ops(f.grid);
  check_operator(ops, p);
  const CVec phi0 = free_power(forward_transform(f), ops, p.s, p.lambda);
  const Spectrum sp = forward_transform(f);
  return from_coeffs(f.grid, checked_krein_integral(ops, phi0, p, -0.5 * p.s, 1.0, ops.norm(sp.coeff), "c_operator"));
}

double c_f0(const GridFunction& f, const FracParams& p, double t) {
  if (!(t >= 0.0)) throw DomainError("c_f0: t must be nonnegative");
  const SpectralOps ops(f.grid);
  const CVec phi0 = free_power(forward_transform(f), ops, p.s, p.lambda);
  return ops.pair(phi0, p.lambda + t).real();
}

std::vector<double> log_samples(double t_min, double t_max, int count) {
  if (!(t_min > 0.0 && t_max > t_min) || count < 2) throw DomainError("log_samples: need 0 < t_min < t_max, count >= 2");
  std::vector<double> t;
  for (int i = 0; i < count; ++i) t.push_back(t_min * std::pow(t_max / t_min, static_cast<double>(i) / (count - 1)));
  return t;
}

DecayReport c_f0_decay_check(const GridFunction& f, const FracParams& p, const std::vector<double>& t_samples) {
  p.validate();
  if (t_samples.size() < 2) throw DomainError("c_f0_decay_check: need at least two samples");
  const SpectralOps ops(f.grid);
  const CVec phi0 = free_power(forward_transform(f), ops, p.s, p.lambda);
  const double fs = hs_norm(f, p.s, p.lambda);
  DecayReport r;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (double t : t_samples) {
    if (!(t >= 0.0)) throw DomainError("c_f0_decay_check: t must be nonnegative");
    const double c = ops.pair(phi0, p.lambda + t).real();
    r.t.push_back(t);
    r.c.push_back(c);
    if (fs > 0.0) r.C = std::max(r.C, std::abs(c) * std::pow(1.0 + t, 0.75) / fs);
    if (c == 0.0) continue;
    const double x = std::log1p(t), y = std::log(std::abs(c));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) {
    // f = 0: the bound holds with any constant
    r.exponent = -std::numeric_limits<double>::infinity();
    r.pass = true;
    return r;
  }
  r.exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  r.pass = r.exponent <= -0.75 + 0.05;
  return r;
}

std::vector<TestFunction> default_battery() {
  return {
      {"gauss", [](double x) { return std::exp(-x * x); }},
      {"narrow_gauss", [](double x) { return std::exp(-4.0 * x * x); }},
      {"wide_gauss", [](double x) { return std::exp(-0.25 * x * x); }},
      {"offset_bump", [](double x) { return std::exp(-(x - 2.0) * (x - 2.0)); }},
      {"sech", [](double x) { return 1.0 / std::cosh(x); }},
      {"odd_gauss", [](double x) { return x * std::exp(-x * x); }},
      {"mixed", [](double x) { return (1.0 + 0.5 * x) * std::exp(-x * x); }},
      {"two_bumps", [](double x) { return std::exp(-(x + 1.5) * (x + 1.5)) - 0.5 * std::exp(-(x - 1.0) * (x - 1.0)); }},
  };
}

std::vector<EquivalenceRow> norm_equivalence(const std::vector<TestFunction>& battery, const Grid& grid,
                                            const std::vector<double>& s_values,
                                            const std::vector<double>& gamma_values, int quad_nodes) {
  std::vector<std::function<EquivalenceRow()>> jobs;
  for (double s : s_values)
    for (double gamma : gamma_values)
      for (const auto& tf : battery)
        jobs.push_back([=, &grid]() {
          const FracParams p = frac_params(s, gamma, quad_nodes);
          const GridFunction f = GridFunction::sample_real(grid, tf.fn);
          EquivalenceRow row{s, gamma, p.lambda, tf.id, 0.0, 0.0};
          row.ratio = hgamma_norm(f, p) / hs_norm(f, s, p.lambda);
          row.inverse_ratio = 1.0 / row.ratio;
          return row;
        });
  return run_parallel(jobs);
}

double equivalence_constant(const std::vector<EquivalenceRow>& rows) {
  double C = 0.0;
  for (const auto& r : rows) C = std::max({C, r.ratio, r.inverse_ratio});
  return C;
}

}  // namespace dsol
