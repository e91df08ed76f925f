#include "dsol/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace dsol {

namespace {

double dot(const RVec& a, const RVec& b, double h) { return h * a.dot(b); }

RVec symmetrize(const RVec& f, int sign) {
  RVec r = f.reverse();
  return 0.5 * (f + sign * r);
}

RVec project_off(const RVec& f, const RVec& q, double h) {
  return f - (dot(f, q, h) / dot(q, q, h)) * q;
}

using SpMat = Eigen::SparseMatrix<double>;

// Interior block of a tridiagonal operator (nodes 1..n-2).
SpMat interior_tridiagonal(const RVec& diag, double off) {
  const Eigen::Index m = diag.size() - 2;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(3 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    t.emplace_back(i, i, diag[i + 1]);
    if (i + 1 < m) {
      t.emplace_back(i, i + 1, off);
      t.emplace_back(i + 1, i, off);
    }
  }
  SpMat a(m, m);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

// Shifted solves with A = L- L+, the operator whose spectrum off zero is that
// of the pencil L+ x = mu (L-)^{-1} x.
class PencilSolver {
 public:
  explicit PencilSolver(const LinearizedOps& ops)
      : A_(interior_tridiagonal(ops.diag_minus, ops.off) * interior_tridiagonal(ops.diag_plus, ops.off)) {
    A_.makeCompressed();
    id_.resize(A_.rows(), A_.cols());
    id_.setIdentity();
  }

  void factor(double sigma) {
    SpMat s = A_ - sigma * id_;
    s.makeCompressed();
    lu_.compute(s);
    if (lu_.info() != Eigen::Success) throw SingularSystem("pencil factorization failed");
    sigma_ = sigma;
  }
  double sigma() const { return sigma_; }

  RVec solve(const RVec& full) const {
    const Eigen::Index m = A_.rows();
    RVec y = lu_.solve(full.segment(1, m));
    RVec out = RVec::Zero(full.size());
    out.segment(1, m) = y;
    return out;
  }

 private:
  SpMat A_, id_;
  Eigen::SparseLU<SpMat> lu_;
  double sigma_ = 0.0;
};

struct Quotient {
  double mu;
  RVec x;      // B-normalized
  RVec binv;   // (L-)^{-1} x
};

Quotient normalize(const LinearizedOps& ops, RVec x) {
  const double h = ops.grid.h();
  RVec g = lminus_inverse_on_orthogonal(ops, x);
  const double bn = dot(g, x, h);
  if (!(bn > 0.0)) throw SingularSystem("nonpositive (L-)^{-1} norm on the constraint space");
  const double s = 1.0 / std::sqrt(bn);
  x *= s;
  g *= s;
  const double mu = dot(ops.apply_plus(x), x, h);
  return {mu, std::move(x), std::move(g)};
}

RayleighMinimum constrained_minimum(const LinearizedOps& ops, RVec x, int sign, bool with_q,
                                    const EigenSolveOptions& opt, const char* label) {
  const double h = ops.grid.h();
  auto clean = [&](RVec v) {
    v = symmetrize(v, sign);
    if (with_q) v = project_off(v, ops.Q, h);
    v[0] = 0.0;
    v[v.size() - 1] = 0.0;
    return v;
  };
  const Quotient start = normalize(ops, clean(std::move(x)));
  if (!(start.mu < 0.0))
    throw ConvergenceError(std::string(label) + ": starting vector has nonnegative quotient", 0, start.mu);

  PencilSolver solver(ops);
  // A shift below mu1 converges to it; the other eigenvalues are >= 0, so a
  // nonnegative limit means the shift was too shallow.
  double shift = 3.0 * start.mu;
  double el = INFINITY;
  int total = 0;
  for (int attempt = 0; attempt < 6; ++attempt, shift *= 4.0) {
    Quotient cur = start;
    solver.factor(shift);
    bool rqi = false;
    double prev = cur.mu;
    for (int it = 1; it <= opt.max_iterations; ++it) {
      ++total;
      cur = normalize(ops, clean(solver.solve(cur.x)));
      const double change = std::abs(cur.mu - prev) / std::abs(cur.mu);
      prev = cur.mu;
      const double beta =
          with_q ? dot(ops.apply_plus(cur.x) - cur.mu * cur.binv, ops.Q, h) / dot(ops.Q, ops.Q, h) : 0.0;
      RVec r = ops.apply_plus(cur.x) - cur.mu * cur.binv - beta * ops.Q;
      el = std::sqrt(dot(r, r, h));
      if (change <= opt.tol && el <= opt.el_tol) {
        if (cur.mu < 0.0) return {cur.mu, cur.x, beta, el, total};
        break;
      }
      if (!rqi && change < 1e-3 && cur.mu < 0.0) rqi = true;
      if (rqi && std::abs(cur.mu - solver.sigma()) > 1e-14 * std::abs(cur.mu)) {
        try {
          solver.factor(cur.mu);
        } catch (const SingularSystem&) {
          // shift already equal to an eigenvalue to working precision
        }
      }
    }
  }
  throw ConvergenceError(std::string(label) + ": inverse iteration did not reach a negative eigenvalue", total, el);
}

// Minimizer of <L+ x, x> on Q^perp: x = (L+ - lambda)^{-1} Q with lambda the
// root of <(L+ - lambda)^{-1} Q, Q> in (lambda0, 0). Q is even, so the odd
// eigenvalue lambda1 is not a pole.
RVec constrained_plus_minimizer(const LinearizedOps& ops, const LambdaPair& lp) {
  const double h = ops.grid.h();
  auto resolvent = [&](double lambda) {
    TridiagonalLU<double> lu(ops.diag_plus.array() - lambda, ops.off);
    RVec y = ops.Q;
    lu.solve(y);
    return y;
  };
  auto f = [&](double lambda) { return dot(resolvent(lambda), ops.Q, h); };
  double lo = lp.lambda0, hi = -1e-10 * std::abs(lp.lambda0);
  if (!(hi > lo) || !(f(hi) > 0.0)) return lp.g0.real();
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::abs(lp.lambda0); ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? hi : lo) = mid;
  }
  return resolvent(0.5 * (lo + hi));
}

double kth_eigenvalue(const RVec& diag, double off, int k) {
  const Eigen::Index n = diag.size();
  double lo = INFINITY, hi = -INFINITY;
  for (Eigen::Index j = 1; j + 1 < n; ++j) {
    lo = std::min(lo, diag[j] - 2.0 * std::abs(off));
    hi = std::max(hi, diag[j] + 2.0 * std::abs(off));
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count_eigenvalues_below(diag, off, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

RVec eigenvector_near(const RVec& diag, double off, double lambda, int sign, const Grid& grid) {
  const Eigen::Index n = diag.size();
  const double shift = lambda - 1e-9 * std::max(1.0, std::abs(lambda));
  TridiagonalLU<double> lu(diag.array() - shift, off);
  RVec v(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x = grid.x(static_cast<std::size_t>(j));
    v[j] = (sign > 0 ? 1.0 : x) * std::exp(-0.1 * x * x);
  }
  for (int it = 0; it < 4; ++it) {
    lu.solve(v);
    v /= std::sqrt(dot(v, v, grid.h()));
  }
  // fix the sign so the mode is positive to the right of the origin
  const Eigen::Index c = static_cast<Eigen::Index>(grid.center());
  double s = 0.0;
  for (Eigen::Index j = c; j < n; ++j) s += v[j];
  if (s < 0) v = -v;
  return v;
}

// Uniform double in [0, 1) from the raw 64-bit stream; portable across libstdc++/libc++.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

GridFunction LinearizedOps::apply_lcal(const GridFunction& f) const {
  require_same_grid(grid, f.grid, "apply_lcal");
  const RVec a = apply_minus(f.imag());
  const RVec b = apply_plus(f.real());
  GridFunction out(grid);
  out.values.real() = a;
  out.values.imag() = -b;
  return out;
}

LinearizedOps build_linearized(const SolitonParams& params, const Grid& grid) {
  params.validate();
  if (params.v != 0.0) throw DomainError("build_linearized needs a resting soliton (v = 0)");
  LinearizedOps ops{params, grid, discrete_ground_state(params, grid), {}, {}, 0.0};
  const DeltaOperator M(grid, params.gamma);
  const RVec qp = ops.Q.array().abs().pow(params.p - 1.0);
  ops.diag_plus = M.diagonal().array() + params.omega - params.p * qp.array();
  ops.diag_minus = M.diagonal().array() + params.omega - qp.array();
  ops.off = M.off_diagonal();
  return ops;
}

RVec lminus_inverse_on_orthogonal(const LinearizedOps& ops, const RVec& f_in) {
  const Eigen::Index n = f_in.size();
  if (n != static_cast<Eigen::Index>(ops.grid.n_points()))
    throw GridMismatch("lminus_inverse_on_orthogonal: size mismatch");
  const double h = ops.grid.h();
  RVec f = project_off(f_in, ops.Q, h);
  const RVec& d = ops.diag_minus;
  const double e = ops.off;
  const Eigen::Index c = static_cast<Eigen::Index>(ops.grid.center());
  // Eliminate from both ends towards the origin; the kernel makes the
  // remaining equation at the origin singular, so g(0) is free.
  RVec p(n), r(n), q(n), s(n);
  for (Eigen::Index j = 1; j < c; ++j) {
    p[j] = d[j] - (j > 1 ? e * e / p[j - 1] : 0.0);
    r[j] = f[j] - (j > 1 ? e * r[j - 1] / p[j - 1] : 0.0);
    if (p[j] == 0.0 || !std::isfinite(p[j])) throw SingularSystem("lminus_inverse: zero pivot");
  }
  for (Eigen::Index j = n - 2; j > c; --j) {
    q[j] = d[j] - (j < n - 2 ? e * e / q[j + 1] : 0.0);
    s[j] = f[j] - (j < n - 2 ? e * s[j + 1] / q[j + 1] : 0.0);
    if (q[j] == 0.0 || !std::isfinite(q[j])) throw SingularSystem("lminus_inverse: zero pivot");
  }
  RVec g = RVec::Zero(n);
  for (Eigen::Index j = c - 1; j >= 1; --j) g[j] = (r[j] - e * g[j + 1]) / p[j];
  for (Eigen::Index j = c + 1; j <= n - 2; ++j) g[j] = (s[j] - e * g[j - 1]) / q[j];
  return project_off(g, ops.Q, h);
}

GridFunction lminus_inverse_on_orthogonal(const LinearizedOps& ops, const GridFunction& f) {
  require_same_grid(ops.grid, f.grid, "lminus_inverse_on_orthogonal");
  GridFunction out(ops.grid);
  out.values.real() = lminus_inverse_on_orthogonal(ops, RVec(f.real()));
  out.values.imag() = lminus_inverse_on_orthogonal(ops, RVec(f.imag()));
  return out;
}

int count_eigenvalues_below(const RVec& diag, double off, double x) {
  const Eigen::Index n = diag.size();
  int count = 0;
  double q = 1.0;
  for (Eigen::Index j = 1; j + 1 < n; ++j) {
    q = diag[j] - x - (j > 1 ? off * off / q : 0.0);
    if (q == 0.0) q = -1e-300;
    if (q < 0.0) ++count;
  }
  return count;
}

LambdaPair lowest_eigenpairs_plus(const LinearizedOps& ops, double threshold) {
  LambdaPair out(ops.grid);
  out.lambda0 = kth_eigenvalue(ops.diag_plus, ops.off, 0);
  out.lambda1 = kth_eigenvalue(ops.diag_plus, ops.off, 1);
  out.g0 = GridFunction(ops.grid, eigenvector_near(ops.diag_plus, ops.off, out.lambda0, +1, ops.grid));
  out.g1 = GridFunction(ops.grid, eigenvector_near(ops.diag_plus, ops.off, out.lambda1, -1, ops.grid));
  out.negative_count = count_eigenvalues_below(ops.diag_plus, ops.off, -threshold);
  return out;
}

RayleighMinimum minimize_rayleigh_even(const LinearizedOps& ops, const EigenSolveOptions& opt) {
  const LambdaPair lp = lowest_eigenpairs_plus(ops);
  return constrained_minimum(ops, constrained_plus_minimizer(ops, lp), +1, true, opt, "minimize_rayleigh_even");
}

std::optional<RayleighMinimum> minimize_rayleigh_odd(const LinearizedOps& ops, const EigenSolveOptions& opt) {
  if (ops.params.gamma == 0.0) return std::nullopt;
  const LambdaPair lp = lowest_eigenpairs_plus(ops);
  return constrained_minimum(ops, lp.g1.real(), -1, false, opt, "minimize_rayleigh_odd");
}

double eigen_residual(const LinearizedOps& ops, const GridFunction& A, double lambda) {
  GridFunction r = ops.apply_lcal(A);
  r.values -= lambda * A.values;
  return l2_norm(r) / l2_norm(A);
}

SpectralData build_eigenfunctions(const LinearizedOps& ops, const RayleighMinimum& even,
                                  const std::optional<RayleighMinimum>& odd, double tol) {
  SpectralData sd(ops.grid);
  sd.mu1 = even.mu;
  sd.beta = even.beta;
  sd.frak_y = std::sqrt(-even.mu);
  sd.xi1 = GridFunction(ops.grid, even.xi);
  const RVec y2 = sd.frak_y * lminus_inverse_on_orthogonal(ops, even.xi) - (even.beta / sd.frak_y) * ops.Q;
  sd.Yplus.values.real() = even.xi;
  sd.Yplus.values.imag() = y2;
  sd.Yminus.values.real() = even.xi;
  sd.Yminus.values.imag() = -y2;
  sd.residual_Y = std::max(eigen_residual(ops, sd.Yplus, sd.frak_y), eigen_residual(ops, sd.Yminus, -sd.frak_y));
  if (!(sd.residual_Y <= tol)) throw ConvergenceError("build_eigenfunctions: Y eigen-residual", 0, sd.residual_Y);
  if (odd) {
    sd.mu2 = odd->mu;
    sd.frak_z = std::sqrt(-odd->mu);
    sd.xi2 = GridFunction(ops.grid, odd->xi);
    const RVec z2 = *sd.frak_z * lminus_inverse_on_orthogonal(ops, odd->xi);
    sd.Zplus.values.real() = odd->xi;
    sd.Zplus.values.imag() = z2;
    sd.Zminus.values.real() = odd->xi;
    sd.Zminus.values.imag() = -z2;
    sd.residual_Z = std::max(eigen_residual(ops, sd.Zplus, *sd.frak_z), eigen_residual(ops, sd.Zminus, -*sd.frak_z));
    if (!(*sd.residual_Z <= tol)) throw ConvergenceError("build_eigenfunctions: Z eigen-residual", 0, *sd.residual_Z);
  }
  return sd;
}

SpectralData compute_spectrum(const LinearizedOps& ops, const EigenSolveOptions& opt) {
  return build_eigenfunctions(ops, minimize_rayleigh_even(ops, opt), minimize_rayleigh_odd(ops, opt));
}

double bilinear_B(const LinearizedOps& ops, const GridFunction& u, const GridFunction& w) {
  require_same_grid(ops.grid, u.grid, "bilinear_B");
  require_same_grid(ops.grid, w.grid, "bilinear_B");
  const double h = ops.grid.h();
  const double p = ops.params.p, om = ops.params.omega, g = ops.params.gamma;
  const GridFunction ur(ops.grid, u.real()), ui(ops.grid, u.imag());
  const GridFunction wr(ops.grid, w.real()), wi(ops.grid, w.imag());
  const RVec qp = ops.Q.array().abs().pow(p - 1.0);
  const RVec a = u.real(), b = w.real(), c = u.imag(), d = w.imag();
  double plus = delta_quadratic_form(ur, wr, g) + om * dot(a, b, h) - p * h * (qp.array() * a.array() * b.array()).sum();
  double minus = delta_quadratic_form(ui, wi, g) + om * dot(c, d, h) - h * (qp.array() * c.array() * d.array()).sum();
  return plus + minus;
}

std::vector<GridFunction> coercivity_directions(const LinearizedOps& ops, const SpectralData& spec) {
  const cplx I(0.0, 1.0);
  std::vector<GridFunction> dirs;
  if (ops.params.gamma == 0.0) {
    const Eigen::Index n = ops.Q.size();
    RVec dq = RVec::Zero(n);
    for (Eigen::Index j = 1; j + 1 < n; ++j) dq[j] = (ops.Q[j + 1] - ops.Q[j - 1]) / (2.0 * ops.grid.h());
    dirs.emplace_back(ops.grid, dq);
  }
  dirs.push_back(I * ops.Q_function());
  dirs.push_back(I * spec.Yplus);
  dirs.push_back(I * spec.Yminus);
  if (spec.has_odd_mode()) {
    dirs.push_back(I * spec.Zplus);
    dirs.push_back(I * spec.Zminus);
  }
  return dirs;
}

CoercivityReport coercivity_check(const LinearizedOps& ops, const SpectralData& spec, int trials,
                                  std::uint64_t seed) {
  if (trials <= 0) throw DomainError("coercivity_check needs at least one trial");
  const std::vector<GridFunction> raw = coercivity_directions(ops, spec);
  // Orthonormal basis for the removed span (Gram-Schmidt applied twice).
  std::vector<GridFunction> basis;
  for (GridFunction v : raw) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) v.values -= inner_product(v, b) * b.values;
    const double nv = l2_norm(v);
    if (nv > 1e-12) basis.push_back((1.0 / nv) * v);
  }
  auto project = [&](GridFunction f) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) f.values -= inner_product(f, b) * b.values;
    return f;
  };

  CoercivityReport rep;
  for (const auto& v : raw)
    rep.max_projection_residual = std::max(rep.max_projection_residual, l2_norm(project(v)) / l2_norm(v));

  std::mt19937_64 rng(seed);
  const double L = 1.0 / std::sqrt(ops.params.omega);
  const double R = ops.grid.half_length();
  rep.min_quotient = INFINITY;
  for (int t = 0; t < trials; ++t) {
    struct Bump {
      cplx amp;
      double centre, width, freq;
      bool cusp;
    };
    std::vector<Bump> bumps(1 + static_cast<int>(uniform01(rng) * 4.0));
    for (auto& b : bumps) {
      b.amp = cplx(normal(rng), normal(rng));
      b.centre = (uniform01(rng) < 0.3 ? 0.0 : (2.0 * uniform01(rng) - 1.0) * 5.0 * L);
      b.width = L * (0.15 + 2.5 * uniform01(rng));
      b.freq = (2.0 * uniform01(rng) - 1.0) * 4.0 / L;
      b.cusp = uniform01(rng) < 0.3;
    }
    GridFunction f = GridFunction::sample(ops.grid, [&](double x) {
      if (std::abs(x) >= R) return cplx(0.0);
      cplx s = 0.0;
      for (const auto& b : bumps) {
        const double y = (x - b.centre) / b.width;
        const double env = b.cusp ? std::exp(-std::abs(y)) * std::exp(-0.1 * y * y) : std::exp(-0.5 * y * y);
        s += b.amp * env * std::polar(1.0, b.freq * x);
      }
      return s;
    });
    f = project(f);
    const double nf = h1_norm(f);
    if (nf < 1e-12) continue;
    const double qv = bilinear_B(ops, f, f) / (nf * nf);
    ++rep.trials;
    rep.min_quotient = std::min(rep.min_quotient, qv);
  }
  if (!(rep.min_quotient > 0.0))
    throw DomainError("coercivity_check: nonpositive quotient " + std::to_string(rep.min_quotient));
  return rep;
}

Eigen::Matrix2d gram_matrix(const GridFunction& A_plus, const GridFunction& A_minus) {
  require_same_grid(A_plus.grid, A_minus.grid, "gram_matrix");
  Eigen::Matrix2d G;
  G(0, 0) = inner_product(A_plus, A_plus);
  G(0, 1) = G(1, 0) = inner_product(A_plus, A_minus);
  G(1, 1) = inner_product(A_minus, A_minus);
  return G;
}

}  // namespace dsol
