#include "dsol/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "dsol/parallel.hpp"
#include "dsol/quadrature.hpp"

namespace dsol {

namespace {

double phase_of(const SolitonParams& sp, double t, double x, double mu) {
  return 0.5 * sp.v * x - 0.25 * sp.v * sp.v * t + sp.omega * t + sp.theta + mu;
}

double centre_of(const SolitonParams& sp, double t, double y) { return sp.v * t + sp.x0 + y; }

// Re / Im of int f conj(g) on the grid
cplx pairing(const CVec& f, const CVec& g, double h) { return h * (f.array() * g.array().conjugate()).sum(); }

CVec centred_dx(const CVec& u, double h) {
  const Eigen::Index n = u.size();
  CVec d = CVec::Zero(n);
  for (Eigen::Index j = 1; j + 1 < n; ++j) d[j] = (u[j + 1] - u[j - 1]) / (2.0 * h);
  return d;
}

// |z|^e for z^2 = a2 with an integer fast path
double abs_power(double a2, double e) {
  const double half = 0.5 * e;
  if (half == std::floor(half) && half >= 0 && half <= 8) {
    double r = 1.0;
    for (int k = 0; k < static_cast<int>(half); ++k) r *= a2;
    return r;
  }
  return std::pow(a2, half);
}

double bump(double y) { return std::abs(y) < 1.0 ? std::exp(-1.0 / (1.0 - y * y)) : 0.0; }

constexpr int kStepNodes = 10000;

}  // namespace

std::optional<std::size_t> ProfileParams::k0() const {
  for (std::size_t k = 0; k < solitons.size(); ++k)
    if (solitons[k].v == 0.0) return k;
  return std::nullopt;
}

double ProfileParams::min_omega() const {
  double m = INFINITY;
  for (const auto& s : solitons) m = std::min(m, s.omega);
  return m;
}

void ProfileParams::validate() const {
  if (solitons.empty()) throw DomainError("profile needs at least one soliton");
  int zeros = 0;
  for (std::size_t k = 0; k < solitons.size(); ++k) {
    const SolitonParams& s = solitons[k];
    s.validate();
    if (s.p != p() || s.gamma != gamma())
      throw DomainError("all solitons of a profile must share p and gamma");
    if (k > 0 && !(s.v > solitons[k - 1].v)) throw DomainError("soliton velocities must be strictly increasing");
    zeros += s.v == 0.0;
  }
  if (zeros > 1) throw DomainError("at most one soliton may rest");
}

GridFunction soliton_component(const SolitonParams& sp, double t, double y, double mu, const Grid& grid) {
  const double c = centre_of(sp, t, y);
  return GridFunction::sample(grid, [&](double x) { return eval_Q(sp, x - c) * std::polar(1.0, phase_of(sp, t, x, mu)); });
}

GridFunction soliton_derivative_component(const SolitonParams& sp, double t, double y, double mu, const Grid& grid) {
  const double c = centre_of(sp, t, y);
  return GridFunction::sample(grid, [&](double x) { return eval_dQdx(sp, x - c) * std::polar(1.0, phase_of(sp, t, x, mu)); });
}

GridFunction build_modulated_profile(const ProfileParams& params, double t, const Modulation& mod, const Grid& grid) {
  GridFunction r(grid);
  for (std::size_t k = 0; k < params.size(); ++k) r += soliton_component(params.solitons[k], t, mod.y[k], mod.mu[k], grid);
  return r;
}

GridFunction build_profile(const ProfileParams& params, double t, const Grid& grid) {
  params.validate();
  return build_modulated_profile(params, t, Modulation::zero(params.size()), grid);
}

cplx SolitonModes::eval(const GridFunction& table, double X) const {
  const double h = grid.h();
  const double s = (X + grid.half_length()) / h;
  const long n = static_cast<long>(grid.n_points());
  long i = static_cast<long>(std::floor(s));
  double f = s - static_cast<double>(i);
  // snap to a node when the argument lands on one up to round-off
  if (f < 1e-9) f = 0.0;
  if (f > 1.0 - 1e-9) {
    f = 0.0;
    ++i;
  }
  if (i < 0 || i >= n) return 0.0;
  if (f == 0.0) return table.values[i];
  if (i < 1 || i + 2 >= n) return 0.0;
  const double w0 = -f * (f - 1) * (f - 2) / 6, w1 = (f + 1) * (f - 1) * (f - 2) / 2;
  const double w2 = -(f + 1) * f * (f - 2) / 2, w3 = (f + 1) * f * (f - 1) / 6;
  return w0 * table.values[i - 1] + w1 * table.values[i] + w2 * table.values[i + 1] + w3 * table.values[i + 2];
}

SolitonModes build_modes(const SolitonParams& sp, double h, double ref_half_length) {
  SolitonParams rest = sp;
  rest.gamma = sp.profile_gamma();
  rest.v = 0.0;
  rest.x0 = 0.0;
  rest.theta = 0.0;
  const double R = ref_half_length > 0 ? ref_half_length : 40.0 / std::sqrt(sp.omega);
  const long half = static_cast<long>(std::ceil(R / h));
  const Grid g(static_cast<double>(half) * h, static_cast<std::size_t>(2 * half + 1));
  const LinearizedOps ops = build_linearized(rest, g);
  return {compute_spectrum(ops), g};
}

std::vector<SolitonModes> build_modes(const ProfileParams& params, double h) {
  params.validate();
  std::vector<std::function<SolitonModes()>> jobs;
  for (const auto& s : params.solitons) jobs.emplace_back([s, h] { return build_modes(s, h); });
  return run_parallel(jobs);
}

GridFunction modulated_mode(const SolitonModes& m, ModeKind kind, const SolitonParams& sp, double t, double y,
                            double mu, const Grid& grid) {
  const GridFunction* table = nullptr;
  switch (kind) {
    case ModeKind::Yplus: table = &m.spec.Yplus; break;
    case ModeKind::Yminus: table = &m.spec.Yminus; break;
    case ModeKind::Zplus: table = &m.spec.Zplus; break;
    case ModeKind::Zminus: table = &m.spec.Zminus; break;
  }
  if ((kind == ModeKind::Zplus || kind == ModeKind::Zminus) && !m.spec.has_odd_mode())
    throw DomainError("modulated_mode: soliton has no odd unstable mode");
  const double c = centre_of(sp, t, y);
  return GridFunction::sample(grid, [&](double x) { return m.eval(*table, x - c) * std::polar(1.0, phase_of(sp, t, x, mu)); });
}

std::vector<double> orthogonality_residuals(const GridFunction& w, const ProfileParams& params, double t,
                                            const Modulation& mod) {
  const auto k0 = params.k0();
  const double h = w.grid.h();
  std::vector<double> r1, r2;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const SolitonParams& sp = params.solitons[k];
    if (k0 != k)
      r1.push_back(pairing(soliton_derivative_component(sp, t, mod.y[k], mod.mu[k], w.grid).values, w.values, h).real());
    r2.push_back(pairing(soliton_component(sp, t, mod.y[k], mod.mu[k], w.grid).values, w.values, h).imag());
  }
  r1.insert(r1.end(), r2.begin(), r2.end());
  return r1;
}

ModulationState decompose(const GridFunction& u, const ProfileParams& params, double t, const DecomposeOptions& opt) {
  params.validate();
  const Grid& grid = u.grid;
  const double h = grid.h();
  const std::size_t K = params.size();
  const auto k0 = params.k0();

  if (opt.check_preconditions) {
    const double L1 = opt.L1 > 0 ? opt.L1 : 10.0 / std::sqrt(params.min_omega());
    for (std::size_t k = 0; k + 1 < K; ++k) {
      const double gap = centre_of(params.solitons[k + 1], t, 0) - centre_of(params.solitons[k], t, 0);
      if (std::abs(gap) < L1) {
        std::ostringstream os;
        os << "decompose: soliton separation " << std::abs(gap) << " below L1=" << L1;
        throw DomainError(os.str());
      }
    }
    const double dist = h1_norm(u - build_profile(params, t, grid));
    if (dist > opt.eps0) {
      std::ostringstream os;
      os << "decompose: ||u - R||_H1 = " << dist << " exceeds eps0=" << opt.eps0;
      throw DomainError(os.str());
    }
  }

  // unknown layout: y_k for k != k0, then mu_k for all k
  std::vector<std::size_t> ys;
  for (std::size_t k = 0; k < K; ++k)
    if (k0 != k) ys.push_back(k);
  const std::size_t ny = ys.size(), N = ny + K;

  Modulation mod = Modulation::zero(K);
  ModulationState st(grid);
  st.t = t;
  std::vector<GridFunction> R, DR, D2R;
  double res = INFINITY;
  for (int it = 0; it <= opt.max_iterations; ++it) {
    R.clear();
    DR.clear();
    D2R.clear();
    GridFunction w = u;
    for (std::size_t k = 0; k < K; ++k) {
      const SolitonParams& sp = params.solitons[k];
      const double c = centre_of(sp, t, mod.y[k]);
      GridFunction r(grid), dr(grid), d2r(grid);
      for (std::size_t j = 0; j < grid.n_points(); ++j) {
        const double x = grid.x(j);
        const ProfileJet q = eval_Q_jet(sp, x - c);
        const cplx e = std::polar(1.0, phase_of(sp, t, x, mod.mu[k]));
        r.values[j] = q.q * e;
        dr.values[j] = q.dq * e;
        d2r.values[j] = q.d2q * e;
      }
      w -= r;
      R.push_back(std::move(r));
      DR.push_back(std::move(dr));
      D2R.push_back(std::move(d2r));
    }
    Eigen::VectorXd F(N);
    for (std::size_t a = 0; a < ny; ++a) F[a] = pairing(DR[ys[a]].values, w.values, h).real();
    for (std::size_t k = 0; k < K; ++k) F[ny + k] = pairing(R[k].values, w.values, h).imag();
    res = F.cwiseAbs().maxCoeff();
    if (res <= opt.tol) {
      st.w = std::move(w);
      st.mod = mod;
      st.newton_iterations = it;
      st.residual = res;
      st.a_plus.assign(K, 0.0);
      st.a_minus.assign(K, 0.0);
      return st;
    }
    if (it == opt.max_iterations) break;

    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N, N);
    for (std::size_t a = 0; a < ny; ++a) {
      const std::size_t k = ys[a];
      for (std::size_t b = 0; b < ny; ++b) {
        const std::size_t j = ys[b];
        double v = pairing(DR[k].values, DR[j].values, h).real();
        if (j == k) v -= pairing(D2R[k].values, w.values, h).real();
        J(a, b) = v;
      }
      for (std::size_t j = 0; j < K; ++j) {
        double v = -pairing(DR[k].values, R[j].values, h).imag();
        if (j == k) v -= pairing(DR[k].values, w.values, h).imag();
        J(a, ny + j) = v;
      }
    }
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t b = 0; b < ny; ++b) {
        const std::size_t j = ys[b];
        double v = pairing(R[k].values, DR[j].values, h).imag();
        if (j == k) v -= pairing(DR[k].values, w.values, h).imag();
        J(ny + k, b) = v;
      }
      for (std::size_t j = 0; j < K; ++j) {
        double v = pairing(R[k].values, R[j].values, h).real();
        if (j == k) v += pairing(R[k].values, w.values, h).real();
        J(ny + k, ny + j) = v;
      }
    }
    const Eigen::VectorXd d = J.partialPivLu().solve(F);
    if (!d.allFinite()) throw ConvergenceError("decompose: singular Jacobian", it, res);
    for (std::size_t a = 0; a < ny; ++a) mod.y[ys[a]] -= d[a];
    for (std::size_t k = 0; k < K; ++k) mod.mu[k] -= d[ny + k];
  }
  throw ConvergenceError("decompose: Newton did not converge", opt.max_iterations, res);
}

GridFunction recompose(const ModulationState& s, const ProfileParams& params) {
  return build_modulated_profile(params, s.t, s.mod, s.w.grid) + s.w;
}

void unstable_coords(ModulationState& s, const ProfileParams& params, const std::vector<SolitonModes>& modes) {
  if (modes.size() != params.size()) throw DomainError("unstable_coords: one mode table per soliton expected");
  const std::size_t K = params.size();
  const double h = s.w.grid.h();
  s.a_plus.assign(K, 0.0);
  s.a_minus.assign(K, 0.0);
  auto coord = [&](std::size_t k, ModeKind kind) {
    const GridFunction m = modulated_mode(modes[k], kind, params.solitons[k], s.t, s.mod.y[k], s.mod.mu[k], s.w.grid);
    return pairing(m.values, s.w.values, h).imag();
  };
  for (std::size_t k = 0; k < K; ++k) {
    s.a_plus[k] = coord(k, ModeKind::Yplus);
    s.a_minus[k] = coord(k, ModeKind::Yminus);
  }
  s.b_plus.reset();
  s.b_minus.reset();
  const auto k0 = params.k0();
  if (k0 && modes[*k0].spec.has_odd_mode()) {
    s.b_plus = coord(*k0, ModeKind::Zplus);
    s.b_minus = coord(*k0, ModeKind::Zminus);
  }
}

double decay_rate_c0(const ProfileParams& params, const std::vector<SolitonModes>& modes) {
  if (modes.size() != params.size()) throw DomainError("decay_rate_c0: one mode table per soliton expected");
  double m = INFINITY;
  for (std::size_t k = 0; k < params.size(); ++k) {
    m = std::min(m, std::sqrt(params.solitons[k].omega));
    m = std::min(m, std::sqrt(modes[k].spec.frak_y));
    if (k + 1 < params.size()) m = std::min(m, params.solitons[k + 1].v - params.solitons[k].v);
  }
  const auto k0 = params.k0();
  if (k0 && modes[*k0].spec.frak_z) m = std::min(m, std::sqrt(*modes[*k0].spec.frak_z));
  const double r = m / 10.0;
  return r * r;
}

StepFunction::StepFunction() : value_(kStepNodes + 1), slope_(kStepNodes + 1) {
  const double dx = 2.0 / kStepNodes;
  const QuadratureRule rule = gauss_legendre(12);
  std::vector<double> cum(kStepNodes + 1, 0.0);
  for (int i = 0; i < kStepNodes; ++i) {
    const double a = -1.0 + i * dx;
    double s = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) s += rule.weights[q] * bump(a + 0.5 * dx * (rule.nodes[q] + 1.0));
    cum[i + 1] = cum[i] + 0.5 * dx * s;
  }
  cprime_ = 1.0 / cum.back();
  for (int i = 0; i <= kStepNodes; ++i) {
    value_[i] = cum[i] * cprime_;
    slope_[i] = cprime_ * bump(-1.0 + i * dx);
  }
  // Fritsch-Carlson limiter keeps the Hermite interpolant monotone
  for (int i = 0; i < kStepNodes; ++i) {
    const double delta = (value_[i + 1] - value_[i]) / dx;
    if (delta <= 0.0) {
      slope_[i] = slope_[i + 1] = 0.0;
      continue;
    }
    const double a = slope_[i] / delta, b = slope_[i + 1] / delta;
    const double r = a * a + b * b;
    if (r > 9.0) {
      const double tau = 3.0 / std::sqrt(r);
      slope_[i] = tau * a * delta;
      slope_[i + 1] = tau * b * delta;
    }
  }
}

double StepFunction::operator()(double x) const {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double dx = 2.0 / kStepNodes;
  const double s = (x + 1.0) / dx;
  const int i = std::min(static_cast<int>(s), kStepNodes - 1);
  const double u = s - i;
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
  return h00 * value_[i] + h10 * dx * slope_[i] + h01 * value_[i + 1] + h11 * dx * slope_[i + 1];
}

double StepFunction::derivative(double x) const { return cprime_ * bump(x); }

double StepFunction::second_derivative(double x) const {
  if (std::abs(x) >= 1.0) return 0.0;
  const double d = 1.0 - x * x;
  return cprime_ * bump(x) * (-2.0 * x / (d * d));
}

const StepFunction& step_function() {
  static const StepFunction s;
  return s;
}

CutoffPartition CutoffPartition::make(const ProfileParams& params, double L) {
  params.validate();
  CutoffPartition part;
  double gap = INFINITY;
  for (std::size_t k = 1; k < params.size(); ++k) {
    part.sigmas.push_back(0.5 * (params.solitons[k - 1].v + params.solitons[k].v));
    gap = std::min(gap, params.solitons[k].v - params.solitons[k - 1].v);
  }
  part.L = L > 0 ? L : (std::isfinite(gap) ? 20.0 / gap : 1.0);
  return part;
}

double CutoffPartition::psi(std::size_t k, double t, double x) const {
  const StepFunction& S = step_function();
  const std::size_t K = size();
  if (k >= K) throw DomainError("CutoffPartition::psi: index out of range");
  if (K == 1) return 1.0;
  auto edge = [&](std::size_t i) { return S((x - sigmas[i] * t) / L); };  // sigmas[i] = sigma_{i+2}
  if (k == 0) return 1.0 - edge(0);
  if (k == K - 1) return edge(K - 2);
  return edge(k - 1) - edge(k);
}

double CutoffPartition::psi_dx(std::size_t k, double t, double x) const {
  const StepFunction& S = step_function();
  const std::size_t K = size();
  if (k >= K) throw DomainError("CutoffPartition::psi_dx: index out of range");
  if (K == 1) return 0.0;
  auto edge = [&](std::size_t i) { return S.derivative((x - sigmas[i] * t) / L) / L; };
  if (k == 0) return -edge(0);
  if (k == K - 1) return edge(K - 2);
  return edge(k - 1) - edge(k);
}

LocalizedFunctionals localized_functionals(const GridFunction& u, const CutoffPartition& part, double t) {
  const Grid& g = u.grid;
  const double h = g.h();
  const CVec ux = centred_dx(u.values, h);
  LocalizedFunctionals out;
  out.M.assign(part.size(), 0.0);
  out.P.assign(part.size(), 0.0);
  // the last weight is 1 minus the others so that the masses add up exactly
  for (std::size_t j = 0; j < g.n_points(); ++j) {
    const double x = g.x(j);
    const double a2 = std::norm(u.values[j]);
    const double flux = (std::conj(u.values[j]) * ux[j]).imag();
    double rest = 1.0;
    for (std::size_t k = 0; k + 1 < part.size(); ++k) {
      const double w = part.psi(k, t, x);
      rest -= w;
      out.M[k] += w * a2;
      out.P[k] += w * flux;
    }
    out.M.back() += rest * a2;
    out.P.back() += rest * flux;
  }
  for (auto& m : out.M) m *= h;
  for (auto& p : out.P) p *= h;
  return out;
}

double boosted_energy(const GridFunction& u, const ProfileParams& params, const CutoffPartition& part, double t) {
  if (part.size() != params.size()) throw DomainError("boosted_energy: partition size differs from soliton count");
  const Conserved c = conserved_functionals(u, params.gamma(), params.p());
  const LocalizedFunctionals lf = localized_functionals(u, part, t);
  double g = c.E_gamma;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const SolitonParams& s = params.solitons[k];
    g += 0.5 * (s.omega + 0.25 * s.v * s.v) * lf.M[k] - 0.5 * s.v * lf.P[k];
  }
  return g;
}

double h_gamma_form(const GridFunction& w, const ProfileParams& params, const Modulation& mod,
                    const CutoffPartition& part, double t) {
  if (part.size() != params.size()) throw DomainError("h_gamma_form: partition size differs from soliton count");
  const Grid& g = w.grid;
  const double h = g.h();
  const double p = params.p();
  double form = delta_quadratic_form(w, w, params.gamma());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const GridFunction r = soliton_component(params.solitons[k], t, mod.y[k], mod.mu[k], g);
    double pot = 0.0;
    for (std::size_t j = 0; j < g.n_points(); ++j) {
      const double a2 = std::norm(r.values[j]);
      if (a2 == 0.0) continue;
      const double re = (std::conj(r.values[j]) * w.values[j]).real();
      pot += abs_power(a2, p - 1.0) * std::norm(w.values[j]) + (p - 1.0) * abs_power(a2, p - 3.0) * re * re;
    }
    form -= h * pot;
  }
  const LocalizedFunctionals lf = localized_functionals(w, part, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const SolitonParams& s = params.solitons[k];
    form += (s.omega + 0.25 * s.v * s.v) * lf.M[k] - s.v * lf.P[k];
  }
  return form;
}

}  // namespace dsol
