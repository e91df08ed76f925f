#include "dsol/evolution.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace dsol {

namespace {

bool all_finite(const CVec& u) {
  for (Eigen::Index j = 0; j < u.size(); ++j)
    if (!std::isfinite(u[j].real()) || !std::isfinite(u[j].imag())) return false;
  return true;
}

// |z|^{p-1} from |z|^2 with an integer fast path for odd p
double modulus_power(double abs2, double p) {
  const double e = 0.5 * (p - 1.0);
  if (e == std::floor(e) && e >= 0 && e <= 8) {
    double r = 1.0;
    for (int k = 0; k < static_cast<int>(e); ++k) r *= abs2;
    return r;
  }
  return std::pow(abs2, e);
}

// centred first difference; the boundary nodes carry zero
CVec centred_dx(const CVec& u, double h) {
  const Eigen::Index n = u.size();
  CVec d = CVec::Zero(n);
  for (Eigen::Index j = 1; j + 1 < n; ++j) d[j] = (u[j + 1] - u[j - 1]) / (2.0 * h);
  return d;
}

}  // namespace

void EvolutionConfig::validate(const Grid& grid) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("evolution dt must be positive");
  if (!(p > 1.0)) throw DomainError("evolution power p must exceed 1");
  if (record_every < 1) throw DomainError("record_every must be >= 1");
  if (enforce_stability_guard && dt > stability_factor * grid.h()) {
    std::ostringstream os;
    os << "dt=" << dt << " exceeds the guard " << stability_factor << "*h=" << stability_factor * grid.h();
    throw DomainError(os.str());
  }
}

StateSnapshot make_snapshot(double t, const GridFunction& u, const EvolutionConfig& cfg) {
  const Conserved c = conserved_functionals(u, cfg.gamma, cfg.p);
  return {t, u, c.E_gamma, c.M};
}

Stepper::Stepper(const Grid& grid, const EvolutionConfig& cfg) : grid_(grid), dt_(cfg.dt), p_(cfg.p) {
  cfg.validate(grid);
  const DeltaOperator M(grid, cfg.gamma);
  diag_ = M.diagonal();
  off_ = M.off_diagonal();
  const cplx a(0.0, 0.5 * dt_);
  CVec d = (a * diag_.cast<cplx>()).array() + 1.0;
  lu_ = TridiagonalLU<cplx>(d, a * off_);
}

void Stepper::nonlinear_half(CVec& u) const {
  const double half = 0.5 * dt_;
  for (Eigen::Index j = 0; j < u.size(); ++j) u[j] *= std::polar(1.0, half * modulus_power(std::norm(u[j]), p_));
}

void Stepper::advance(CVec& u) const {
  nonlinear_half(u);
  const cplx a(0.0, 0.5 * dt_);
  CVec rhs = u - a * apply_tridiagonal(diag_, off_, u);
  lu_.solve(rhs);
  u = std::move(rhs);
  nonlinear_half(u);
}

GridFunction step(const GridFunction& u, const EvolutionConfig& cfg) {
  if (!all_finite(u.values)) throw DomainError("step: non-finite input");
  Stepper s(u.grid, cfg);
  GridFunction out = u;
  s.advance(out.values);
  return out;
}

std::vector<StateSnapshot> evolve(const GridFunction& u0, double t0, double t1, const EvolutionConfig& cfg,
                                  const Observer& observer) {
  if (!all_finite(u0.values)) throw DomainError("evolve: non-finite initial data");
  const double span = std::abs(t1 - t0);
  const bool backward = t1 < t0;
  const long steps = span == 0.0 ? 0 : static_cast<long>(std::ceil(span / cfg.dt - 1e-9));
  EvolutionConfig c = cfg;
  if (steps > 0) c.dt = span / static_cast<double>(steps);
  cfg.validate(u0.grid);

  std::vector<StateSnapshot> out;
  out.push_back(make_snapshot(t0, u0, cfg));
  if (observer) observer(t0, u0);
  if (steps == 0) return out;

  const Stepper stepper(u0.grid, c);
  // backward in time: u(t) -> conj(u(-t)) solves the same equation
  CVec w = backward ? CVec(u0.values.conjugate()) : u0.values;
  GridFunction cur(u0.grid);
  double t_last_good = t0;
  CVec last_good = u0.values;
  for (long k = 1; k <= steps; ++k) {
    stepper.advance(w);
    const double t = k == steps ? t1 : t0 + (backward ? -1.0 : 1.0) * static_cast<double>(k) * c.dt;
    if (!all_finite(w)) {
      std::ostringstream os;
      os << "evolve: non-finite state at t=" << t;
      throw EvolutionError(os.str(), make_snapshot(t_last_good, GridFunction(u0.grid, last_good), cfg));
    }
    cur.values = backward ? CVec(w.conjugate()) : w;
    t_last_good = t;
    last_good = cur.values;
    if (observer) observer(t, cur);
    if (k % cfg.record_every == 0 || k == steps) out.push_back(make_snapshot(t, cur, cfg));
  }
  return out;
}

GridFunction evolve_to(const GridFunction& u0, double t0, double t1, const EvolutionConfig& cfg) {
  EvolutionConfig c = cfg;
  c.record_every = std::numeric_limits<int>::max();
  return evolve(u0, t0, t1, c).back().u;
}

VirialWeight VirialWeight::constant(double c) {
  return {[c](double, double) { return c; }, [](double, double) { return 0.0; },
          [](double, double) { return 0.0; }, {}};
}

VirialReport virial_diagnostics(const std::vector<StateSnapshot>& traj, const VirialWeight& f,
                                const VirialWeight& g, double p) {
  if (traj.size() < 3) throw DomainError("virial_diagnostics needs at least three snapshots");
  const Grid grid = traj.front().u.grid;
  for (const auto& s : traj) require_same_grid(grid, s.u.grid, "virial_diagnostics");
  const std::size_t n = grid.n_points();
  const double h = grid.h();

  // the momentum weight must vanish near the origin and be smooth
  double gmax = 0.0;
  for (std::size_t j = 0; j < n; ++j) gmax = std::max(gmax, std::abs(g.value(grid.x(j), traj.front().t)));
  for (const auto& s : {traj.front(), traj.back()}) {
    for (long k = -3; k <= 3; ++k) {
      const double x = k * h;
      if (std::abs(g.value(x, s.t)) > 1e-12 * std::max(gmax, 1.0) || std::abs(g.dx(x, s.t)) > 1e-10 * std::max(gmax, 1.0))
        throw DomainError("virial_diagnostics: momentum weight must vanish near the origin");
    }
    double err1 = 0.0, s1 = 0.0, err3 = 0.0, s3 = 0.0;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double x = grid.x(j);
      const double gx = g.dx(x, s.t), gxxx = g.dxxx(x, s.t);
      const double fd1 = (g.value(x + h, s.t) - g.value(x - h, s.t)) / (2 * h);
      const double fd3 = (g.dx(x + h, s.t) - 2 * gx + g.dx(x - h, s.t)) / (h * h);
      err1 = std::max(err1, std::abs(fd1 - gx));
      err3 = std::max(err3, std::abs(fd3 - gxxx));
      s1 = std::max(s1, std::abs(gx));
      s3 = std::max(s3, std::abs(gxxx));
    }
    if (err1 > 1e-2 * s1 + 1e-10 || err3 > 5e-2 * s3 + 1e-8)
      throw DomainError("virial_diagnostics: momentum weight derivatives are inconsistent");
  }

  auto mass_form = [&](const StateSnapshot& s) {
    double a = 0.0;
    for (std::size_t j = 0; j < n; ++j) a += f.value(grid.x(j), s.t) * std::norm(s.u.values[j]);
    return a * h;
  };
  auto momentum_form = [&](const StateSnapshot& s, const CVec& ux) {
    double a = 0.0;
    for (std::size_t j = 0; j < n; ++j) a += g.value(grid.x(j), s.t) * (std::conj(s.u.values[j]) * ux[j]).imag();
    return a * h;
  };

  VirialReport rep;
  std::vector<CVec> ux(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) ux[k] = centred_dx(traj[k].u.values, h);
  for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
    const StateSnapshot& s = traj[k];
    const double dt = traj[k + 1].t - traj[k - 1].t;
    const double lhs1 = (mass_form(traj[k + 1]) - mass_form(traj[k - 1])) / dt;
    const double lhs2 = (momentum_form(traj[k + 1], ux[k + 1]) - momentum_form(traj[k - 1], ux[k - 1])) / dt;
    double rhs1 = 0.0, rhs2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double x = grid.x(j);
      const cplx u = s.u.values[j];
      const double a2 = std::norm(u);
      const double flux = (std::conj(u) * ux[k][j]).imag();
      rhs1 += 2.0 * f.dx(x, s.t) * flux;
      if (f.dt) rhs1 += f.dt(x, s.t) * a2;
      rhs2 += g.dx(x, s.t) * (2.0 * std::norm(ux[k][j]) - (p - 1.0) / (p + 1.0) * std::pow(a2, 0.5 * (p + 1.0))) -
              0.5 * g.dxxx(x, s.t) * a2;
      if (g.dt) rhs2 += g.dt(x, s.t) * flux;
    }
    rep.mass_defect = std::max(rep.mass_defect, std::abs(lhs1 - h * rhs1));
    rep.momentum_defect = std::max(rep.momentum_defect, std::abs(lhs2 - h * rhs2));
    ++rep.samples;
  }
  return rep;
}

}  // namespace dsol
