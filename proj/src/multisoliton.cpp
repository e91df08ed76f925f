#include "dsol/multisoliton.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "dsol/parallel.hpp"

namespace dsol {

namespace {

double centre_at(const SolitonParams& s, double t) { return s.v * t + s.x0; }

double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool has_odd(const ProfileParams& params, const std::vector<SolitonModes>& modes) {
  const auto k0 = params.k0();
  return k0 && modes[*k0].spec.has_odd_mode();
}

// The modes in flat-coefficient order: Y_k^+, Y_k^- for each k, then Z^+, Z^-.
std::vector<GridFunction> mode_list(const ProfileParams& params, const std::vector<SolitonModes>& modes,
                                    const Modulation& mod, double t, const Grid& grid) {
  std::vector<GridFunction> out;
  for (std::size_t k = 0; k < params.size(); ++k)
    for (ModeKind kind : {ModeKind::Yplus, ModeKind::Yminus})
      out.push_back(modulated_mode(modes[k], kind, params.solitons[k], t, mod.y[k], mod.mu[k], grid));
  if (has_odd(params, modes)) {
    const std::size_t k0 = *params.k0();
    for (ModeKind kind : {ModeKind::Zplus, ModeKind::Zminus})
      out.push_back(modulated_mode(modes[k0], kind, params.solitons[k0], t, mod.y[k0], mod.mu[k0], grid));
  }
  return out;
}

// (l^+, l^-) stacked
Eigen::VectorXd stacked(const UnstableVector& l) {
  Eigen::VectorXd v(l.plus.size() + l.minus.size());
  for (std::size_t i = 0; i < l.plus.size(); ++i) v[i] = l.plus[i];
  for (std::size_t i = 0; i < l.minus.size(); ++i) v[l.plus.size() + i] = l.minus[i];
  return v;
}

// flat-coefficient index of the mode that l-component i pairs with
std::size_t pair_index(std::size_t i, std::size_t m) {
  // l^+ component j <-> Y_j^+ (flat 2j); l^- component j <-> Y_j^- (flat 2j + 1)
  return i < m ? 2 * i : 2 * (i - m) + 1;
}

}  // namespace

FinalDataCoeffs FinalDataCoeffs::zero(std::size_t K, bool with_beta) {
  FinalDataCoeffs c;
  c.alpha.assign(K, {0.0, 0.0});
  if (with_beta) c.beta = std::array<double, 2>{0.0, 0.0};
  return c;
}

double FinalDataCoeffs::norm() const { return flat().norm(); }

Eigen::VectorXd FinalDataCoeffs::flat() const {
  Eigen::VectorXd v(dim());
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    v[2 * k] = alpha[k][0];
    v[2 * k + 1] = alpha[k][1];
  }
  if (beta) {
    v[2 * alpha.size()] = (*beta)[0];
    v[2 * alpha.size() + 1] = (*beta)[1];
  }
  return v;
}

FinalDataCoeffs FinalDataCoeffs::from_flat(const Eigen::VectorXd& v, std::size_t K, bool with_beta) {
  FinalDataCoeffs c = zero(K, with_beta);
  if (static_cast<std::size_t>(v.size()) != c.dim()) throw DomainError("FinalDataCoeffs::from_flat: size mismatch");
  for (std::size_t k = 0; k < K; ++k) c.alpha[k] = {v[2 * k], v[2 * k + 1]};
  if (with_beta) c.beta = std::array<double, 2>{v[2 * K], v[2 * K + 1]};
  return c;
}

double UnstableVector::norm_plus() const { return vec_norm(plus); }
double UnstableVector::norm_minus() const { return vec_norm(minus); }

UnstableVector unstable_vector(const ModulationState& s) {
  UnstableVector l{s.a_plus, s.a_minus};
  if (s.b_plus) {
    l.plus.push_back(*s.b_plus);
    l.minus.push_back(*s.b_minus);
  }
  return l;
}

GridFunction final_data(const ProfileParams& params, const std::vector<SolitonModes>& modes,
                        const FinalDataCoeffs& coeffs, double Tn, const Grid& grid) {
  if (modes.size() != params.size() || coeffs.alpha.size() != params.size())
    throw DomainError("final_data: one mode table and one coefficient pair per soliton expected");
  if (coeffs.beta.has_value() != has_odd(params, modes))
    throw DomainError("final_data: beta must be present exactly when the resting soliton has an odd mode");
  GridFunction u = build_profile(params, Tn, grid);
  const std::vector<GridFunction> ms = mode_list(params, modes, Modulation::zero(params.size()), Tn, grid);
  const Eigen::VectorXd c = coeffs.flat();
  for (std::size_t j = 0; j < ms.size(); ++j)
    if (c[j] != 0.0) u.values += cplx(0.0, c[j]) * ms[j].values;
  return u;
}

ModulatedFinalData modulated_final_data(const ProfileParams& params, const std::vector<SolitonModes>& modes,
                                        const std::vector<double>& target, double Tn, const Grid& grid,
                                        const FinalDataOptions& opt) {
  params.validate();
  const std::size_t K = params.size();
  const bool wb = has_odd(params, modes);
  const std::size_t m = K + (wb ? 1 : 0);
  if (target.size() != m) throw DomainError("modulated_final_data: target must have one entry per l^+ component");
  if (opt.c0 > 0.0 && vec_norm(target) > std::exp(-1.5 * opt.c0 * Tn))
    throw DomainError("modulated_final_data: |target| exceeds e^{-3/2 c0 Tn}");

  // l_i = Im int M_i conj(i c_j M_j) = -c_j Re int M_i conj(M_j)
  const std::vector<GridFunction> ms = mode_list(params, modes, Modulation::zero(K), Tn, grid);
  const std::size_t d = ms.size();
  ModulatedFinalData out;
  out.P.resize(2 * m, d);
  for (std::size_t i = 0; i < 2 * m; ++i)
    for (std::size_t j = 0; j < d; ++j) out.P(i, j) = -inner_product(ms[pair_index(i, m)], ms[j]);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(out.P);

  Eigen::VectorXd want = Eigen::VectorXd::Zero(2 * m);
  for (std::size_t i = 0; i < m; ++i) want[i] = target[i];
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
  if (want.norm() == 0.0) {
    out.coeffs = FinalDataCoeffs::from_flat(c, K, wb);
    return out;
  }
  DecomposeOptions dopt;
  dopt.tol = 1e-13;
  dopt.check_preconditions = false;
  double prev = INFINITY;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const FinalDataCoeffs cur = FinalDataCoeffs::from_flat(c, K, wb);
    ModulationState s = decompose(final_data(params, modes, cur, Tn, grid), params, Tn, dopt);
    unstable_coords(s, params, modes);
    const Eigen::VectorXd r = stacked(unstable_vector(s)) - want;
    out.residual = r.norm();
    out.iterations = it;
    // a residual that stops shrinking has hit the round-off floor
    const bool stalled = it >= 2 && out.residual > 0.5 * prev;
    prev = out.residual;
    if (out.residual <= opt.tol * want.norm() || stalled) {
      out.coeffs = FinalDataCoeffs::from_flat(c, K, wb);
      return out;
    }
    c -= lu.solve(r);
  }
  throw ConvergenceError("modulated_final_data: chord iteration did not converge", opt.max_iterations, out.residual);
}

void ShootingConfig::validate(const ProfileParams& params) const {
  params.validate();
  if (!(T0 < Tn)) throw DomainError("shooting needs T0 < Tn");
  if (!(sample_dt > 0.0) || !(continuation_step > 0.0)) throw DomainError("shooting steps must be positive");
  if (max_outer < 1) throw DomainError("max_outer must be >= 1");
  if (!(fd_step > 0.0)) throw DomainError("fd_step must be positive");
  const double L1 = decompose.L1 > 0 ? decompose.L1 : 10.0 / std::sqrt(params.min_omega());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double ck = centre_at(params.solitons[k], T0);
    if (params.solitons[k].v != 0.0 && std::abs(ck) < L1) {
      std::ostringstream os;
      os << "shooting: soliton " << k << " is " << std::abs(ck) << " from the origin at T0, below L1=" << L1;
      throw DomainError(os.str());
    }
    if (k + 1 < params.size() && centre_at(params.solitons[k + 1], T0) - ck < L1) {
      std::ostringstream os;
      os << "shooting: solitons " << k << "," << k + 1 << " closer than L1=" << L1 << " at T0";
      throw DomainError(os.str());
    }
  }
}

ShootingProblem::ShootingProblem(ProfileParams params, Grid grid, ShootingConfig cfg)
    : params_(std::move(params)), grid_(std::move(grid)), cfg_(std::move(cfg)) {
  cfg_.validate(params_);
  cfg_.evolution.p = params_.p();
  cfg_.evolution.gamma = params_.gamma();
  cfg_.evolution.validate(grid_);
  modes_ = build_modes(params_, grid_.h());
  c0_ = decay_rate_c0(params_, modes_);
  with_beta_ = has_odd(params_, modes_);
}

std::vector<double> ShootingProblem::growth_rates() const {
  std::vector<double> r;
  for (const auto& m : modes_) r.push_back(m.spec.frak_y);
  if (with_beta_) r.push_back(*modes_[*params_.k0()].spec.frak_z);
  return r;
}

BackwardRun ShootingProblem::run(const std::vector<double>& target, double t_stop) const {
  FinalDataOptions fo;
  const ModulatedFinalData fd = modulated_final_data(params_, modes_, target, cfg_.Tn, grid_, fo);
  return run_coeffs(fd.coeffs, t_stop);
}

BackwardRun ShootingProblem::run_coeffs(const FinalDataCoeffs& coeffs, double t_stop) const {
  BackwardRun out(grid_);
  out.coeffs = coeffs;
  GridFunction u = final_data(params_, modes_, coeffs, cfg_.Tn, grid_);
  const long samples = static_cast<long>(std::llround((cfg_.Tn - t_stop) / cfg_.sample_dt));
  EvolutionConfig ev = cfg_.evolution;
  DecomposeOptions dopt = cfg_.decompose;
  dopt.check_preconditions = true;
  for (long j = 0;; ++j) {
    const double t = j == samples ? t_stop : cfg_.Tn - static_cast<double>(j) * cfg_.sample_dt;
    if (j > 0) {
      const double t_prev = cfg_.Tn - static_cast<double>(j - 1) * cfg_.sample_dt;
      u = evolve_to(u, t_prev, t, ev);
    }
    try {
      ModulationState s = decompose(u, params_, t, dopt);
      unstable_coords(s, params_, modes_);
      TrajectoryPoint p;
      p.t = t;
      p.dist_h1 = h1_norm(u - build_profile(params_, t, grid_));
      p.w_h1 = h1_norm(s.w);
      for (std::size_t k = 0; k < params_.size(); ++k) {
        p.y_max = std::max(p.y_max, std::abs(s.mod.y[k]));
        p.mu_max = std::max(p.mu_max, std::abs(s.mod.mu[k]));
      }
      p.l = unstable_vector(s);
      out.points.push_back(std::move(p));
    } catch (const Error& e) {
      out.break_time = t;
      out.break_reason = e.what();
      break;
    }
    if (j >= samples) break;
  }
  out.u_last = std::move(u);
  return out;
}

EnvelopeMargins envelope_margins(const std::vector<TrajectoryPoint>& pts, double c0, double eps0, double T0) {
  EnvelopeMargins m;
  for (const auto& p : pts) {
    if (p.t < T0 - 1e-9) continue;
    const double e1 = std::exp(c0 * p.t), e32 = std::exp(1.5 * c0 * p.t);
    double lmax = 0.0;
    for (double x : p.l.plus) lmax = std::max(lmax, std::abs(x));
    for (double x : p.l.minus) lmax = std::max(lmax, std::abs(x));
    m.dist = std::max(m.dist, p.dist_h1 / eps0);
    m.w = std::max(m.w, e1 * p.w_h1);
    m.modulation = std::max(m.modulation, e1 * std::max(p.y_max, p.mu_max));
    m.unstable = std::max(m.unstable, e32 * lmax);
  }
  return m;
}

namespace {

struct Evaluation {
  BackwardRun run;
  Eigen::VectorXd F;  // l^+ at the stage time; empty if the run broke early
};

Evaluation evaluate(const ShootingProblem& pb, const Eigen::VectorXd& target, double t_stop) {
  std::vector<double> tv(target.data(), target.data() + target.size());
  Evaluation e{pb.run(tv, t_stop), {}};
  if (e.run.reached(t_stop)) {
    const auto& l = e.run.points.back().l.plus;
    e.F = Eigen::Map<const Eigen::VectorXd>(l.data(), static_cast<Eigen::Index>(l.size()));
  }
  return e;
}

}  // namespace

ShootingResult shoot(const ShootingProblem& pb) {
  const ShootingConfig& cfg = pb.config();
  const std::size_t m = pb.dim();
  const std::vector<double> rates = pb.growth_rates();
  Eigen::VectorXd target = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  ShootingResult res;
  res.c0 = pb.c0();
  res.T0 = cfg.T0;
  res.Tn = cfg.Tn;
  res.fit_margin = cfg.fit_margin;

  std::optional<Evaluation> best;
  // continuation in the stopping time; a stage whose run breaks is retried
  // with half the stride
  double solved = cfg.Tn, stride = cfg.continuation_step;
  for (;;) {
    const double ts = std::max(cfg.T0, solved - stride);
    Evaluation cur = evaluate(pb, target, ts);
    ++res.backward_runs;
    if (cur.F.size() == 0) {
      if (stride > 2.0 * cfg.sample_dt) {
        stride *= 0.5;
        continue;
      }
      std::ostringstream os;
      os << "shoot: continuation lost the trajectory at t=" << cur.run.break_time.value_or(ts) << " ("
         << cur.run.break_reason << ")";
      throw ConvergenceError(os.str(), res.outer_iterations, INFINITY);
    }
    for (int it = 0; it < cfg.max_outer && cur.F.norm() > cfg.newton_tol; ++it) {
      ++res.outer_iterations;
      // columns are independent backward runs
      std::vector<std::function<Eigen::VectorXd()>> jobs;
      std::vector<double> steps(m);
      for (std::size_t j = 0; j < m; ++j) {
        steps[j] = cfg.fd_step * std::exp(-rates[j] * (cfg.Tn - ts));
        jobs.emplace_back([&, j] {
          Eigen::VectorXd tj = target;
          tj[static_cast<Eigen::Index>(j)] += steps[j];
          const Evaluation e = evaluate(pb, tj, ts);
          if (e.F.size() == 0) return Eigen::VectorXd();
          return Eigen::VectorXd((e.F - cur.F) / steps[j]);
        });
      }
      const std::vector<Eigen::VectorXd> cols = run_parallel(jobs);
      res.backward_runs += static_cast<int>(m);
      Eigen::MatrixXd J(m, m);
      for (std::size_t j = 0; j < m; ++j) {
        if (cols[j].size() == 0) throw ConvergenceError("shoot: finite-difference run broke", res.outer_iterations, cur.F.norm());
        J.col(static_cast<Eigen::Index>(j)) = cols[j];
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Eigen::VectorXd sv = svd.singularValues();
      Eigen::VectorXd step;
      if (sv[sv.size() - 1] > 1e-12 * sv[0]) {
        step = -svd.solve(cur.F);
      } else {
        // ill-conditioned: coordinate-wise secant on the diagonal
        step = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
        for (std::size_t j = 0; j < m; ++j)
          if (J(j, j) != 0.0) step[j] = -cur.F[j] / J(j, j);
      }
      bool accepted = false;
      for (int damp = 0; damp < 10 && !accepted; ++damp, step *= 0.5) {
        Evaluation trial = evaluate(pb, target + step, ts);
        ++res.backward_runs;
        if (trial.F.size() != 0 && trial.F.norm() < cur.F.norm()) {
          target += step;
          cur = std::move(trial);
          accepted = true;
        }
      }
      if (!accepted) break;
    }
    best = std::move(cur);
    solved = ts;
    if (ts <= cfg.T0) break;
    stride = std::min(cfg.continuation_step, 2.0 * stride);
  }

  const Evaluation& fin = *best;
  res.residual = fin.F.norm();
  res.frak_l_plus.assign(target.data(), target.data() + target.size());
  res.coeffs = fin.run.coeffs;
  res.trajectory = fin.run.points;
  res.u_T0 = fin.run.u_last;
  res.margins = envelope_margins(res.trajectory, res.c0, cfg.decompose.eps0, cfg.T0);
  const DecayVerdict dv = verify_decay(res, res.c0);
  res.fitted_rate = dv.rate;
  res.C = dv.C;
  if (res.residual > cfg.newton_tol || !res.margins.ok()) {
    std::ostringstream os;
    os << "shoot: no accepted candidate (|l+(T0)|=" << res.residual << ", envelopes dist=" << res.margins.dist
       << " w=" << res.margins.w << " mod=" << res.margins.modulation << " l=" << res.margins.unstable << ")";
    throw ConvergenceError(os.str(), res.outer_iterations, res.residual);
  }
  return res;
}

ShootingResult shoot(const ProfileParams& params, const Grid& grid, const ShootingConfig& cfg) {
  return shoot(ShootingProblem(params, grid, cfg));
}

DecayVerdict verify_decay(const std::vector<TrajectoryPoint>& pts, double c0, double t_from, double t_to) {
  if (pts.empty()) throw DomainError("verify_decay: empty trajectory");
  double st = 0, sy = 0, stt = 0, sty = 0;
  int n = 0;
  for (const auto& p : pts) {
    if (p.t < t_from - 1e-9 || p.t > t_to + 1e-9 || !(p.dist_h1 > 0.0)) continue;
    const double y = std::log(p.dist_h1);
    st += p.t;
    sy += y;
    stt += p.t * p.t;
    sty += p.t * y;
    ++n;
  }
  DecayVerdict v;
  if (n < 2) return v;
  const double den = n * stt - st * st;
  const double slope = (n * sty - st * sy) / den;
  const double icpt = (sy - slope * st) / n;
  v.rate = -slope;
  double excess = -INFINITY;
  for (const auto& p : pts)
    if (p.t >= t_from - 1e-9 && p.t <= t_to + 1e-9 && p.dist_h1 > 0.0)
      excess = std::max(excess, std::log(p.dist_h1) - (icpt + slope * p.t));
  v.C = std::exp(icpt + excess);
  bool env = true;
  for (const auto& p : pts)
    if (p.t >= t_from - 1e-9 && p.t <= t_to + 1e-9) env = env && p.dist_h1 <= v.C * std::exp(-c0 * p.t) * (1 + 1e-12);
  v.pass = v.rate >= 0.9 * c0 && env;
  return v;
}

DecayVerdict verify_decay(const ShootingResult& r, double c0) {
  return verify_decay(r.trajectory, c0, r.T0, r.Tn - r.fit_margin);
}

GrowthFit fit_backward_growth(const BackwardRun& run) {
  GrowthFit g;
  if (run.points.size() < 3) return g;
  const double Tn = run.points.front().t;
  double lmin = INFINITY;
  std::size_t imin = 0;
  for (std::size_t i = 0; i < run.points.size(); ++i) {
    const double v = run.points[i].l.norm_plus();
    if (v > 0.0 && v < lmin) {
      lmin = v;
      imin = i;
    }
  }
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = imin; i < run.points.size(); ++i) {
    const double v = run.points[i].l.norm_plus();
    if (!(v >= 100.0 * lmin)) continue;
    const double s = Tn - run.points[i].t, y = std::log(v);
    if (g.samples == 0) g.t_from = run.points[i].t;
    g.t_to = run.points[i].t;
    st += s;
    sy += y;
    stt += s * s;
    sty += s * y;
    ++g.samples;
  }
  if (g.samples >= 2) g.exponent = (g.samples * sty - st * sy) / (g.samples * stt - st * st);
  return g;
}

VirtualPartition virtual_velocity_partition(const ProfileParams& params) {
  params.validate();
  if (params.k0()) throw DomainError("virtual_velocity_partition: a soliton already rests");
  VirtualPartition vp;
  vp.params = params;
  vp.virtual_omega = params.min_omega();
  bool inserted = false;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!inserted && params.solitons[k].v > 0.0) {
      vp.virtual_slot = vp.slot_velocity.size();
      vp.slot_velocity.push_back(0.0);
      vp.slot_soliton.push_back(std::nullopt);
      inserted = true;
    }
    vp.slot_velocity.push_back(params.solitons[k].v);
    vp.slot_soliton.push_back(k);
  }
  if (!inserted) {
    vp.virtual_slot = vp.slot_velocity.size();
    vp.slot_velocity.push_back(0.0);
    vp.slot_soliton.push_back(std::nullopt);
  }
  double gap = INFINITY;
  for (std::size_t s = 1; s < vp.slot_velocity.size(); ++s) {
    vp.partition.sigmas.push_back(0.5 * (vp.slot_velocity[s - 1] + vp.slot_velocity[s]));
    gap = std::min(gap, vp.slot_velocity[s] - vp.slot_velocity[s - 1]);
  }
  vp.partition.L = 20.0 / gap;
  return vp;
}

double boosted_energy(const GridFunction& u, const VirtualPartition& vp, double t) {
  const Conserved c = conserved_functionals(u, vp.params.gamma(), vp.params.p());
  const LocalizedFunctionals lf = localized_functionals(u, vp.partition, t);
  double g = c.E_gamma;
  for (std::size_t s = 0; s < vp.slot_velocity.size(); ++s) {
    const double v = vp.slot_velocity[s];
    const double w = vp.slot_soliton[s] ? vp.params.solitons[*vp.slot_soliton[s]].omega : vp.virtual_omega;
    // at the virtual slot v = 0, so its momentum never enters
    g += 0.5 * (w + 0.25 * v * v) * lf.M[s] - 0.5 * v * lf.P[s];
  }
  return g;
}

}  // namespace dsol
