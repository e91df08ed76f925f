// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dsol/frac_sobolev.hpp"
#include "dsol/linearized.hpp"
#include "dsol/multisoliton.hpp"

using namespace dsol;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void note(Outcome& o, bool ok, const char* fmt, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += buf;
  if (!ok) {
    o.detail += " [x]";
    o.pass = false;
  }
}

SolitonParams soliton(double p, double gamma, double omega, double v = 0.0, double x0 = 0.0) {
  SolitonParams s;
  s.p = p;
  s.gamma = gamma;
  s.omega = omega;
  s.v = v;
  s.x0 = x0;
  return s;
}

double order(double coarse, double fine) { return std::log2(coarse / fine); }

// ---- 1

Outcome ground_state_exactness() {
  Outcome o;
  double peak = 0.0, res_order = 1e300, jump_order = 1e300;
  for (double p : {3.0, 7.0})
    for (double g : {0.0, -1.0, 0.5})
      for (double w : {0.5, 1.0, 2.0}) {
        const SolitonParams sp = soliton(p, g, w);
        const double want = (p + 1) * w / 2 * (1 - g * g / (4 * w));
        peak = std::max(peak, std::abs(std::pow(eval_Q(sp, 0.0), p - 1) - want) / want);
        const StationaryResidual a = stationary_residual(sp, Grid(20.0, 1001));
        const StationaryResidual b = stationary_residual(sp, Grid(20.0, 2001));
        res_order = std::min(res_order, order(a.interior, b.interior));
        if (g != 0.0) jump_order = std::min(jump_order, order(a.jump, b.jump));
      }
  note(o, peak <= 1e-12, "peak rel. error %.2e", peak);
  note(o, res_order >= 1.0, "residual order %.2f", res_order);
  note(o, jump_order >= 1.0, "jump order %.2f", jump_order);
  return o;
}

// ---- 2

// int Q^2 by composite 8-point Gauss-Legendre on [0, X], independent of mass_of_Q
double mass_oracle(const SolitonParams& sp) {
  static const double xg[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
  static const double wg[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  const double X = 60.0 / std::sqrt(sp.omega);
  const int panels = 4000;
  const double hp = X / panels;
  double s = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double c = (i + 0.5) * hp;
    for (int k = 0; k < 4; ++k)
      for (double sg : {-1.0, 1.0}) {
        const double q = eval_Q(sp, c + sg * xg[k] * hp / 2);
        s += wg[k] * q * q;
      }
  }
  return 2 * s * hp / 2;
}

Outcome vakhitov_kolokolov() {
  Outcome o;
  double worst = 0.0, largest = -1e300;
  for (double p : {6.0, 7.0, 9.0})
    for (double w : {0.5, 1.0, 2.0})
      for (double g : {0.0, -0.5, -1.0}) {
        const SolitonParams sp = soliton(p, g, w);
        const double eps = 1e-4 * w;
        const double fd = (mass_oracle(soliton(p, g, w + eps)) - mass_oracle(soliton(p, g, w - eps))) / (2 * eps);
        const double vk = vk_derivative(sp);
        worst = std::max(worst, std::abs(vk - fd) / std::abs(fd));
        largest = std::max(largest, vk);
      }
  note(o, worst <= 1e-4, "max rel. diff to oracle %.2e", worst);
  note(o, largest < 0.0, "max derivative %.3e", largest);
  return o;
}

// ---- 3

Eigen::MatrixXd dense(const RVec& diag, double off) {
  const Eigen::Index m = diag.size() - 2;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    a(i, i) = diag[i + 1];
    if (i + 1 < m) a(i, i + 1) = a(i + 1, i) = off;
  }
  return a;
}

// real parts of the eigenvalues of [[0, L-], [-L+, 0]] with |Re| > thr, sorted
std::vector<double> dense_unstable(const LinearizedOps& ops, double thr) {
  const Eigen::MatrixXd lp = dense(ops.diag_plus, ops.off), lm = dense(ops.diag_minus, ops.off);
  const Eigen::Index m = lp.rows();
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  big.block(0, m, m, m) = lm;
  big.block(m, 0, m, m) = -lp;
  Eigen::EigenSolver<Eigen::MatrixXd> es(big, false);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < 2 * m; ++i)
    if (std::abs(es.eigenvalues()[i].real()) > thr) out.push_back(es.eigenvalues()[i].real());
  std::sort(out.begin(), out.end());
  return out;
}

Outcome spectral_count() {
  Outcome o;
  for (double g : {0.0, -1.0}) {
    const LinearizedOps ops = build_linearized(soliton(7.0, g, 1.0), Grid(15.0, 401));
    const SpectralData sd = compute_spectrum(ops);
    const std::vector<double> ev = dense_unstable(ops, 1e-3);
    const std::size_t want_pairs = g == 0.0 ? 1 : 2;
    note(o, ev.size() == 2 * want_pairs && sd.has_odd_mode() == (g != 0.0), g == 0.0 ? "gamma=0: %.0f pairs" : "gamma=-1: %.0f pairs",
         ev.size() / 2.0);
    if (ev.size() != 2 * want_pairs) continue;
    std::vector<double> want{-sd.frak_y, sd.frak_y};
    if (sd.frak_z) want.insert(want.end(), {-*sd.frak_z, *sd.frak_z});
    std::sort(want.begin(), want.end());
    double dev = 0.0;
    for (std::size_t i = 0; i < ev.size(); ++i) dev = std::max(dev, std::abs(ev[i] - want[i]) / std::abs(want[i]));
    note(o, dev <= 1e-4, "oracle rel. diff %.2e", dev);
    double par = std::max(parity_defect(sd.Yplus, +1), parity_defect(sd.Yminus, +1));
    if (sd.frak_z) par = std::max({par, parity_defect(sd.Zplus, -1), parity_defect(sd.Zminus, -1)});
    note(o, par <= 1e-10, "parity residual %.1e", par);
  }
  return o;
}

// ---- 4

Outcome coercivity() {
  Outcome o;
  for (double g : {-1.0, 0.0}) {
    double c[2];
    int i = 0;
    for (std::size_t n : {1001u, 2001u}) {
      const LinearizedOps ops = build_linearized(soliton(7.0, g, 1.0), Grid(20.0, n));
      const SpectralData sd = compute_spectrum(ops);
      const CoercivityReport rep = coercivity_check(ops, sd, 1000, 7);
      c[i++] = rep.min_quotient;
      if (n == 2001u && g < 0) {
        auto det_dev = [&](const GridFunction& ap, const GridFunction& am) {
          const double a = std::pow(l2_norm(GridFunction(ops.grid, ap.real())), 2);
          const double b = std::pow(l2_norm(GridFunction(ops.grid, ap.imag())), 2);
          return std::abs(gram_matrix(ap, am).determinant() / (4 * a * b) - 1.0);
        };
        const double d = std::max(det_dev(sd.Yplus, sd.Yminus), det_dev(sd.Zplus, sd.Zminus));
        note(o, d <= 1e-8, "Gram det rel. dev %.1e", d);
      }
    }
    note(o, c[0] > 0 && std::abs(c[0] - c[1]) <= 0.2 * c[1], g < 0 ? "gamma=-1: c %.4f -> %.4f" : "gamma=0: c %.4f -> %.4f",
         c[0], c[1]);
  }
  return o;
}

// ---- 5

EvolutionConfig evo(double dt, double gamma, double p) {
  EvolutionConfig c;
  c.dt = dt;
  c.gamma = gamma;
  c.p = p;
  return c;
}

// fine-grid function at the coarse nodes (n_fine - 1 = 2 (n_coarse - 1))
GridFunction coarsen(const GridFunction& f, const Grid& coarse) {
  GridFunction out(coarse);
  for (std::size_t j = 0; j < coarse.n_points(); ++j) out.values[j] = f.values[2 * j];
  return out;
}

VirialWeight moving_tanh(double L, double sigma) {
  VirialWeight f;
  f.value = [=](double x, double t) { return std::tanh((x - sigma * t) / L); };
  f.dx = [=](double x, double t) { const double c = std::cosh((x - sigma * t) / L); return 1.0 / (L * c * c); };
  f.dxxx = [](double, double) { return 0.0; };
  f.dt = [=](double x, double t) { const double c = std::cosh((x - sigma * t) / L); return -sigma / (L * c * c); };
  return f;
}

// s^4 e^{-a s} for s = x - x1 > 0
VirialWeight far_weight(double x1, double a) {
  auto e = [=](double s) { return s > 0 ? std::exp(-a * s) : 0.0; };
  VirialWeight w;
  w.value = [=](double x, double) { const double s = x - x1; return s > 0 ? s * s * s * s * e(s) : 0.0; };
  w.dx = [=](double x, double) { const double s = x - x1; return s > 0 ? (4 * s * s * s - a * s * s * s * s) * e(s) : 0.0; };
  w.dxxx = [=](double x, double) {
    const double s = x - x1;
    return s > 0 ? (24 * s - 36 * a * s * s + 12 * a * a * s * s * s - a * a * a * s * s * s * s) * e(s) : 0.0;
  };
  return w;
}

Outcome evolution_fidelity() {
  Outcome o;
  // p = 3: the p = 7 standing wave is linearly unstable and cannot be followed to T = 10
  const double p = 3.0, gamma = -1.0, T = 10.0;
  const SolitonParams sp = soliton(p, gamma, 1.0);
  std::vector<GridFunction> finals;
  std::vector<double> err;
  double drift = 0.0;
  for (int level = 0; level < 3; ++level) {
    const Grid g(20.0, (1024u << level) + 1);
    const double dt = 0.01 / (1 << level);
    const GridFunction q = sample_Q(sp, g);
    const double m0 = std::pow(l2_norm(q), 2);
    const GridFunction u = evolve_to(q, 0.0, T, evo(dt, gamma, p));
    drift = std::max(drift, std::abs(std::pow(l2_norm(u), 2) - m0) / m0);
    err.push_back(h1_norm(u - std::polar(1.0, T) * q));
    finals.push_back(u);
  }
  const double d0 = h1_norm(coarsen(finals[1], finals[0].grid) - finals[0]);
  const double d1 = h1_norm(coarsen(finals[2], finals[1].grid) - finals[1]);
  note(o, order(d0, d1) >= 1.8, "H1 self-convergence order %.2f", order(d0, d1));
  note(o, true, "H1 error at n=4097 %.2e", err[2]);
  note(o, drift <= 1e-8, "mass drift %.1e", drift);

  double mass_def[2], mom_def[2];
  for (int level = 0; level < 2; ++level) {
    const Grid g(20.0, (1000u << level) + 1);
    const auto traj = evolve(sample_Q(soliton(7.0, -1.0, 1.0), g), 0.0, 1.0, evo(0.01 / (1 << level), -1.0, 7.0));
    mass_def[level] = virial_diagnostics(traj, moving_tanh(3.0, 0.5), VirialWeight::constant(0.0), 7.0).mass_defect;
    const Grid gf(30.0, (1500u << level) + 1);
    const SolitonParams free = soliton(7.0, 0.0, 1.0, 1.0, 4.0);
    const GridFunction u0 = GridFunction::sample(gf, [&](double x) {
      return eval_Q(free, x - free.x0) * std::polar(1.0, free.v * x / 2);
    });
    const auto tf = evolve(u0, 0.0, 1.0, evo(0.01 / (1 << level), 0.0, 7.0));
    mom_def[level] = virial_diagnostics(tf, VirialWeight::constant(1.0), far_weight(1.0, 0.5), 7.0).momentum_defect;
  }
  note(o, order(mass_def[0], mass_def[1]) >= 1.6, "mass virial order %.2f", order(mass_def[0], mass_def[1]));
  note(o, order(mom_def[0], mom_def[1]) >= 1.6, "momentum virial order %.2f", order(mom_def[0], mom_def[1]));
  return o;
}

// ---- 6

Outcome instability_witness() {
  Outcome o;
  ShootingConfig c;
  c.T0 = 0.0;
  c.Tn = 20.0;
  c.sample_dt = 0.05;
  c.evolution.dt = 0.004;
  const ShootingProblem pb(ProfileParams{{soliton(7.0, -1.0, 1.0)}}, Grid(30.0, 6001), c);
  const BackwardRun run = pb.run_coeffs(FinalDataCoeffs::zero(1, true), 0.0);
  const GrowthFit gf = fit_backward_growth(run);
  const double y = pb.growth_rates()[0];
  note(o, gf.samples >= 5 && std::abs(gf.exponent - y) <= 0.15 * y, "growth %.4f vs frak_y %.4f", gf.exponent, y);
  note(o, true, "fit window [%.2f, %.2f]", gf.t_from, gf.t_to);
  return o;
}

// ---- 7, 8, 10

void shooting_checks(Outcome& o, const ShootingResult& r) {
  const DecayVerdict dv = verify_decay(r, r.c0);
  note(o, r.residual <= 1e-6, "|l+(T0)| %.1e", r.residual);
  note(o, r.fitted_rate >= 0.9 * r.c0, "rate %.4f vs c0 %.4f", r.fitted_rate, r.c0);
  note(o, dv.pass, "fitted-C envelope (C %.3g)", dv.C);
  note(o, r.margins.ok(), "margins dist %.2f w %.2f", r.margins.dist, r.margins.w);
  note(o, r.margins.ok(), "modulation %.2f unstable %.2f", r.margins.modulation, r.margins.unstable);
  const double bound = std::exp(-r.c0 * r.Tn);
  note(o, r.coeffs.norm() <= bound, "|coeffs| %.2e <= %.2e", r.coeffs.norm(), bound);
}

ShootingConfig shooting_config(double T0, double Tn) {
  ShootingConfig c;
  c.T0 = T0;
  c.Tn = Tn;
  c.evolution.dt = 0.005;
  return c;
}

Outcome single_moving() {
  Outcome o;
  const ProfileParams pp{{soliton(7.0, -1.0, 0.3, 2.0, 10.0)}};
  shooting_checks(o, shoot(pp, Grid(130.0, 16385), shooting_config(5.0, 20.0)));
  return o;
}

Outcome resting_plus_moving() {
  Outcome o;
  const ProfileParams pp{{soliton(7.0, -1.0, 0.27), soliton(7.0, -1.0, 0.3, 3.0, 5.0)}};
  const ShootingProblem pb(pp, Grid(130.0, 16385), shooting_config(5.0, 15.0));
  const ShootingResult r = shoot(pb);
  shooting_checks(o, r);
  double bmax = 0.0;
  for (const auto& pt : r.trajectory) bmax = std::max({bmax, std::abs(pt.l.plus.back()), std::abs(pt.l.minus.back())});
  note(o, pb.with_beta(), "max |b+-| %.2e", bmax);
  return o;
}

Outcome virtual_velocity() {
  Outcome o;
  const ProfileParams pp{{soliton(7.0, -1.0, 0.3, -1.0, -15.0), soliton(7.0, -1.0, 0.3, 1.0, 15.0)}};
  const VirtualPartition vp = virtual_velocity_partition(pp);
  double unity = 0.0;
  for (double t : {5.0, 20.0})
    for (double x = -110; x <= 110; x += 0.5) {
      double s = 0.0;
      for (std::size_t k = 0; k < vp.partition.size(); ++k) s += vp.partition.psi(k, t, x);
      unity = std::max(unity, std::abs(s - 1.0));
    }
  const bool slot_ok = vp.partition.size() == 3 && vp.virtual_slot == 1 && !vp.slot_soliton[1] && vp.slot_velocity[1] == 0.0;
  note(o, slot_ok && unity <= 1e-12, "virtual slot at v=0, partition defect %.1e", unity);

  const Grid grid(110.0, 16385);
  const ShootingProblem pb(pp, grid, shooting_config(5.0, 20.0));
  const ShootingResult r = shoot(pb);
  shooting_checks(o, r);
  const double g_end = boosted_energy(final_data(pp, pb.modes(), r.coeffs, r.Tn, grid), vp, r.Tn);
  const double g_start = boosted_energy(*r.u_T0, vp, r.T0);
  note(o, true, "boosted energy drift %.2e (relative)", std::abs(g_end - g_start) / std::abs(g_end));
  return o;
}

// ---- 9

Outcome norm_equivalence_check() {
  Outcome o;
  const std::vector<double> s_values{0.25, 0.6, 1.0, 1.4}, gammas{-1.0, 1.0};
  const auto battery = default_battery();
  const auto coarse = norm_equivalence(battery, Grid(30.0, 2049), s_values, gammas);
  const auto fine = norm_equivalence(battery, Grid(30.0, 4097), s_values, gammas);
  const double C0 = equivalence_constant(coarse), C1 = equivalence_constant(fine);
  double odd = 0.0, row_change = 0.0;
  for (std::size_t i = 0; i < fine.size(); ++i) {
    if (fine[i].id == "odd_gauss") odd = std::max(odd, std::abs(fine[i].ratio - 1.0));
    row_change = std::max(row_change, std::abs(fine[i].ratio - coarse[i].ratio) / coarse[i].ratio);
    if (fine[i].ratio > C1 || fine[i].ratio < 1 / C1) row_change = 1e300;
  }
  note(o, std::isfinite(C1) && std::abs(C1 - C0) <= 0.2 * C0, "C %.4f (h) %.4f (h/2)", C0, C1);
  note(o, row_change <= 0.2, "max ratio change %.3f", row_change);
  note(o, odd <= 1e-10, "odd deviation %.1e", odd);
  const GridFunction gauss = GridFunction::sample_real(Grid(30.0, 4097), [](double x) { return std::exp(-x * x); });
  double worst = -1e300;
  for (double s : s_values)
    for (double g : gammas)
      worst = std::max(worst, c_f0_decay_check(gauss, frac_params(s, g), log_samples(1.0, 1e4, 41)).exponent);
  note(o, worst <= -0.70, "c_f0 exponent %.3f", worst);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  app.add_option("criteria", only, "criterion numbers to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "ground-state exactness", 1.0, ground_state_exactness},
      {2, "Vakhitov-Kolokolov", 10.0, vakhitov_kolokolov},
      {3, "spectral count", 60.0, spectral_count},
      {4, "coercivity", 120.0, coercivity},
      {5, "evolution fidelity", 300.0, evolution_fidelity},
      {6, "instability witness", 300.0, instability_witness},
      {7, "K=1 moving soliton", 1800.0, single_moving},
      {8, "K=2 resting + moving", 3600.0, resting_plus_moving},
      {9, "norm equivalence", 120.0, norm_equivalence_check},
      {10, "K=2 virtual velocity", 3600.0, virtual_velocity},
  };
  const std::set<int> want(only.begin(), only.end());
  int failed = 0;
  for (const auto& c : all) {
    if (!want.empty() && !want.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    note(o, secs <= c.budget_s, "%.1f s (budget %.0f s)", secs, c.budget_s);
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
