#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>

#include "dsol/multisoliton.hpp"

using namespace dsol;

namespace {

SolitonParams sol(double v, double x0, double omega) {
  SolitonParams s;
  s.gamma = -1.0;
  s.omega = omega;
  s.v = v;
  s.x0 = x0;
  return s;
}

ProfileParams profile(std::vector<SolitonParams> s) { return ProfileParams{std::move(s)}; }

// one moving soliton, short window: cheap enough for the unit suite
ShootingConfig short_config(double Tn) {
  ShootingConfig c;
  c.T0 = 2.0;
  c.Tn = Tn;
  c.evolution.dt = 0.01;
  c.continuation_step = 3.0;
  return c;
}

const ProfileParams kMoving = profile({sol(2.0, 16.0, 0.3)});

const ShootingProblem& moving_problem() {
  static const ShootingProblem pb(kMoving, Grid(100.0, 8193), short_config(8.0));
  return pb;
}

const ShootingResult& moving_result() {
  static const ShootingResult r = shoot(moving_problem());
  return r;
}

std::vector<TrajectoryPoint> synthetic(std::function<double(double)> f) {
  std::vector<TrajectoryPoint> pts;
  for (double t = 20.0; t >= 5.0 - 1e-9; t -= 0.1) {
    TrajectoryPoint p;
    p.t = t;
    p.dist_h1 = f(t);
    pts.push_back(p);
  }
  return pts;
}

const Grid kGrid(80.0, 6401);

}  // namespace

TEST(FinalData, ZeroAndLinearity) {
  const ProfileParams pp = profile({sol(0, 0, 1.0), sol(2, 0, 1.0)});
  const auto modes = build_modes(pp, kGrid.h());
  const double Tn = 15.0;
  const GridFunction r = build_profile(pp, Tn, kGrid);
  FinalDataCoeffs z = FinalDataCoeffs::zero(2, true);
  EXPECT_EQ(l2_norm(final_data(pp, modes, z, Tn, kGrid) - r), 0.0);

  FinalDataCoeffs a = z, b = z;
  a.alpha[0] = {1e-3, -2e-3};
  a.beta = std::array<double, 2>{5e-4, 0.0};
  b.alpha[1] = {0.0, 3e-3};
  b.beta = std::array<double, 2>{0.0, -1e-3};
  FinalDataCoeffs ab = FinalDataCoeffs::from_flat(a.flat() + b.flat(), 2, true);
  const GridFunction ua = final_data(pp, modes, a, Tn, kGrid), ub = final_data(pp, modes, b, Tn, kGrid);
  EXPECT_LT(l2_norm(final_data(pp, modes, ab, Tn, kGrid) - (ua + ub - r)), 1e-14);

  // ||u - R||_H1 <= (max mode norm) * sum |coeffs|
  double cmax = 0.0;
  for (ModeKind k : {ModeKind::Yplus, ModeKind::Yminus})
    for (std::size_t j = 0; j < 2; ++j)
      cmax = std::max(cmax, h1_norm(modulated_mode(modes[j], k, pp.solitons[j], Tn, 0, 0, kGrid)));
  for (ModeKind k : {ModeKind::Zplus, ModeKind::Zminus})
    cmax = std::max(cmax, h1_norm(modulated_mode(modes[0], k, pp.solitons[0], Tn, 0, 0, kGrid)));
  EXPECT_LE(h1_norm(ua - r), cmax * a.flat().cwiseAbs().sum() * (1 + 1e-12));

  EXPECT_THROW(final_data(pp, modes, FinalDataCoeffs::zero(2, false), Tn, kGrid), DomainError);
}

TEST(FinalData, ModulatedHitsTarget) {
  const ProfileParams pp = profile({sol(0, 0, 1.0), sol(2, 0, 1.0)});
  const auto modes = build_modes(pp, kGrid.h());
  const double Tn = 15.0;
  const ModulatedFinalData zero = modulated_final_data(pp, modes, {0, 0, 0}, Tn, kGrid);
  EXPECT_EQ(zero.coeffs.norm(), 0.0);

  // the pairing matrix is block diagonal up to the soliton overlap
  const Eigen::MatrixXd& P = zero.P;
  ASSERT_EQ(P.rows(), 6);
  ASSERT_EQ(P.cols(), 6);
  // rows: a1+ a2+ b+ a1- a2- b-; columns: alpha1+- alpha2+- beta+-
  const std::vector<int> owner_row{0, 1, 2, 0, 1, 2}, owner_col{0, 0, 1, 1, 2, 2};
  double diag = 0.0, off = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      (owner_row[i] == owner_col[j] ? diag : off) = std::max(owner_row[i] == owner_col[j] ? diag : off, std::abs(P(i, j)));
  std::printf("P: diagonal blocks %.3e, off-diagonal %.3e\n", diag, off);
  EXPECT_LT(off, std::exp(-Tn) * diag);

  const std::vector<double> target{2e-5, -1e-5, 3e-6};
  const ModulatedFinalData fd = modulated_final_data(pp, modes, target, Tn, kGrid);
  ModulationState s = decompose(final_data(pp, modes, fd.coeffs, Tn, kGrid), pp, Tn);
  unstable_coords(s, pp, modes);
  const UnstableVector l = unstable_vector(s);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(l.plus[i], target[i], 1e-8 * std::abs(target[0]));
    EXPECT_NEAR(l.minus[i], 0.0, 1e-8 * std::abs(target[0]));
  }
  FinalDataOptions strict;
  strict.c0 = 0.05;
  EXPECT_THROW(modulated_final_data(pp, modes, {1.0, 0.0, 0.0}, Tn, kGrid, strict), DomainError);
  EXPECT_THROW(modulated_final_data(pp, modes, {1e-5}, Tn, kGrid), DomainError);
}

TEST(FinalData, CoefficientBoundIsUniformInTn) {
  const ProfileParams pp = profile({sol(0, 0, 1.0), sol(2, 0, 1.0)});
  const Grid g(100.0, 8001);
  const auto modes = build_modes(pp, g.h());
  const std::vector<double> target{1e-5, 1e-5, 1e-5};
  std::vector<double> ratio;
  for (double Tn : {15.0, 20.0, 25.0}) {
    const ModulatedFinalData fd = modulated_final_data(pp, modes, target, Tn, g);
    ratio.push_back(fd.coeffs.norm() / std::sqrt(3e-10));
  }
  std::printf("|coeffs|/|target| = %.4f %.4f %.4f\n", ratio[0], ratio[1], ratio[2]);
  for (double r : ratio) EXPECT_NEAR(r, ratio[0], 1e-3 * ratio[0]);
}

TEST(Decay, Synthetic) {
  const double c0 = 0.01;
  const DecayVerdict exact = verify_decay(synthetic([&](double t) { return 0.3 * std::exp(-c0 * t); }), c0, 5, 19);
  EXPECT_NEAR(exact.rate, c0, 1e-12);
  EXPECT_NEAR(exact.C, 0.3, 1e-12);
  EXPECT_TRUE(exact.pass);
  const DecayVerdict flat = verify_decay(synthetic([](double) { return 1e-3; }), c0, 5, 19);
  EXPECT_NEAR(flat.rate, 0.0, 1e-12);
  EXPECT_FALSE(flat.pass);
  // rate above 0.9 c0, but the fitted C with e^{-c0 t} no longer covers the data
  const DecayVerdict slow = verify_decay(synthetic([&](double t) { return std::exp(-0.92 * c0 * t); }), c0, 5, 19);
  EXPECT_NEAR(slow.rate, 0.92 * c0, 1e-12);
  EXPECT_FALSE(slow.pass);
  EXPECT_THROW(verify_decay(std::vector<TrajectoryPoint>{}, c0, 0, 1), DomainError);
}

TEST(Virtual, Partition) {
  const VirtualPartition one = virtual_velocity_partition(profile({sol(2, 30, 1.0)}));
  ASSERT_EQ(one.partition.size(), 2u);
  EXPECT_DOUBLE_EQ(one.partition.sigmas[0], 1.0);
  EXPECT_EQ(one.virtual_slot, 0u);
  EXPECT_EQ(one.params.size(), 1u);

  const VirtualPartition two = virtual_velocity_partition(profile({sol(-1, -30, 1.0), sol(1, 30, 1.0)}));
  ASSERT_EQ(two.partition.size(), 3u);
  EXPECT_DOUBLE_EQ(two.partition.sigmas[0], -0.5);
  EXPECT_DOUBLE_EQ(two.partition.sigmas[1], 0.5);
  EXPECT_EQ(two.virtual_slot, 1u);
  EXPECT_FALSE(two.slot_soliton[1].has_value());
  EXPECT_EQ(*two.slot_soliton[2], 1u);
  for (double t : {0.0, 10.0})
    for (double x = -100; x <= 100; x += 0.7) {
      double s = 0;
      for (std::size_t k = 0; k < 3; ++k) s += two.partition.psi(k, t, x);
      EXPECT_NEAR(s, 1.0, 1e-14);
    }
  EXPECT_THROW(virtual_velocity_partition(profile({sol(0, 0, 1.0), sol(1, 30, 1.0)})), DomainError);
}

TEST(Virtual, BoostedEnergySeparates) {
  const ProfileParams pp = profile({sol(-1, -5, 0.8), sol(1, 5, 1.0)});
  const VirtualPartition vp = virtual_velocity_partition(pp);
  const double t = 40.0;
  const Grid g(120.0, 12001);
  const GridFunction r = build_profile(pp, t, g);
  // each separated soliton contributes E(Q) + w/2 M(Q); the empty slot nothing
  double want = 0.0;
  for (const auto& s : pp.solitons) {
    const GridFunction q = sample_Q(s, g);
    const Conserved c = conserved_functionals(q, 0.0, s.p);
    want += c.E_gamma + 0.5 * s.omega * c.M;
  }
  EXPECT_NEAR(boosted_energy(r, vp, t), want, 1e-4 * std::abs(want));
  EXPECT_NEAR(boosted_energy(std::polar(1.0, 0.4) * r, vp, t), boosted_energy(r, vp, t), 1e-12);
}

TEST(Shooting, ConfigValidation) {
  ShootingConfig c = short_config(8.0);
  EXPECT_NO_THROW(c.validate(kMoving));
  c.T0 = 9.0;
  EXPECT_THROW(c.validate(kMoving), DomainError);
  // too close to the delta at T0
  EXPECT_THROW(short_config(8.0).validate(profile({sol(2.0, 5.0, 0.3)})), DomainError);
  // two solitons closer than L1
  EXPECT_THROW(short_config(8.0).validate(profile({sol(0, 0, 1.0), sol(1, 0, 1.0)})), DomainError);
}

TEST(Shooting, MovingSolitonConverges) {
  const ShootingResult& r = moving_result();
  std::printf("target %.4e, |coeffs| %.3e, |l+(T0)| %.2e, rate %.4f (c0 %.4f), runs %d\n", r.frak_l_plus[0],
              r.coeffs.norm(), r.residual, r.fitted_rate, r.c0, r.backward_runs);
  EXPECT_LE(r.residual, 1e-6);
  EXPECT_TRUE(r.margins.ok());
  EXPECT_LE(r.coeffs.norm(), std::exp(-r.c0 * r.Tn));
  const DecayVerdict v = verify_decay(r, r.c0);
  EXPECT_TRUE(v.pass);
  EXPECT_GE(r.fitted_rate, 0.9 * r.c0);
  ASSERT_TRUE(r.u_T0.has_value());
  EXPECT_DOUBLE_EQ(r.trajectory.back().t, r.T0);
}

TEST(Shooting, PerturbedTargetLosesTheTrajectory) {
  const ShootingResult& r = moving_result();
  const ShootingProblem& pb = moving_problem();
  const BackwardRun off = pb.run({11.0 * r.frak_l_plus[0]}, pb.config().T0);
  const bool broke = off.break_time.has_value();
  const EnvelopeMargins m = envelope_margins(off.points, pb.c0(), pb.config().decompose.eps0, pb.config().T0);
  const double l_end = off.points.back().l.norm_plus();
  std::printf("perturbed: break %s, |l+| at end %.3e vs accepted %.3e\n", broke ? "yes" : "no", l_end,
              r.trajectory.back().l.norm_plus());
  EXPECT_TRUE(broke || !m.ok());
}

TEST(Shooting, StableUnderLongerWindow) {
  const ShootingResult& a = moving_result();
  const ShootingResult b = shoot(kMoving, Grid(100.0, 8193), short_config(11.0));
  const double diff = h1_norm(*a.u_T0 - *b.u_T0);
  std::printf("Tn=8 vs Tn=11 at T0: %.3e (bound %.3e)\n", diff, 2 * a.C * std::exp(-a.c0 * a.Tn));
  EXPECT_LE(diff, 2 * a.C * std::exp(-a.c0 * a.Tn));
}

TEST(Shooting, InstabilityWitness) {
  ShootingConfig c;
  c.T0 = 0.0;
  c.Tn = 3.0;
  c.sample_dt = 0.05;
  c.evolution.dt = 0.004;
  const ShootingProblem pb(profile({sol(0, 0, 1.0)}), Grid(30.0, 6001), c);
  const BackwardRun run = pb.run_coeffs(FinalDataCoeffs::zero(1, true), 0.0);
  const GrowthFit g = fit_backward_growth(run);
  const double y = pb.growth_rates()[0];
  std::printf("growth %.4f vs %.4f over [%.2f, %.2f], %d samples\n", g.exponent, y, g.t_from, g.t_to, g.samples);
  EXPECT_GE(g.samples, 5);
  EXPECT_NEAR(g.exponent, y, 0.15 * y);
  EXPECT_TRUE(run.break_time.has_value());
}
