#include "dsol/runner.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "dsol/frac_sobolev.hpp"

namespace dsol {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& path, json j, std::uint64_t hash) {
  j["config_hash"] = hash_hex(hash);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::string opt_real(const std::optional<double>& x) { return x ? format_real(*x) : std::string(); }

double closed_form_peak(const SolitonParams& s) {
  const double g = s.profile_gamma();
  return (s.p + 1.0) * s.omega / 2.0 * (1.0 - g * g / (4.0 * s.omega));
}

struct Check {
  std::string name;
  double value, threshold;
  bool pass;
};

json checks_json(const std::vector<Check>& cs) {
  json arr = json::array();
  for (const auto& c : cs) arr.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"pass", c.pass}});
  return arr;
}

bool all_pass(const std::vector<Check>& cs) {
  for (const auto& c : cs)
    if (!c.pass) return false;
  return true;
}

int groundstate(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  const Grid g = cfg.grid->grid();
  const auto& sol = cfg.profile->solitons;
  std::vector<std::string> cols{"x"};
  std::vector<GridFunction> Q;
  json rows = json::array();
  std::vector<Check> checks;
  for (std::size_t k = 0; k < sol.size(); ++k) {
    cols.push_back("Q_" + std::to_string(k + 1));
    Q.push_back(sample_Q(sol[k], g));
    const double want = closed_form_peak(sol[k]);
    const double got = std::pow(eval_Q(sol[k], 0.0), sol[k].p - 1.0);
    const StationaryResidual r = stationary_residual(sol[k], g);
    rows.push_back({{"omega", sol[k].omega},
                    {"profile_gamma", sol[k].profile_gamma()},
                    {"Q0_pow", got},
                    {"Q0_pow_closed_form", want},
                    {"residual_interior", r.interior},
                    {"residual_jump", r.jump},
                    {"mass", mass_of_Q(sol[k])},
                    {"vk_derivative", vk_derivative(sol[k])}});
    checks.push_back({"peak_exactness_" + std::to_string(k + 1), std::abs(got - want) / want, 1e-12,
                      std::abs(got - want) <= 1e-12 * want});
    log << "soliton " << k + 1 << ": Q(0)^(p-1) rel. error " << std::abs(got - want) / want << ", residual "
        << r.interior << ", jump " << r.jump << '\n';
  }
  CsvWriter csv(dir / "groundstate.csv", cfg.hash(), cols);
  for (std::size_t j = 0; j < g.n_points(); ++j) {
    std::vector<double> row{g.x(j)};
    for (const auto& q : Q) row.push_back(q.values[static_cast<Eigen::Index>(j)].real());
    csv.row(row);
  }
  const bool pass = all_pass(checks);
  write_json(dir / "verdict.json", {{"mode", "groundstate"}, {"pass", pass}, {"solitons", rows}, {"checks", checks_json(checks)}},
             cfg.hash());
  return pass ? kExitPass : kExitCheckFailed;
}

int spectrum(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  const Grid g = cfg.grid->grid();
  const int trials = cfg.spectrum ? cfg.spectrum->coercivity_trials : 0;
  CsvWriter csv(dir / "spectrum.csv", cfg.hash(),
                {"p", "gamma", "omega", "mu1", "mu2", "frak_y", "frak_z", "residual_Y", "residual_Z"});
  std::vector<Check> checks;
  for (std::size_t k = 0; k < cfg.profile->size(); ++k) {
    // a moving soliton is linearized in its rest frame, where it is free
    SolitonParams s = cfg.profile->solitons[k];
    s.gamma = s.profile_gamma();
    s.v = s.x0 = s.theta = 0.0;
    const LinearizedOps ops = build_linearized(s, g);
    const SpectralData sd = compute_spectrum(ops);
    csv.row(std::vector<std::string>{format_real(s.p), format_real(s.profile_gamma()), format_real(s.omega),
                                     format_real(sd.mu1), opt_real(sd.mu2), format_real(sd.frak_y),
                                     opt_real(sd.frak_z), format_real(sd.residual_Y), opt_real(sd.residual_Z)});
    const std::string tag = "_" + std::to_string(k + 1);
    const bool want_odd = s.profile_gamma() < 0.0;
    checks.push_back({"odd_mode_present" + tag, sd.has_odd_mode() ? 1.0 : 0.0, want_odd ? 1.0 : 0.0,
                      sd.has_odd_mode() == want_odd});
    const double res = std::max(sd.residual_Y, sd.residual_Z.value_or(0.0));
    checks.push_back({"eigen_residual" + tag, res, 1e-5, res <= 1e-5});
    if (trials > 0) {
      const CoercivityReport cr = coercivity_check(ops, sd, trials, cfg.seed);
      checks.push_back({"coercivity_min_quotient" + tag, cr.min_quotient, 0.0, cr.min_quotient > 0.0});
    }
    log << "soliton " << k + 1 << ": y=" << sd.frak_y << (sd.frak_z ? ", z=" + format_real(*sd.frak_z) : "") << '\n';
  }
  const bool pass = all_pass(checks);
  write_json(dir / "verdict.json", {{"mode", "spectrum"}, {"pass", pass}, {"checks", checks_json(checks)}}, cfg.hash());
  return pass ? kExitPass : kExitCheckFailed;
}

int evolve_mode(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  const Grid g = cfg.grid->grid();
  const EvolveSpec& e = *cfg.evolution;
  double t0 = e.t0;
  GridFunction u0(g);
  if (e.initial_checkpoint) {
    Checkpoint cp = read_checkpoint(*e.initial_checkpoint);
    if (cp.u.grid != g) throw IoError("checkpoint grid differs from the configured grid");
    t0 = cp.t;
    u0 = std::move(cp.u);
  } else {
    u0 = build_profile(*cfg.profile, t0, g);
  }
  const auto traj = evolve(u0, t0, e.t1, e.cfg);
  CsvWriter csv(dir / "trajectory.csv", cfg.hash(), {"t", "M", "E_gamma", "H1_distance_to_profile"});
  double drift = 0.0;
  for (const auto& s : traj) {
    csv.row(std::vector<double>{s.t, s.M, s.E_gamma, h1_norm(s.u - build_profile(*cfg.profile, s.t, g))});
    drift = std::max(drift, std::abs(s.M - traj.front().M) / traj.front().M);
  }
  const fs::path cp_path = dir / "final.dsol";
  write_checkpoint(cp_path, traj.back().t, traj.back().u, cfg.hash());
  const Checkpoint back = read_checkpoint(cp_path);
  if (back.t != traj.back().t || back.u.values != traj.back().u.values) throw IoError("checkpoint round trip changed the state");
  log << "evolved " << t0 << " -> " << traj.back().t << ", relative mass drift " << drift << '\n';
  const std::vector<Check> checks{{"mass_drift", drift, 1e-8, drift <= 1e-8}};
  const bool pass = all_pass(checks);
  write_json(dir / "verdict.json",
             {{"mode", "evolve"}, {"pass", pass}, {"t0", t0}, {"t1", traj.back().t}, {"checkpoint", "final.dsol"},
              {"checks", checks_json(checks)}},
             cfg.hash());
  return pass ? kExitPass : kExitCheckFailed;
}

json margins_json(const EnvelopeMargins& m) {
  return {{"dist", m.dist}, {"w", m.w}, {"modulation", m.modulation}, {"unstable", m.unstable}, {"ok", m.ok()}};
}

int shoot_mode(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  const ShootingProblem pb(*cfg.profile, cfg.grid->grid(), *cfg.shooting);
  log << "c0 = " << pb.c0() << ", unknowns " << pb.dim() << '\n';
  ShootingResult r;
  try {
    r = shoot(pb);
  } catch (const ConvergenceError& e) {
    log << "shooting failed: " << e.what() << '\n';
    write_json(dir / "verdict.json", {{"mode", "shoot"}, {"pass", false}, {"reason", e.what()}, {"c0", pb.c0()}}, cfg.hash());
    return kExitCheckFailed;
  }
  const std::size_t K = pb.params().size();
  std::vector<std::string> cols{"t", "dist_h1", "w_h1", "y_max", "mu_max"};
  for (std::size_t k = 0; k < K; ++k) cols.push_back("a" + std::to_string(k + 1) + "_plus");
  if (pb.with_beta()) cols.push_back("b_plus");
  for (std::size_t k = 0; k < K; ++k) cols.push_back("a" + std::to_string(k + 1) + "_minus");
  if (pb.with_beta()) cols.push_back("b_minus");
  CsvWriter csv(dir / "trajectory.csv", cfg.hash(), cols);
  for (const auto& p : r.trajectory) {
    std::vector<double> row{p.t, p.dist_h1, p.w_h1, p.y_max, p.mu_max};
    row.insert(row.end(), p.l.plus.begin(), p.l.plus.end());
    row.insert(row.end(), p.l.minus.begin(), p.l.minus.end());
    csv.row(row);
  }
  json alpha = json::array();
  for (const auto& a : r.coeffs.alpha) alpha.push_back({{"plus", a[0]}, {"minus", a[1]}});
  json coeffs{{"alpha", alpha}, {"frak_l_plus", r.frak_l_plus}, {"norm", r.coeffs.norm()}, {"Tn", r.Tn}};
  if (r.coeffs.beta) coeffs["beta"] = {{"plus", (*r.coeffs.beta)[0]}, {"minus", (*r.coeffs.beta)[1]}};
  write_json(dir / "coeffs.json", coeffs, cfg.hash());

  const DecayVerdict dv = verify_decay(r, r.c0);
  const double bound = std::exp(-r.c0 * r.Tn);
  const bool pass = dv.pass && r.margins.ok() && r.coeffs.norm() <= bound;
  write_json(dir / "verdict.json",
             {{"mode", "shoot"},
              {"pass", pass},
              {"C", dv.C},
              {"rate", dv.rate},
              {"c0", r.c0},
              {"rate_ok", dv.pass},
              {"coeff_norm", r.coeffs.norm()},
              {"coeff_bound", bound},
              {"margins", margins_json(r.margins)},
              {"residual", r.residual},
              {"outer_iterations", r.outer_iterations},
              {"backward_runs", r.backward_runs},
              {"T0", r.T0},
              {"Tn", r.Tn}},
             cfg.hash());
  log << "rate " << dv.rate << " (c0 " << r.c0 << "), |coeffs| " << r.coeffs.norm() << ", pass " << pass << '\n';
  return pass ? kExitPass : kExitCheckFailed;
}

int norm_equiv_mode(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  const Grid g = cfg.grid->grid();
  const NormEquivSpec& f = *cfg.frac;
  const auto rows = norm_equivalence(default_battery(), g, f.s, f.gamma, f.quad_nodes);
  CsvWriter csv(dir / "norm_equivalence.csv", cfg.hash(), {"s", "gamma", "lambda", "test_function_id", "ratio", "inverse_ratio"});
  double odd_dev = 0.0;
  for (const auto& r : rows) {
    csv.row(std::vector<std::string>{format_real(r.s), format_real(r.gamma), format_real(r.lambda), r.id,
                                     format_real(r.ratio), format_real(r.inverse_ratio)});
    if (r.id == "odd_gauss") odd_dev = std::max(odd_dev, std::abs(r.ratio - 1.0));
  }
  const GridFunction gauss = GridFunction::sample_real(g, [](double x) { return std::exp(-x * x); });
  double worst_exp = -1e300;
  for (double s : f.s)
    for (double gm : f.gamma) {
      const DecayReport d = c_f0_decay_check(gauss, frac_params(s, gm, f.quad_nodes), log_samples(1.0, 1e4, 41));
      worst_exp = std::max(worst_exp, d.exponent);
    }
  const double C = equivalence_constant(rows);
  const std::vector<Check> checks{{"odd_ratio_deviation", odd_dev, 1e-10, odd_dev <= 1e-10},
                                  {"cf0_decay_exponent", worst_exp, -0.70, worst_exp <= -0.70},
                                  {"equivalence_constant_finite", C, 0.0, std::isfinite(C)}};
  const bool pass = all_pass(checks);
  write_json(dir / "verdict.json", {{"mode", "norm-equiv"}, {"pass", pass}, {"C", C}, {"checks", checks_json(checks)}},
             cfg.hash());
  log << "equivalence constant C = " << C << '\n';
  return pass ? kExitPass : kExitCheckFailed;
}

// Short invariant suite on the first soliton of the profile.
int verify_mode(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  const Grid g = cfg.grid->grid();
  const SolitonParams s = cfg.profile->solitons.front();
  std::vector<Check> checks;

  const double want = closed_form_peak(s), got = std::pow(eval_Q(s, 0.0), s.p - 1.0);
  checks.push_back({"peak_exactness", std::abs(got - want) / want, 1e-12, std::abs(got - want) <= 1e-12 * want});

  const StationaryResidual r1 = stationary_residual(s, g);
  const StationaryResidual r2 = stationary_residual(s, Grid(g.half_length(), 2 * g.n_points() - 1));
  const double order = std::log2(r1.interior / r2.interior);
  checks.push_back({"stationary_residual_order", order, 1.0, order >= 1.0});
  const double jump_order = std::log2(r1.jump / r2.jump);
  checks.push_back({"jump_defect_order", jump_order, 1.0, jump_order >= 1.0});

  const double dw = 1e-4 * s.omega;
  SolitonParams lo = s, hi = s;
  lo.omega -= dw;
  hi.omega += dw;
  const double fd = (mass_of_Q(hi) - mass_of_Q(lo)) / (2 * dw);
  const double vk = vk_derivative(s);
  checks.push_back({"vk_matches_difference", std::abs(vk - fd) / std::abs(fd), 1e-4, std::abs(vk - fd) <= 1e-4 * std::abs(fd)});
  if (s.p > 5.0) checks.push_back({"vk_negative", vk, 0.0, vk < 0.0});

  const LinearizedOps ops = build_linearized(s, g);
  const SpectralData sd = compute_spectrum(ops);
  const bool want_odd = s.profile_gamma() < 0.0;
  checks.push_back({"odd_mode_present", sd.has_odd_mode() ? 1.0 : 0.0, want_odd ? 1.0 : 0.0, sd.has_odd_mode() == want_odd});
  const double par = std::max(parity_defect(sd.Yplus, 1), sd.has_odd_mode() ? parity_defect(sd.Zplus, -1) : 0.0);
  checks.push_back({"eigenfunction_parity", par, 1e-10, par <= 1e-10});
  const int trials = cfg.spectrum && cfg.spectrum->coercivity_trials > 0 ? cfg.spectrum->coercivity_trials : 200;
  const CoercivityReport cr = coercivity_check(ops, sd, trials, cfg.seed);
  checks.push_back({"coercivity_min_quotient", cr.min_quotient, 0.0, cr.min_quotient > 0.0});

  EvolutionConfig ec;
  ec.p = s.p;
  ec.gamma = s.gamma;
  ec.dt = std::min(0.005, 0.5 * g.h());
  const auto traj = evolve(sample_Q(s, g), 0.0, 1.0, ec);
  const double drift = std::abs(traj.back().M - traj.front().M) / traj.front().M;
  checks.push_back({"mass_drift", drift, 1e-8, drift <= 1e-8});

  const GridFunction odd = GridFunction::sample_real(g, [](double x) { return x * std::exp(-x * x); });
  const FracParams fp = frac_params(1.0, -1.0);
  const double dev = std::abs(hgamma_norm(odd, fp) / hs_norm(odd, fp.s, fp.lambda) - 1.0);
  checks.push_back({"odd_norm_ratio_deviation", dev, 1e-10, dev <= 1e-10});

  for (const auto& c : checks) log << (c.pass ? "PASS " : "FAIL ") << c.name << " = " << c.value << '\n';
  const bool pass = all_pass(checks);
  write_json(dir / "verdict.json", {{"mode", "verify"}, {"pass", pass}, {"checks", checks_json(checks)}}, cfg.hash());
  return pass ? kExitPass : kExitCheckFailed;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / "config.json", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "config.json").string());
    out << nlohmann::json::parse(cfg.canonical).dump(2) << '\n';
  }
  log << "mode " << mode_name(cfg.mode) << ", config_hash " << hash_hex(cfg.hash()) << ", output " << dir.string() << '\n';
  switch (cfg.mode) {
    case Mode::groundstate: return groundstate(cfg, dir, log);
    case Mode::spectrum: return spectrum(cfg, dir, log);
    case Mode::evolve: return evolve_mode(cfg, dir, log);
    case Mode::shoot: return shoot_mode(cfg, dir, log);
    case Mode::norm_equiv: return norm_equiv_mode(cfg, dir, log);
    case Mode::verify: return verify_mode(cfg, dir, log);
  }
  return kExitOperational;
}

}  // namespace dsol
