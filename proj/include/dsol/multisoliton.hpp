#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dsol/evolution.hpp"
#include "dsol/modulation.hpp"

namespace dsol {

// Unstable-mode corrections of the final data: alpha_k^+- per soliton and
// beta^+- for the odd mode of the resting soliton.
struct FinalDataCoeffs {
  std::vector<std::array<double, 2>> alpha;
  std::optional<std::array<double, 2>> beta;

  static FinalDataCoeffs zero(std::size_t K, bool with_beta);
  std::size_t dim() const { return 2 * alpha.size() + (beta ? 2 : 0); }
  double norm() const;
  // (alpha_1^+, alpha_1^-, ..., beta^+, beta^-)
  Eigen::VectorXd flat() const;
  static FinalDataCoeffs from_flat(const Eigen::VectorXd& v, std::size_t K, bool with_beta);
};

// l^+ = (a_1^+, ..., a_K^+, b^+) and l^- likewise; b only with an odd mode.
struct UnstableVector {
  std::vector<double> plus, minus;
  double norm_plus() const;
  double norm_minus() const;
};
UnstableVector unstable_vector(const ModulationState& s);

// R(Tn) + i sum alpha Y~ + i sum beta Z~ (unmodulated modes at Tn)
GridFunction final_data(const ProfileParams& params, const std::vector<SolitonModes>& modes,
                        const FinalDataCoeffs& coeffs, double Tn, const Grid& grid);

struct FinalDataOptions {
  int max_iterations = 40;
  double tol = 1e-12;  // on |(l^+, l^-) - (target, 0)| relative to |target|
  double c0 = 0.0;     // > 0 enables the |target| <= e^{-3/2 c0 Tn} check
};

struct ModulatedFinalData {
  FinalDataCoeffs coeffs;
  Eigen::MatrixXd P;  // linear map coeffs -> (l^+, l^-) at the unmodulated profile
  double residual = 0.0;
  int iterations = 0;
};

// Coefficients whose final data decomposes with l^+(Tn) = target, l^-(Tn) = 0.
// Chord iteration with the Gram pairing matrix P.
ModulatedFinalData modulated_final_data(const ProfileParams& params, const std::vector<SolitonModes>& modes,
                                        const std::vector<double>& target, double Tn, const Grid& grid,
                                        const FinalDataOptions& opt = {});

struct ShootingConfig {
  double T0 = 5.0;
  double Tn = 20.0;
  double newton_tol = 1e-6;  // on |l^+(T0)|
  int max_outer = 20;        // Newton iterations per continuation stage
  double fd_step = 1e-6;     // size of the l^+(T0) response used for each Jacobian column
  double sample_dt = 0.1;
  double continuation_step = 2.0;
  double fit_margin = 1.0;  // decay fit stops this far before Tn
  EvolutionConfig evolution;
  DecomposeOptions decompose;

  // T0 < Tn, and at T0 every pair of solitons (and every moving soliton and
  // the origin) is at least L1 apart.
  void validate(const ProfileParams& params) const;
};

struct TrajectoryPoint {
  double t = 0.0;
  double dist_h1 = 0.0;  // ||u - R||_H1
  double w_h1 = 0.0;
  double y_max = 0.0, mu_max = 0.0;
  UnstableVector l;
};

struct BackwardRun {
  FinalDataCoeffs coeffs;
  std::vector<TrajectoryPoint> points;  // decreasing t
  std::optional<double> break_time;     // the decomposition failed here
  std::string break_reason;
  GridFunction u_last;

  explicit BackwardRun(const Grid& g) : u_last(g) {}
  bool reached(double t) const { return !break_time && !points.empty() && points.back().t <= t + 1e-9; }
};

// Precomputed data shared by all backward runs of one construction.
class ShootingProblem {
 public:
  ShootingProblem(ProfileParams params, Grid grid, ShootingConfig cfg);

  const ProfileParams& params() const { return params_; }
  const Grid& grid() const { return grid_; }
  const ShootingConfig& config() const { return cfg_; }
  const std::vector<SolitonModes>& modes() const { return modes_; }
  double c0() const { return c0_; }
  bool with_beta() const { return with_beta_; }
  std::size_t dim() const { return params_.size() + (with_beta_ ? 1 : 0); }
  // growth rate of each l^+ component backwards in time
  std::vector<double> growth_rates() const;

  // Final data from the target l^+, then integrate from Tn down to t_stop.
  BackwardRun run(const std::vector<double>& target, double t_stop) const;
  // Same, with the coefficients given directly.
  BackwardRun run_coeffs(const FinalDataCoeffs& coeffs, double t_stop) const;

 private:
  ProfileParams params_;
  Grid grid_;
  ShootingConfig cfg_;
  std::vector<SolitonModes> modes_;
  double c0_ = 0.0;
  bool with_beta_ = false;
};

// Largest value over [T0, Tn] of each envelope quantity; all must be <= 1:
// ||u-R||/eps0, e^{c0 t}||w||, e^{c0 t}max(|y|,|mu|), e^{3/2 c0 t}max|l+-|.
struct EnvelopeMargins {
  double dist = 0.0, w = 0.0, modulation = 0.0, unstable = 0.0;
  bool ok() const { return dist <= 1.0 && w <= 1.0 && modulation <= 1.0 && unstable <= 1.0; }
};
EnvelopeMargins envelope_margins(const std::vector<TrajectoryPoint>& pts, double c0, double eps0, double T0);

struct ShootingResult {
  FinalDataCoeffs coeffs;
  std::vector<double> frak_l_plus;
  std::vector<TrajectoryPoint> trajectory;
  std::optional<GridFunction> u_T0;
  double fitted_rate = 0.0;
  double C = 0.0;
  double c0 = 0.0;
  double T0 = 0.0, Tn = 0.0, fit_margin = 0.0;
  EnvelopeMargins margins;
  double residual = 0.0;  // |l^+(T0)|
  int outer_iterations = 0;
  int backward_runs = 0;
};

// Backward shooting with continuation in T0 and a finite-difference Newton
// solve of l^+(T0) = 0. Throws ConvergenceError when the envelopes fail.
ShootingResult shoot(const ShootingProblem& problem);
ShootingResult shoot(const ProfileParams& params, const Grid& grid, const ShootingConfig& cfg);

struct DecayVerdict {
  double C = 0.0, rate = 0.0;
  bool pass = false;
};
// Least-squares fit of log ||u-R||_H1 over [t_from, t_to]; C is the smallest
// constant with ||u-R|| <= C e^{-rate t} on the window.
DecayVerdict verify_decay(const std::vector<TrajectoryPoint>& pts, double c0, double t_from, double t_to);
DecayVerdict verify_decay(const ShootingResult& r, double c0);

struct GrowthFit {
  double exponent = 0.0;
  double t_from = 0.0, t_to = 0.0;
  int samples = 0;
};
// Exponent of |l^+| growth backwards in time, fitted where |l^+| has risen
// above 100x its smallest value and before the run breaks.
GrowthFit fit_backward_growth(const BackwardRun& run);

// Partition with an extra velocity-0 slot when no soliton rests.
struct VirtualPartition {
  ProfileParams params;
  CutoffPartition partition;
  std::vector<double> slot_velocity;
  std::vector<std::optional<std::size_t>> slot_soliton;  // empty at the virtual slot
  std::size_t virtual_slot = 0;
  double virtual_omega = 0.0;  // weight of the virtual slot's mass term
};
VirtualPartition virtual_velocity_partition(const ProfileParams& params);
double boosted_energy(const GridFunction& u, const VirtualPartition& vp, double t);

}  // namespace dsol
