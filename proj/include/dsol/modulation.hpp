#pragma once

#include <optional>
#include <vector>

#include "dsol/linearized.hpp"

namespace dsol {

// K solitons with strictly increasing velocities; all share p and the
// equation coupling gamma. The zero-velocity soliton (if any) is index k0.
struct ProfileParams {
  std::vector<SolitonParams> solitons;

  std::size_t size() const { return solitons.size(); }
  double p() const { return solitons.front().p; }
  double gamma() const { return solitons.front().gamma; }
  std::optional<std::size_t> k0() const;
  double min_omega() const;
  // Throws DomainError when the invariants fail.
  void validate() const;
};

// Position and phase corrections; y[k0] is pinned to 0 (the resting soliton
// cannot translate).
struct Modulation {
  std::vector<double> y;
  std::vector<double> mu;

  static Modulation zero(std::size_t K) { return {std::vector<double>(K, 0.0), std::vector<double>(K, 0.0)}; }
};

struct ModulationState {
  double t = 0.0;
  GridFunction w;
  Modulation mod;
  std::vector<double> a_plus, a_minus;
  std::optional<double> b_plus, b_minus;  // only with a resting soliton
  int newton_iterations = 0;
  double residual = 0.0;

  explicit ModulationState(const Grid& g) : w(g) {}
};

// R_k(t,x) = Q_k(x - v_k t - x_k - y_k) exp(i(v_k x/2 - v_k^2 t/4 + w_k t + theta_k + mu_k))
GridFunction soliton_component(const SolitonParams& sp, double t, double y, double mu, const Grid& grid);
// Same phase and position with Q_k replaced by Q_k'.
GridFunction soliton_derivative_component(const SolitonParams& sp, double t, double y, double mu, const Grid& grid);
GridFunction build_profile(const ProfileParams& params, double t, const Grid& grid);
GridFunction build_modulated_profile(const ProfileParams& params, double t, const Modulation& mod, const Grid& grid);

// Eigenfunctions of one soliton tabulated on a centred reference grid that
// shares the spacing of the evolution grid.
struct SolitonModes {
  SpectralData spec;
  Grid grid;

  // 4-point Lagrange interpolation; zero outside the table.
  cplx eval(const GridFunction& table, double X) const;
};

// Reference half-length defaults to 40/sqrt(omega).
SolitonModes build_modes(const SolitonParams& sp, double h, double ref_half_length = 0.0);
std::vector<SolitonModes> build_modes(const ProfileParams& params, double h);

enum class ModeKind { Yplus, Yminus, Zplus, Zminus };
// The modulated eigenfunction Y_k(X~_k) e^{i Theta~_k} (or Z) on grid.
GridFunction modulated_mode(const SolitonModes& m, ModeKind kind, const SolitonParams& sp, double t, double y,
                            double mu, const Grid& grid);

struct DecomposeOptions {
  double eps0 = 0.1;
  double L1 = 0.0;  // separation threshold; 0 means 10/sqrt(min omega)
  int max_iterations = 50;
  double tol = 1e-9;
  bool check_preconditions = true;
};

// Newton solve of the orthogonality conditions around R(t).
ModulationState decompose(const GridFunction& u, const ProfileParams& params, double t,
                          const DecomposeOptions& opt = {});
GridFunction recompose(const ModulationState& s, const ProfileParams& params);
// Orthogonality residuals (rho1 over k != k0, then rho2 over all k).
std::vector<double> orthogonality_residuals(const GridFunction& w, const ProfileParams& params, double t,
                                            const Modulation& mod);

// a_k^+- = Im int Y~_k^+- conj(w), b^+- likewise with Z~_{k0}; with this
// labelling d/dt a^+- = -+ y a^+- to leading order.
void unstable_coords(ModulationState& s, const ProfileParams& params, const std::vector<SolitonModes>& modes);

// sqrt(c0) = min{sqrt w_k, v_{k+1} - v_k, sqrt y_k, sqrt z_k0} / 10
double decay_rate_c0(const ProfileParams& params, const std::vector<SolitonModes>& modes);

// The C^3 step: 0 below -1, 1 above 1, c' int_{-1}^x exp(-1/(1-y^2)) dy between.
class StepFunction {
 public:
  StepFunction();
  double operator()(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

 private:
  std::vector<double> value_, slope_;  // PCHIP data on uniform nodes over [-1, 1]
  double cprime_;
};
const StepFunction& step_function();

struct CutoffPartition {
  double L = 1.0;
  std::vector<double> sigmas;  // sigma_k for k = 2..K

  static CutoffPartition make(const ProfileParams& params, double L = 0.0);  // L = 0: 20/min gap
  std::size_t size() const { return sigmas.size() + 1; }
  double psi(std::size_t k, double t, double x) const;
  double psi_dx(std::size_t k, double t, double x) const;
};

struct LocalizedFunctionals {
  std::vector<double> M, P;
};
LocalizedFunctionals localized_functionals(const GridFunction& u, const CutoffPartition& part, double t);

double boosted_energy(const GridFunction& u, const ProfileParams& params, const CutoffPartition& part, double t);
double h_gamma_form(const GridFunction& w, const ProfileParams& params, const Modulation& mod,
                    const CutoffPartition& part, double t);

}  // namespace dsol
