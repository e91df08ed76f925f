#pragma once

#include <cstdint>
#include <optional>

#include "dsol/ground_state.hpp"

namespace dsol {

// L+ = -Delta_gamma + omega - p Q^{p-1},  L- = -Delta_gamma + omega - Q^{p-1}
// around the discrete ground state, so that L- Q = 0 holds to round-off.
struct LinearizedOps {
  SolitonParams params;
  Grid grid;
  RVec Q;           // discrete ground state (zero at the boundary nodes)
  RVec diag_plus;   // diagonals over the full grid
  RVec diag_minus;
  double off;       // shared off-diagonal -1/h^2

  RVec apply_plus(const RVec& f) const { return apply_tridiagonal(diag_plus, off, f); }
  RVec apply_minus(const RVec& f) const { return apply_tridiagonal(diag_minus, off, f); }
  // Lcal(f1 + i f2) = -i L+ f1 + L- f2
  GridFunction apply_lcal(const GridFunction& f) const;
  GridFunction Q_function() const { return GridFunction(grid, Q); }
};

LinearizedOps build_linearized(const SolitonParams& params, const Grid& grid);

// g orthogonal to Q with L- g = f + cQ (f is projected onto Q-perp first).
RVec lminus_inverse_on_orthogonal(const LinearizedOps& ops, const RVec& f);
GridFunction lminus_inverse_on_orthogonal(const LinearizedOps& ops, const GridFunction& f);

struct EigenSolveOptions {
  double tol = 1e-12;       // relative change of the Rayleigh quotient
  double el_tol = 1e-6;     // Euler-Lagrange residual
  int max_iterations = 200;
};

struct RayleighMinimum {
  double mu = 0.0;
  RVec xi;           // normalized so that <(L-)^{-1} xi, xi> = 1
  double beta = 0.0; // Lagrange multiplier of the Q constraint (even sector)
  double residual = 0.0;
  int iterations = 0;
};

RayleighMinimum minimize_rayleigh_even(const LinearizedOps& ops, const EigenSolveOptions& opt = {});
// Empty when gamma == 0: the odd sector has no unstable direction then.
std::optional<RayleighMinimum> minimize_rayleigh_odd(const LinearizedOps& ops, const EigenSolveOptions& opt = {});

struct SpectralData {
  double mu1 = 0.0;
  std::optional<double> mu2;
  double frak_y = 0.0;
  std::optional<double> frak_z;
  double beta = 0.0;
  GridFunction xi1, xi2;
  GridFunction Yplus, Yminus, Zplus, Zminus;
  double residual_Y = 0.0;
  std::optional<double> residual_Z;

  explicit SpectralData(const Grid& g) : xi1(g), xi2(g), Yplus(g), Yminus(g), Zplus(g), Zminus(g) {}
  bool has_odd_mode() const { return frak_z.has_value(); }
};

// Builds Y+-, Z+- from the minimizers; throws ConvergenceError when the
// eigen-residual exceeds tol.
SpectralData build_eigenfunctions(const LinearizedOps& ops, const RayleighMinimum& even,
                                  const std::optional<RayleighMinimum>& odd, double tol = 1e-5);
// Convenience: both minimizations followed by build_eigenfunctions.
SpectralData compute_spectrum(const LinearizedOps& ops, const EigenSolveOptions& opt = {});

// ||Lcal A -/+ lambda A|| / ||A||
double eigen_residual(const LinearizedOps& ops, const GridFunction& A, double lambda);

// The two lowest eigenpairs of L+ (even ground mode, odd first excited mode).
struct LambdaPair {
  double lambda0 = 0.0, lambda1 = 0.0;
  GridFunction g0, g1;
  int negative_count = 0;  // eigenvalues of L+ below -threshold
  explicit LambdaPair(const Grid& g) : g0(g), g1(g) {}
};
LambdaPair lowest_eigenpairs_plus(const LinearizedOps& ops, double threshold = 1e-8);
// Sturm count of eigenvalues of the interior tridiagonal (diag, off) below x.
int count_eigenvalues_below(const RVec& diag, double off, double x);

// B(u, w) = B+(Re u, Re w) + B-(Im u, Im w) as explicit quadratures.
double bilinear_B(const LinearizedOps& ops, const GridFunction& u, const GridFunction& w);

struct CoercivityReport {
  double min_quotient = 0.0;
  int trials = 0;
  double max_projection_residual = 0.0;  // directions removed from themselves
};
// Random trial functions, projected off the directions of the coercivity
// statement; throws DomainError if a nonpositive quotient is found.
CoercivityReport coercivity_check(const LinearizedOps& ops, const SpectralData& spec, int trials,
                                  std::uint64_t seed = 1);
// The directions removed before the quotient is taken.
std::vector<GridFunction> coercivity_directions(const LinearizedOps& ops, const SpectralData& spec);

// Entries <A^a, A^b> for a, b in {+, -}.
Eigen::Matrix2d gram_matrix(const GridFunction& A_plus, const GridFunction& A_minus);

}  // namespace dsol
