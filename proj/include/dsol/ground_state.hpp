#pragma once

#include "dsol/grid.hpp"

namespace dsol {

struct SolitonParams {
  double p = 7.0;
  double gamma = 0.0;  // equation coupling; the profile itself uses profile_gamma()
  double omega = 1.0;
  double v = 0.0;
  double x0 = 0.0;
  double theta = 0.0;

  // A moving soliton is a free one: only the resting profile feels the delta.
  double profile_gamma() const { return v == 0.0 ? gamma : 0.0; }
  // Throws DomainError on inadmissible combinations.
  void validate() const;
};

// Closed-form profile centred at the origin (x0, v, theta are ignored).
double eval_Q(const SolitonParams& sp, double x);
// Derivatives in x away from the origin; at x = 0 the kink makes eval_dQdx
// return the average of the one-sided limits.
double eval_dQdx(const SolitonParams& sp, double x);
double eval_d2Qdx2(const SolitonParams& sp, double x);
double eval_dQ_domega(const SolitonParams& sp, double x);

// Q, Q', Q'' at once; shares the transcendental work.
struct ProfileJet {
  double q, dq, d2q;
};
ProfileJet eval_Q_jet(const SolitonParams& sp, double x);

GridFunction sample_Q(const SolitonParams& sp, const Grid& grid);

struct StationaryResidual {
  double interior;  // max |-Q'' + omega Q - Q^p| over nodes off the origin
  double jump;      // |Q'(0+) - Q'(0-) + gamma Q(0)| from one-sided differences
};
StationaryResidual stationary_residual(const SolitonParams& sp, const Grid& grid);

struct Conserved {
  double E_gamma;
  double M;
};
Conserved conserved_functionals(const GridFunction& u, double gamma, double p);

// int Q^2 by high-order quadrature of the closed form.
double mass_of_Q(const SolitonParams& sp);
// d/d omega of int Q^2 in closed form.
double vk_derivative(const SolitonParams& sp);

// Solution of the discrete stationary equation (M + omega) Q = Q^p on the
// grid, found by Newton from the sampled closed form. Real, even, zero at +-R.
RVec discrete_ground_state(const SolitonParams& sp, const Grid& grid, double tol = 1e-13);

}  // namespace dsol
