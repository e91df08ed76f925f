#pragma once

#include <functional>
#include <vector>

#include "dsol/ground_state.hpp"

namespace dsol {

enum class Scheme { strang_cn };

struct EvolutionConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::strang_cn;
  double p = 7.0;
  double gamma = 0.0;
  int record_every = 1;
  // dt <= stability_factor * h unless the guard is switched off
  double stability_factor = 0.5;
  bool enforce_stability_guard = true;

  void validate(const Grid& grid) const;
};

struct StateSnapshot {
  double t;
  GridFunction u;
  double E_gamma;
  double M;
};

StateSnapshot make_snapshot(double t, const GridFunction& u, const EvolutionConfig& cfg);

// Thrown when the state stops being finite; carries the last finite state.
class EvolutionError : public Error {
 public:
  EvolutionError(const std::string& what, StateSnapshot last) : Error(what), last_(std::move(last)) {}
  const StateSnapshot& last_good() const { return last_; }

 private:
  StateSnapshot last_;
};

// Prefactored Strang/Crank-Nicolson stepper for a fixed grid and dt.
class Stepper {
 public:
  Stepper(const Grid& grid, const EvolutionConfig& cfg);
  void advance(CVec& u) const;
  const Grid& grid() const { return grid_; }
  double dt() const { return dt_; }

 private:
  void nonlinear_half(CVec& u) const;

  Grid grid_;
  double dt_;
  double p_;
  RVec diag_;
  double off_;
  TridiagonalLU<cplx> lu_;
};

GridFunction step(const GridFunction& u, const EvolutionConfig& cfg);

// Called at the initial time and after every step with the current state.
using Observer = std::function<void(double t, const GridFunction& u)>;

// Integrates from t0 to t1 (t1 < t0 runs backward through the conjugation
// symmetry). The step is shrunk so that an integer number of steps lands on t1.
// Snapshots: the initial state, every record_every steps, and the final state.
std::vector<StateSnapshot> evolve(const GridFunction& u0, double t0, double t1, const EvolutionConfig& cfg,
                                  const Observer& observer = {});
// Final state only.
GridFunction evolve_to(const GridFunction& u0, double t0, double t1, const EvolutionConfig& cfg);

// Weight w(x, t) with the derivatives the virial identities need.
struct VirialWeight {
  std::function<double(double, double)> value;
  std::function<double(double, double)> dx;
  std::function<double(double, double)> dxxx;  // only used for the momentum weight
  std::function<double(double, double)> dt;    // empty means time independent

  static VirialWeight constant(double c);
};

struct VirialReport {
  double mass_defect = 0.0;      // max over interior snapshots
  double momentum_defect = 0.0;
  int samples = 0;
};

// Compares d/dt int f|u|^2 with 2 Im int f_x conj(u) u_x (plus int f_t |u|^2)
// and d/dt Im int g conj(u) u_x with
//   int g_x (2|u_x|^2 - (p-1)/(p+1)|u|^{p+1}) - 1/2 int g_xxx |u|^2  (plus the g_t term),
// using centred differences in time over consecutive snapshots.
// The momentum weight must vanish near the origin.
VirialReport virial_diagnostics(const std::vector<StateSnapshot>& traj, const VirialWeight& f,
                                const VirialWeight& g, double p);

}  // namespace dsol
