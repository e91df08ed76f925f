#include "dsol/ground_state.hpp"

#include <cmath>
#include <sstream>

#include "dsol/quadrature.hpp"

namespace dsol {

namespace {

struct Shape {
  double amp;    // ((p+1) omega / 2)^(1/(p-1))
  double b;      // (p-1) sqrt(omega) / 2
  double alpha;  // atanh(gamma / (2 sqrt(omega)))
  double expo;   // 2 / (p-1)
};

void check_profile(const SolitonParams& sp) {
  const double g = sp.profile_gamma();
  if (!(sp.p > 1.0)) throw DomainError("soliton power p must exceed 1");
  if (!(sp.omega > g * g / 4.0)) {
    std::ostringstream os;
    os << "standing-wave admissibility requires omega > gamma^2/4 (omega=" << sp.omega << ", gamma=" << g << ")";
    throw DomainError(os.str());
  }
}

Shape shape_of(const SolitonParams& sp) {
  check_profile(sp);
  const double sw = std::sqrt(sp.omega);
  return {std::pow((sp.p + 1.0) * sp.omega / 2.0, 1.0 / (sp.p - 1.0)), (sp.p - 1.0) * sw / 2.0,
          std::atanh(sp.profile_gamma() / (2.0 * sw)), 2.0 / (sp.p - 1.0)};
}

// log sech z evaluated without overflow
double log_sech(double z) {
  const double a = std::abs(z);
  return std::log(2.0) - a - std::log1p(std::exp(-2.0 * a));
}

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

}  // namespace

void SolitonParams::validate() const {
  if (!(p > 1.0)) throw DomainError("soliton power p must exceed 1");
  if (gamma > 0.0) throw DomainError("soliton gamma must be <= 0 (repulsive delta)");
  if (v == 0.0) {
    if (x0 != 0.0) throw DomainError("a resting soliton must sit at the origin (x0 = 0)");
  } else if (!(omega > 0.0)) {
    throw DomainError("a moving soliton needs omega > 0");
  }
  check_profile(*this);
}

double eval_Q(const SolitonParams& sp, double x) {
  const Shape s = shape_of(sp);
  const double z = s.b * std::abs(x) + s.alpha;
  return s.amp * std::exp(s.expo * log_sech(z));
}

ProfileJet eval_Q_jet(const SolitonParams& sp, double x) {
  const Shape s = shape_of(sp);
  const double z = s.b * std::abs(x) + s.alpha;
  const double q = s.amp * std::exp(s.expo * log_sech(z));
  const double th = std::tanh(z);
  const double sech2 = 1.0 - th * th;
  const double sw = std::sqrt(sp.omega);
  const double dq = -sw * th * sgn(x) * q;
  const double d2q = sp.omega * (th * th - 0.5 * (sp.p - 1.0) * sech2) * q;
  return {q, dq, d2q};
}

double eval_dQdx(const SolitonParams& sp, double x) { return eval_Q_jet(sp, x).dq; }
double eval_d2Qdx2(const SolitonParams& sp, double x) { return eval_Q_jet(sp, x).d2q; }

double eval_dQ_domega(const SolitonParams& sp, double x) {
  const Shape s = shape_of(sp);
  const double z = s.b * std::abs(x) + s.alpha;
  const double q = s.amp * std::exp(s.expo * log_sech(z));
  const double g = sp.profile_gamma();
  const double w = sp.omega;
  const double dalpha = -0.25 * g * std::pow(w, -1.5) / (1.0 - g * g / (4.0 * w));
  const double dz = s.b * std::abs(x) / (2.0 * w) + dalpha;
  return q / (sp.p - 1.0) * (1.0 / w - 2.0 * std::tanh(z) * dz);
}

GridFunction sample_Q(const SolitonParams& sp, const Grid& grid) {
  return GridFunction::sample_real(grid, [&](double x) { return eval_Q(sp, x); });
}

StationaryResidual stationary_residual(const SolitonParams& sp, const Grid& grid) {
  if (sp.v != 0.0) throw DomainError("stationary_residual needs a resting profile");
  const RVec q = sample_Q(sp, grid).real();
  const double h = grid.h();
  const Eigen::Index c = static_cast<Eigen::Index>(grid.center());
  double interior = 0.0;
  for (Eigen::Index j = 1; j + 1 < q.size(); ++j) {
    if (j == c) continue;
    double lap = (q[j + 1] - 2.0 * q[j] + q[j - 1]) / (h * h);
    interior = std::max(interior, std::abs(-lap + sp.omega * q[j] - std::pow(q[j], sp.p)));
  }
  if (c < 2) throw DomainError("stationary_residual needs at least two nodes on each side");
  const double right = (-3.0 * q[c] + 4.0 * q[c + 1] - q[c + 2]) / (2.0 * h);
  const double left = (3.0 * q[c] - 4.0 * q[c - 1] + q[c - 2]) / (2.0 * h);
  return {interior, std::abs(right - left + sp.profile_gamma() * q[c])};
}

Conserved conserved_functionals(const GridFunction& u, double gamma, double p) {
  const double h = u.grid.h();
  const Eigen::Index n = u.values.size();
  const double grad = (u.values.tail(n - 1) - u.values.head(n - 1)).squaredNorm() / h;
  double pot = 0.0;
  const bool odd_int = p == std::floor(p) && static_cast<long>(p) % 2 == 1;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double a2 = std::norm(u.values[j]);
    pot += odd_int ? std::pow(a2, static_cast<int>((p + 1) / 2)) : std::pow(a2, 0.5 * (p + 1.0));
  }
  pot *= h;
  const double M = u.values.squaredNorm() * h;
  const double E = 0.5 * grad - 0.5 * gamma * std::norm(u.at_origin()) - pot / (p + 1.0);
  return {E, M};
}

double mass_of_Q(const SolitonParams& sp) {
  const Shape s = shape_of(sp);
  // Q^2 ~ exp(-2 sqrt(omega) x); integrate until the tail is below 1e-35.
  const double xmax = (80.0 / 2.0 + std::max(0.0, -s.alpha) * s.expo) / std::sqrt(sp.omega) + 1.0;
  return 2.0 * integrate([&](double x) {
    const double q = eval_Q(sp, x);
    return q * q;
  }, 0.0, xmax, 256, 16);
}

double vk_derivative(const SolitonParams& sp) {
  if (sp.v != 0.0) throw DomainError("vk_derivative needs a resting profile");
  if (!(sp.p > 5.0)) throw DomainError("vk_derivative is defined for the supercritical range p > 5");
  if (sp.gamma > 0.0) throw DomainError("vk_derivative needs gamma <= 0");
  const double w = sp.omega, g = sp.gamma, p = sp.p;
  const double mass = mass_of_Q(sp);
  const double q0 = eval_Q(sp, 0.0);
  const double dalpha = -0.25 * g * std::pow(w, -1.5) / (1.0 - g * g / (4.0 * w));
  // ||Q||^2 = 2 A^(2/(p-1)) / b * int_alpha^inf sech^(4/(p-1)); differentiate
  // the prefactor (power of omega) and the lower limit.
  return (2.0 / w) * (1.0 / (p - 1.0) - 0.25) * mass - (4.0 / (p - 1.0)) * (dalpha / std::sqrt(w)) * q0 * q0;
}

RVec discrete_ground_state(const SolitonParams& sp, const Grid& grid, double tol) {
  if (sp.v != 0.0) throw DomainError("discrete_ground_state needs a resting profile");
  const RVec full = sample_Q(sp, grid).real();
  const Eigen::Index n = full.size();
  const Eigen::Index c = static_cast<Eigen::Index>(grid.center());
  const double h = grid.h(), ih2 = 1.0 / (h * h);
  const double g = sp.profile_gamma();
  // Unknowns on the right half c..n-2 under even symmetry.
  const Eigen::Index m = n - 1 - c;
  RVec q = full.segment(c, m);
  auto power = [&](double a, double e) { return std::pow(std::max(a, 0.0), e); };
  RVec F(m), sub(m), diag(m), sup(m);
  for (int it = 0; it < 60; ++it) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double right = i + 1 < m ? q[i + 1] : 0.0;
      double lap;
      if (i == 0) {
        lap = (2.0 * q[0] - 2.0 * right) * ih2 - g * q[0] / h;
        diag[i] = 2.0 * ih2 - g / h;
        sup[i] = -2.0 * ih2;
        sub[i] = 0.0;
      } else {
        lap = (2.0 * q[i] - q[i - 1] - right) * ih2;
        diag[i] = 2.0 * ih2;
        sup[i] = -ih2;
        sub[i] = -ih2;
      }
      F[i] = lap + sp.omega * q[i] - power(q[i], sp.p);
      diag[i] += sp.omega - sp.p * power(q[i], sp.p - 1.0);
    }
    // Thomas for the (non-symmetric) half-line Jacobian.
    RVec cp(m), dp(m);
    cp[0] = sup[0] / diag[0];
    dp[0] = F[0] / diag[0];
    for (Eigen::Index i = 1; i < m; ++i) {
      const double den = diag[i] - sub[i] * cp[i - 1];
      if (std::abs(den) < 1e-300) throw SingularSystem("discrete_ground_state: singular Newton matrix");
      cp[i] = sup[i] / den;
      dp[i] = (F[i] - sub[i] * dp[i - 1]) / den;
    }
    RVec dq(m);
    dq[m - 1] = dp[m - 1];
    for (Eigen::Index i = m - 2; i >= 0; --i) dq[i] = dp[i] - cp[i] * dq[i + 1];
    q -= dq;
    if (dq.cwiseAbs().maxCoeff() <= tol * q.cwiseAbs().maxCoeff()) {
      RVec out = RVec::Zero(n);
      for (Eigen::Index i = 0; i < m; ++i) {
        out[c + i] = q[i];
        out[c - i] = q[i];
      }
      out[0] = 0.0;
      out[n - 1] = 0.0;
      return out;
    }
  }
  throw ConvergenceError("discrete_ground_state: Newton did not converge", 60, F.cwiseAbs().maxCoeff());
}

}  // namespace dsol
