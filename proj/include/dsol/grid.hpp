#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dsol/error.hpp"

namespace dsol {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// Uniform grid on [-R, R]; n_points is odd so that the middle node is x = 0.
class Grid {
 public:
  Grid(double half_length, std::size_t n_points);

  double half_length() const { return R_; }
  std::size_t n_points() const { return n_; }
  double h() const { return h_; }
  std::size_t center() const { return (n_ - 1) / 2; }
  double x(std::size_t j) const { return -R_ + static_cast<double>(j) * h_; }
  // Index offset of node j from the origin node.
  long offset(std::size_t j) const {
    return static_cast<long>(j) - static_cast<long>(center());
  }

  bool operator==(const Grid& o) const { return R_ == o.R_ && n_ == o.n_; }
  bool operator!=(const Grid& o) const { return !(*this == o); }

 private:
  double R_;
  std::size_t n_;
  double h_;
};

struct GridFunction {
  Grid grid;
  CVec values;

  explicit GridFunction(const Grid& g) : grid(g), values(CVec::Zero(g.n_points())) {}
  GridFunction(const Grid& g, CVec v);
  GridFunction(const Grid& g, const RVec& v);

  static GridFunction sample(const Grid& g, const std::function<cplx(double)>& fn);
  static GridFunction sample_real(const Grid& g, const std::function<double(double)>& fn);

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  cplx at_origin() const { return values[static_cast<Eigen::Index>(grid.center())]; }
  RVec real() const { return values.real(); }
  RVec imag() const { return values.imag(); }

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction& operator*=(cplx s) {
    values *= s;
    return *this;
  }
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(cplx s, GridFunction a);

void require_same_grid(const Grid& a, const Grid& b, const char* where);

// Reflection x -> -x (exact on the symmetric grid).
GridFunction reflect(const GridFunction& f);
GridFunction even_part(const GridFunction& f);
GridFunction odd_part(const GridFunction& f);
// max |f(x) - sign*f(-x)| / max|f|
double parity_defect(const GridFunction& f, int sign);

// Re sum f conj(g) h
double inner_product(const GridFunction& f, const GridFunction& g);
double l2_norm(const GridFunction& f);
// Forward-difference H1 norm: sqrt(||f'||^2 + ||f||^2).
double h1_norm(const GridFunction& f);
// DFT norm with multiplier (xi^2 + lambda)^(s/2), s in [0, 2].
double hs_norm(const GridFunction& f, double s, double lambda = 1.0);
// Re [sum D+f conj(D+g) h - gamma f(0) conj(g(0))]
double delta_quadratic_form(const GridFunction& f, const GridFunction& g, double gamma);

// Symmetric tridiagonal matrix with constant off-diagonal acting on the
// interior nodes 1..n-2; the two boundary unknowns are pinned to zero.
template <class T>
class TridiagonalLU {
 public:
  TridiagonalLU() = default;
  TridiagonalLU(Eigen::Matrix<T, Eigen::Dynamic, 1> diag, T off);
  // Solves in place on a full-length vector (boundary entries set to zero).
  void solve(Eigen::Matrix<T, Eigen::Dynamic, 1>& rhs) const;

 private:
  Eigen::Matrix<T, Eigen::Dynamic, 1> inv_pivot_;
  Eigen::Matrix<T, Eigen::Dynamic, 1> upper_;
  T off_{};
};

// M = (1/h^2) tridiag(-1, 2, -1), M[0][0] -= gamma/h, Dirichlet at +-R.
class DeltaOperator {
 public:
  DeltaOperator(const Grid& grid, double gamma);

  const Grid& grid() const { return grid_; }
  double gamma() const { return gamma_; }
  // Diagonal over the full grid (boundary entries unused).
  const RVec& diagonal() const { return diag_; }
  double off_diagonal() const { return off_; }

  GridFunction apply(const GridFunction& f) const;
  RVec apply(const RVec& f) const;
  // (M + shift) v = rhs
  GridFunction resolvent_solve(cplx shift, const GridFunction& rhs) const;

 private:
  Grid grid_;
  double gamma_;
  RVec diag_;
  double off_;
};

DeltaOperator build_delta_operator(const Grid& grid, double gamma);
GridFunction resolvent_solve(const DeltaOperator& op, double shift, const GridFunction& rhs);

// Applies y = (diag .* x) + off * (x_{j-1} + x_{j+1}) on interior nodes.
template <class Vec>
Vec apply_tridiagonal(const RVec& diag, double off, const Vec& x) {
  const Eigen::Index n = x.size();
  Vec y = Vec::Zero(n);
  for (Eigen::Index j = 1; j + 1 < n; ++j) {
    auto left = j - 1 >= 1 ? x[j - 1] : typename Vec::Scalar(0);
    auto right = j + 1 <= n - 2 ? x[j + 1] : typename Vec::Scalar(0);
    y[j] = diag[j] * x[j] + off * (left + right);
  }
  return y;
}

template <class T>
TridiagonalLU<T>::TridiagonalLU(Eigen::Matrix<T, Eigen::Dynamic, 1> diag, T off)
    : inv_pivot_(Eigen::Matrix<T, Eigen::Dynamic, 1>::Zero(diag.size())),
      upper_(Eigen::Matrix<T, Eigen::Dynamic, 1>::Zero(diag.size())),
      off_(off) {
  const Eigen::Index n = diag.size();
  if (n < 3) throw DomainError("tridiagonal system needs at least one interior node");
  T prev_upper = T(0);
  for (Eigen::Index j = 1; j + 1 < n; ++j) {
    T pivot = diag[j] - (j > 1 ? off * prev_upper : T(0));
    if (std::abs(pivot) <= 1e-300 || !std::isfinite(std::abs(pivot)))
      throw SingularSystem("zero pivot in tridiagonal factorization");
    inv_pivot_[j] = T(1) / pivot;
    upper_[j] = off * inv_pivot_[j];
    prev_upper = upper_[j];
  }
}

template <class T>
void TridiagonalLU<T>::solve(Eigen::Matrix<T, Eigen::Dynamic, 1>& rhs) const {
  const Eigen::Index n = rhs.size();
  rhs[0] = T(0);
  rhs[n - 1] = T(0);
  for (Eigen::Index j = 1; j + 1 < n; ++j) {
    T r = rhs[j] - (j > 1 ? off_ * rhs[j - 1] : T(0));
    rhs[j] = r * inv_pivot_[j];
  }
  for (Eigen::Index j = n - 3; j >= 1; --j) rhs[j] -= upper_[j] * rhs[j + 1];
}

}  // namespace dsol
