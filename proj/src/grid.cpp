#include "dsol/grid.hpp"

#include <cmath>
#include <string>

#include "dsol/fourier.hpp"

namespace dsol {

Grid::Grid(double half_length, std::size_t n_points) : R_(half_length), n_(n_points) {
  if (!(half_length > 0.0) || !std::isfinite(half_length))
    throw DomainError("grid half_length must be positive and finite");
  if (n_points < 3 || n_points % 2 == 0)
    throw DomainError("grid n_points must be odd and >= 3 (got " + std::to_string(n_points) + ")");
  h_ = 2.0 * R_ / static_cast<double>(n_ - 1);
}

GridFunction::GridFunction(const Grid& g, CVec v) : grid(g), values(std::move(v)) {
  if (static_cast<std::size_t>(values.size()) != g.n_points())
    throw GridMismatch("value count does not match grid size");
}

GridFunction::GridFunction(const Grid& g, const RVec& v) : grid(g), values(v.cast<cplx>()) {
  if (static_cast<std::size_t>(values.size()) != g.n_points())
    throw GridMismatch("value count does not match grid size");
}

GridFunction GridFunction::sample(const Grid& g, const std::function<cplx(double)>& fn) {
  GridFunction f(g);
  for (std::size_t j = 0; j < g.n_points(); ++j) f.values[static_cast<Eigen::Index>(j)] = fn(g.x(j));
  return f;
}

GridFunction GridFunction::sample_real(const Grid& g, const std::function<double(double)>& fn) {
  GridFunction f(g);
  for (std::size_t j = 0; j < g.n_points(); ++j) f.values[static_cast<Eigen::Index>(j)] = fn(g.x(j));
  return f;
}

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (a != b) throw GridMismatch(std::string(where) + ": grid mismatch");
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  require_same_grid(grid, o.grid, "operator+=");
  values += o.values;
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& o) {
  require_same_grid(grid, o.grid, "operator-=");
  values -= o.values;
  return *this;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(cplx s, GridFunction a) { return a *= s; }

GridFunction reflect(const GridFunction& f) {
  GridFunction r(f.grid);
  r.values = f.values.reverse();
  return r;
}

GridFunction even_part(const GridFunction& f) {
  GridFunction r(f.grid);
  r.values = 0.5 * (f.values + f.values.reverse());
  return r;
}

GridFunction odd_part(const GridFunction& f) {
  GridFunction r(f.grid);
  r.values = 0.5 * (f.values - f.values.reverse());
  return r;
}

double parity_defect(const GridFunction& f, int sign) {
  double scale = f.values.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  CVec d = f.values - static_cast<double>(sign) * CVec(f.values.reverse());
  return d.cwiseAbs().maxCoeff() / scale;
}

double inner_product(const GridFunction& f, const GridFunction& g) {
  require_same_grid(f.grid, g.grid, "inner_product");
  return (f.values.array() * g.values.array().conjugate()).real().sum() * f.grid.h();
}

double l2_norm(const GridFunction& f) { return std::sqrt(f.values.squaredNorm() * f.grid.h()); }

double h1_norm(const GridFunction& f) {
  const double h = f.grid.h();
  const Eigen::Index n = f.values.size();
  double grad = (f.values.tail(n - 1) - f.values.head(n - 1)).squaredNorm() / h;
  return std::sqrt(grad + f.values.squaredNorm() * h);
}

double hs_norm(const GridFunction& f, double s, double lambda) {
  if (!(s >= 0.0 && s <= 2.0)) throw DomainError("hs_norm: s must lie in [0, 2]");
  if (!(lambda > 0.0)) throw DomainError("hs_norm: lambda must be positive");
  Spectrum sp = forward_transform(f);
  const double N = static_cast<double>(sp.coeff.size());
  double acc = 0.0;
  for (Eigen::Index m = 0; m < sp.coeff.size(); ++m)
    acc += std::pow(sp.xi[m] * sp.xi[m] + lambda, s) * std::norm(sp.coeff[m]);
  return std::sqrt(acc / (N * f.grid.h()));
}

double delta_quadratic_form(const GridFunction& f, const GridFunction& g, double gamma) {
  require_same_grid(f.grid, g.grid, "delta_quadratic_form");
  const double h = f.grid.h();
  const Eigen::Index n = f.values.size();
  CVec df = f.values.tail(n - 1) - f.values.head(n - 1);
  CVec dg = g.values.tail(n - 1) - g.values.head(n - 1);
  double grad = (df.array() * dg.array().conjugate()).real().sum() / h;
  return grad - gamma * (f.at_origin() * std::conj(g.at_origin())).real();
}

DeltaOperator::DeltaOperator(const Grid& grid, double gamma)
    : grid_(grid), gamma_(gamma), diag_(RVec::Constant(grid.n_points(), 2.0 / (grid.h() * grid.h()))),
      off_(-1.0 / (grid.h() * grid.h())) {
  diag_[static_cast<Eigen::Index>(grid.center())] -= gamma / grid.h();
}

GridFunction DeltaOperator::apply(const GridFunction& f) const {
  require_same_grid(grid_, f.grid, "DeltaOperator::apply");
  return GridFunction(grid_, apply_tridiagonal(diag_, off_, f.values));
}

RVec DeltaOperator::apply(const RVec& f) const { return apply_tridiagonal(diag_, off_, f); }

GridFunction DeltaOperator::resolvent_solve(cplx shift, const GridFunction& rhs) const {
  require_same_grid(grid_, rhs.grid, "resolvent_solve");
  CVec d = diag_.cast<cplx>().array() + shift;
  TridiagonalLU<cplx> lu(d, cplx(off_));
  CVec v = rhs.values;
  lu.solve(v);
  return GridFunction(grid_, std::move(v));
}

DeltaOperator build_delta_operator(const Grid& grid, double gamma) { return DeltaOperator(grid, gamma); }

GridFunction resolvent_solve(const DeltaOperator& op, double shift, const GridFunction& rhs) {
  return op.resolvent_solve(cplx(shift), rhs);
}

}  // namespace dsol
