#include "dsol/fourier.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace dsol {

RVec frequencies(const Grid& g) {
  const Eigen::Index N = static_cast<Eigen::Index>(g.n_points() - 1);
  RVec xi(N);
  const double dxi = 2.0 * std::numbers::pi / (static_cast<double>(N) * g.h());
  for (Eigen::Index m = 0; m < N; ++m) {
    Eigen::Index mm = m <= N / 2 ? m : m - N;
    xi[m] = dxi * static_cast<double>(mm);
  }
  return xi;
}

Spectrum forward_transform(const GridFunction& f) {
  const Eigen::Index N = f.values.size() - 1;
  Eigen::FFT<double> fft;
  std::vector<cplx> in(f.values.data(), f.values.data() + N), out;
  fft.fwd(out, in);
  Spectrum s{f.grid, CVec(N), frequencies(f.grid)};
  const double h = f.grid.h();
  for (Eigen::Index m = 0; m < N; ++m) s.coeff[m] = (m % 2 == 0 ? h : -h) * out[static_cast<std::size_t>(m)];
  return s;
}

GridFunction inverse_transform(const Spectrum& s) {
  const Eigen::Index N = s.coeff.size();
  const double h = s.grid.h();
  std::vector<cplx> in(static_cast<std::size_t>(N)), out;
  for (Eigen::Index m = 0; m < N; ++m) in[static_cast<std::size_t>(m)] = (m % 2 == 0 ? 1.0 : -1.0) * s.coeff[m] / h;
  Eigen::FFT<double> fft;
  fft.inv(out, in);
  GridFunction f(s.grid);
  for (Eigen::Index j = 0; j < N; ++j) f.values[j] = out[static_cast<std::size_t>(j)];
  f.values[N] = f.values[0];
  return f;
}

GridFunction apply_multiplier(const GridFunction& f, const std::function<double(double)>& m) {
  Spectrum s = forward_transform(f);
  for (Eigen::Index k = 0; k < s.coeff.size(); ++k) s.coeff[k] *= m(s.xi[k]);
  return inverse_transform(s);
}

cplx spectral_pairing(const Spectrum& a, const CVec& b_coeff) {
  const double N = static_cast<double>(a.coeff.size());
  cplx acc = 0.0;
  for (Eigen::Index m = 0; m < a.coeff.size(); ++m) acc += a.coeff[m] * std::conj(b_coeff[m]);
  return acc / (N * a.grid.h());
}

}  // namespace dsol
