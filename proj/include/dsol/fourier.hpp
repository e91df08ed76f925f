#pragma once

#include "dsol/grid.hpp"

namespace dsol {

// Periodic spectral representation of a grid function: the N = n-1 samples on
// [-R, R) with the node at -R dropped into the wrap (values there are zero).
// coeff[m] approximates the continuous transform  int f(x) e^{-i xi_m x} dx.
struct Spectrum {
  Grid grid;
  CVec coeff;
  RVec xi;
};

Spectrum forward_transform(const GridFunction& f);
// Inverse of forward_transform; the node at +R receives the periodic copy of -R.
GridFunction inverse_transform(const Spectrum& s);
// Angular frequencies of the N-point periodic grid, FFT ordering.
RVec frequencies(const Grid& g);
// Applies the Fourier multiplier m(xi) to f.
GridFunction apply_multiplier(const GridFunction& f, const std::function<double(double)>& m);
// (1/2pi) int A conj(B) dxi in the discrete sense: equals int a conj(b) dx.
cplx spectral_pairing(const Spectrum& a, const CVec& b_coeff);

}  // namespace dsol
