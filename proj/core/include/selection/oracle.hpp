#pragma once

// Closed-form reference solutions.

#include "selection/measure.hpp"

namespace selection {

// Uniform competition S[mu] = r - mu(X):
//   mu_t(X) = <mu0, e^{rt}> / (1 + <mu0, (e^{rt}-1)/r>)
double camille_mass(const GridMeasure& mu0, const FunctionSamples& r, double t);

//   mu_t = mu0 e^{rt} / (1 + <mu0, (e^{rt}-1)/r>)
GridMeasure camille_density(const GridMeasure& mu0, const FunctionSamples& r, double t);

// Large-time limit of the same problem: r_max 1_S mu0 / mu0(S), where S is
// the set of evaluation points with r(x) = r_max.
GridMeasure plateau_limit(const GridMeasure& mu0, const FunctionSamples& r, double r_max);

// r / (M (1 - alpha)); alpha in [0, 1), throws at alpha = 1.
double cannibalism_limit(double r, double alpha, double M);

// sup over the midpoints of [-h, h] (n_cells cells) of |a_h - J_h * J_h|,
// the convolution taken by the same quadrature the kernel operator uses.
double kernel_steady_residual(double h, std::size_t n_cells);

// Same with the untruncated J and a = J*J on [-h, h]; the missing tails make
// this decrease as h grows.
double kernel_untruncated_residual(double h, std::size_t n_cells);

}  // namespace selection
