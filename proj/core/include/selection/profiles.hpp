#pragma once

// Pointwise profiles used by the built-in operators: competition kernels,
// growth-rate profiles, and integer-parameter Beta densities for initial data.

#include <functional>
#include <optional>
#include <string>

namespace selection {

struct Kernel {
  std::string name;
  std::function<double(double)> eval;
  double sup_abs = 0.0;
  bool nonnegative = true;
  // Location |z| = jump_radius of a jump discontinuity. Convolution
  // quadrature uses jump_value (the mean of the one-sided limits) there,
  // which keeps the midpoint rule second order when the jump falls on a node.
  std::optional<double> jump_radius;
  double jump_value = 0.0;
};

// J(x) = e^{-|x|}/2.
double kernel_J(double x) noexcept;
// Untruncated source term a = J*J: (1+|x|)e^{-|x|}/4.
double kernel_a(double x) noexcept;
// J_h(x) = e^{-|x|}/(2(1-e^{-h})) on (-h,h), zero elsewhere.
double kernel_Jh(double h, double x);
// a_h = J_h*J_h on [-h,h]: ((1+|x|)e^{-|x|} - e^{-2h}e^{|x|}) / (4(1-e^{-h})^2).
double kernel_ah(double h, double x);
// Variant with cosh(x) in place of e^{|x|}; it misses J_h*J_h by O(e^{-h}).
double kernel_ah_printed(double h, double x);

Kernel exponential_kernel();
Kernel truncated_exponential_kernel(double h);

struct Profile {
  std::string name;
  std::function<double(double)> eval;
};

// r = r_max on [s0,s1]; outside, r = r_max - eta - ramp_depth*min(1, dist/ramp_width).
// The jump of size eta at the plateau edge makes the gap inf_{x∉S}(r_max - r(x)) equal eta.
struct PlateauParams {
  double r_max = 1.0;
  double eta = 0.3;
  double s0 = 0.4;
  double s1 = 0.6;
  double ramp_width = 0.2;
  double ramp_depth = 0.2;
};

Profile plateau_profile(const PlateauParams& p);
Profile constant_profile(double value);
// a(x) = a0 - a1*sqrt(x)
Profile sqrt_decreasing_profile(double a0, double a1);

// Beta(p,q) density for positive integer p, q; zero outside [0,1].
double beta_pdf(int p, int q, double x);

}  // namespace selection
