#include "selection/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selection {

namespace {

void require_positive_h(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("kernel: h must be positive");
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

}  // namespace

double kernel_J(double x) noexcept { return std::exp(-std::abs(x)) / 2.0; }

double kernel_a(double x) noexcept {
  const double ax = std::abs(x);
  return (1.0 + ax) * std::exp(-ax) / 4.0;
}

double kernel_Jh(double h, double x) {
  require_positive_h(h);
  const double ax = std::abs(x);
  if (ax >= h) return 0.0;
  return std::exp(-ax) / (2.0 * (1.0 - std::exp(-h)));
}

double kernel_ah(double h, double x) {
  require_positive_h(h);
  const double ax = std::abs(x);
  const double c = 1.0 - std::exp(-h);
  return ((1.0 + ax) * std::exp(-ax) - std::exp(-2.0 * h) * std::exp(ax)) / (4.0 * c * c);
}

double kernel_ah_printed(double h, double x) {
  require_positive_h(h);
  const double ax = std::abs(x);
  const double c = 1.0 - std::exp(-h);
  return ((1.0 + ax) * std::exp(-ax) - std::exp(-2.0 * h) * std::cosh(x)) / (4.0 * c * c);
}

Kernel exponential_kernel() {
  Kernel k;
  k.name = "J";
  k.eval = [](double z) { return kernel_J(z); };
  k.sup_abs = 0.5;
  return k;
}

Kernel truncated_exponential_kernel(double h) {
  require_positive_h(h);
  Kernel k;
  k.name = "J_h";
  k.eval = [h](double z) { return kernel_Jh(h, z); };
  k.sup_abs = 1.0 / (2.0 * (1.0 - std::exp(-h)));
  k.jump_radius = h;
  k.jump_value = 0.5 * std::exp(-h) / (2.0 * (1.0 - std::exp(-h)));
  return k;
}

Profile plateau_profile(const PlateauParams& p) {
  if (!(p.s0 <= p.s1) || !(p.eta > 0.0) || !(p.ramp_width > 0.0) || !(p.ramp_depth >= 0.0)) {
    throw std::invalid_argument("plateau profile: need s0 <= s1, eta > 0, ramp_width > 0, ramp_depth >= 0");
  }
  if (!(p.r_max - p.eta - p.ramp_depth > 0.0)) {
    throw std::invalid_argument("plateau profile: minimum rate r_max - eta - ramp_depth must be positive");
  }
  Profile out;
  out.name = "plateau";
  out.eval = [p](double x) {
    if (x >= p.s0 && x <= p.s1) return p.r_max;
    const double dist = x < p.s0 ? p.s0 - x : x - p.s1;
    return p.r_max - p.eta - p.ramp_depth * std::min(1.0, dist / p.ramp_width);
  };
  return out;
}

Profile constant_profile(double value) {
  Profile out;
  out.name = "constant";
  out.eval = [value](double) { return value; };
  return out;
}

Profile sqrt_decreasing_profile(double a0, double a1) {
  Profile out;
  out.name = "sqrt_decreasing";
  out.eval = [a0, a1](double x) { return a0 - a1 * std::sqrt(std::max(0.0, x)); };
  return out;
}

double beta_pdf(int p, int q, double x) {
  if (p < 1 || q < 1) throw std::invalid_argument("beta_pdf: parameters must be positive integers");
  if (x < 0.0 || x > 1.0) return 0.0;
  const double norm = factorial(p + q - 1) / (factorial(p - 1) * factorial(q - 1));
  return std::pow(x, p - 1) * std::pow(1.0 - x, q - 1) * norm;
}

}  // namespace selection
