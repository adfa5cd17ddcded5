#include "selection/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "selection/operators.hpp"
#include "selection/profiles.hpp"

namespace selection {

namespace {

// (e^{rt} - 1) / r, equal to t at r = 0.
double growth_integral(double r, double t) { return r == 0.0 ? t : std::expm1(r * t) / r; }

double camille_denominator(const GridMeasure& mu0, const FunctionSamples& r, double t) {
  std::vector<double> cells(r.cell_values().size());
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = growth_integral(r.cell_values()[i], t);
  std::vector<double> atoms(r.atom_values().size());
  for (std::size_t k = 0; k < atoms.size(); ++k) atoms[k] = growth_integral(r.atom_values()[k], t);
  const FunctionSamples gi(mu0.grid(), std::move(cells), mu0.atom_locations(), std::move(atoms));
  return 1.0 + pair(mu0, gi);
}

void require_layout(const GridMeasure& mu0, const FunctionSamples& r, const char* where) {
  if (!r.compatible_with(mu0)) throw GridMismatchError(std::string(where) + ": r does not match the layout");
}

}  // namespace

double camille_mass(const GridMeasure& mu0, const FunctionSamples& r, double t) {
  return total_mass(camille_density(mu0, r, t));
}

GridMeasure camille_density(const GridMeasure& mu0, const FunctionSamples& r, double t) {
  require_layout(mu0, r, "camille_density");
  if (!(t >= 0.0)) throw std::invalid_argument("camille_density: t must be nonnegative");
  if (t == 0.0) return mu0;
  const double denom = camille_denominator(mu0, r, t);
  std::vector<double> d(mu0.density().begin(), mu0.density().end());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = d[i] * std::exp(r.cell_values()[i] * t) / denom;
  std::vector<double> w(mu0.atoms().size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = mu0.atoms()[k].weight * std::exp(r.atom_values()[k] * t) / denom;
  return mu0.with_values(std::move(d), std::move(w));
}

GridMeasure plateau_limit(const GridMeasure& mu0, const FunctionSamples& r, double r_max) {
  require_layout(mu0, r, "plateau_limit");
  const double tol = 1e-12 * std::max(1.0, std::abs(r_max));
  std::vector<double> d(mu0.density().size(), 0.0);
  std::vector<double> w(mu0.atoms().size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (std::abs(r.cell_values()[i] - r_max) <= tol) d[i] = mu0.density()[i];
  }
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (std::abs(r.atom_values()[k] - r_max) <= tol) w[k] = mu0.atoms()[k].weight;
  }
  const GridMeasure restricted = mu0.with_values(std::move(d), std::move(w));
  const double m = total_mass(restricted);
  if (!(m > mass_epsilon)) throw ZeroMassError("plateau_limit: mu0 does not charge the plateau");
  return restricted.scaled(r_max / m);
}

double cannibalism_limit(double r, double alpha, double M) {
  if (alpha == 1.0) throw std::domain_error("cannibalism_limit: alpha = 1 has no finite limit");
  if (!(alpha >= 0.0 && alpha < 1.0) || !(M > 0.0) || !(r > 0.0)) {
    throw std::invalid_argument("cannibalism_limit: need r > 0, alpha in [0, 1), M > 0");
  }
  return r / (M * (1.0 - alpha));
}

double kernel_steady_residual(double h, std::size_t n_cells) {
  const Grid g(-h, h, n_cells);
  const Kernel J = truncated_exponential_kernel(h);
  const GridMeasure mu = GridMeasure::from_density(g, [h](double x) { return kernel_Jh(h, x); });
  const FunctionSamples conv = convolve(mu, J);
  double res = 0.0;
  for (std::size_t i = 0; i < n_cells; ++i) {
    res = std::max(res, std::abs(kernel_ah(h, g.midpoint(i)) - conv.cell_values()[i]));
  }
  return res;
}

double kernel_untruncated_residual(double h, std::size_t n_cells) {
  const Grid g(-h, h, n_cells);
  const Kernel J = exponential_kernel();
  const GridMeasure mu = GridMeasure::from_density(g, [](double x) { return kernel_J(x); });
  const FunctionSamples conv = convolve(mu, J);
  double res = 0.0;
  for (std::size_t i = 0; i < n_cells; ++i) {
    res = std::max(res, std::abs(kernel_a(g.midpoint(i)) - conv.cell_values()[i]));
  }
  return res;
}

}  // namespace selection
