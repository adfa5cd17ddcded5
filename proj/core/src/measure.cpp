#include "selection/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace selection {

namespace {

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!(a == b)) {
    std::ostringstream os;
    os << where << ": grid mismatch ([" << a.lo << ", " << a.hi << "] x " << a.n_cells << " vs ["
       << b.lo << ", " << b.hi << "] x " << b.n_cells << ")";
    throw GridMismatchError(os.str());
  }
}

}  // namespace

Grid::Grid(double lo_, double hi_, std::size_t n) : lo(lo_), hi(hi_), n_cells(n) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw std::invalid_argument("Grid: domain must satisfy lo < hi with finite endpoints");
  }
  if (n_cells == 0) {
    throw std::invalid_argument("Grid: n_cells must be positive");
  }
}

GridMeasure::GridMeasure(Grid grid, std::vector<double> density, std::vector<Atom> atoms)
    : grid_(grid), density_(std::move(density)), atoms_(std::move(atoms)) {
  if (density_.size() != grid_.n_cells) {
    throw std::invalid_argument("GridMeasure: density length does not match n_cells");
  }
  std::sort(atoms_.begin(), atoms_.end(),
            [](const Atom& a, const Atom& b) { return a.location < b.location; });
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    const double x = atoms_[k].location;
    if (!std::isfinite(x) || !grid_.contains(x)) {
      throw std::invalid_argument("GridMeasure: atom location outside the domain");
    }
    if (k > 0 && atoms_[k - 1].location == x) {
      throw std::invalid_argument("GridMeasure: duplicate atom location");
    }
  }
  validate_values();
}

GridMeasure::GridMeasure(Unchecked, Grid grid, std::vector<double> density, std::vector<Atom> atoms)
    : grid_(grid), density_(std::move(density)), atoms_(std::move(atoms)) {}

void GridMeasure::validate_values() const {
  for (double d : density_) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw std::invalid_argument("GridMeasure: density values must be finite and nonnegative");
    }
  }
  for (const Atom& a : atoms_) {
    if (!(a.weight >= 0.0) || !std::isfinite(a.weight)) {
      throw std::invalid_argument("GridMeasure: atom weights must be finite and nonnegative");
    }
  }
}

GridMeasure GridMeasure::zero(const Grid& grid, std::span<const double> atom_locations) {
  std::vector<Atom> atoms;
  atoms.reserve(atom_locations.size());
  for (double x : atom_locations) atoms.push_back({x, 0.0});
  return GridMeasure(grid, std::vector<double>(grid.n_cells, 0.0), std::move(atoms));
}

GridMeasure GridMeasure::from_density(const Grid& grid, const std::function<double(double)>& f,
                                      std::vector<Atom> atoms) {
  std::vector<double> density(grid.n_cells);
  for (std::size_t i = 0; i < grid.n_cells; ++i) density[i] = f(grid.midpoint(i));
  return GridMeasure(grid, std::move(density), std::move(atoms));
}

std::vector<double> GridMeasure::atom_locations() const {
  std::vector<double> out;
  out.reserve(atoms_.size());
  for (const Atom& a : atoms_) out.push_back(a.location);
  return out;
}

bool GridMeasure::same_layout(const GridMeasure& other) const noexcept {
  if (!(grid_ == other.grid_) || atoms_.size() != other.atoms_.size()) return false;
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    if (atoms_[k].location != other.atoms_[k].location) return false;
  }
  return true;
}

GridMeasure GridMeasure::scaled(double factor) const {
  if (!(factor >= 0.0) || !std::isfinite(factor)) {
    throw std::invalid_argument("GridMeasure::scaled: factor must be finite and nonnegative");
  }
  std::vector<double> density(density_);
  for (double& d : density) d *= factor;
  std::vector<Atom> atoms(atoms_);
  for (Atom& a : atoms) a.weight *= factor;
  return GridMeasure(Unchecked{}, grid_, std::move(density), std::move(atoms));
}

GridMeasure GridMeasure::with_values(std::vector<double> density,
                                     std::vector<double> atom_weights) const {
  if (density.size() != density_.size() || atom_weights.size() != atoms_.size()) {
    throw std::invalid_argument("GridMeasure::with_values: layout size mismatch");
  }
  std::vector<Atom> atoms(atoms_);
  for (std::size_t k = 0; k < atoms.size(); ++k) atoms[k].weight = atom_weights[k];
  GridMeasure out(Unchecked{}, grid_, std::move(density), std::move(atoms));
  out.validate_values();
  return out;
}

FunctionSamples::FunctionSamples(Grid grid, std::vector<double> cell_values,
                                 std::vector<double> atom_locations, std::vector<double> atom_values)
    : grid_(grid),
      cells_(std::move(cell_values)),
      atom_locations_(std::move(atom_locations)),
      atom_values_(std::move(atom_values)) {
  if (cells_.size() != grid_.n_cells || atom_locations_.size() != atom_values_.size()) {
    throw std::invalid_argument("FunctionSamples: sample counts do not match the layout");
  }
  for (double v : cells_) {
    if (!std::isfinite(v)) throw std::invalid_argument("FunctionSamples: non-finite value");
  }
  for (double v : atom_values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("FunctionSamples: non-finite value");
  }
}

FunctionSamples FunctionSamples::sample(const GridMeasure& layout,
                                        const std::function<double(double)>& f) {
  const Grid& g = layout.grid();
  std::vector<double> cells(g.n_cells);
  for (std::size_t i = 0; i < g.n_cells; ++i) cells[i] = f(g.midpoint(i));
  std::vector<double> locs = layout.atom_locations();
  std::vector<double> vals(locs.size());
  for (std::size_t k = 0; k < locs.size(); ++k) vals[k] = f(locs[k]);
  return FunctionSamples(g, std::move(cells), std::move(locs), std::move(vals));
}

FunctionSamples FunctionSamples::constant(const GridMeasure& layout, double value) {
  std::vector<double> locs = layout.atom_locations();
  std::vector<double> vals(locs.size(), value);
  return FunctionSamples(layout.grid(), std::vector<double>(layout.grid().n_cells, value),
                         std::move(locs), std::move(vals));
}

FunctionSamples FunctionSamples::identity(const GridMeasure& layout) {
  return sample(layout, [](double x) { return x; });
}

bool FunctionSamples::compatible_with(const GridMeasure& mu) const noexcept {
  if (!(grid_ == mu.grid()) || atom_locations_.size() != mu.atoms().size()) return false;
  for (std::size_t k = 0; k < atom_locations_.size(); ++k) {
    if (atom_locations_[k] != mu.atoms()[k].location) return false;
  }
  return true;
}

bool FunctionSamples::compatible_with(const FunctionSamples& other) const noexcept {
  return grid_ == other.grid_ && atom_locations_ == other.atom_locations_;
}

double FunctionSamples::sup_abs() const noexcept {
  double s = 0.0;
  for (double v : cells_) s = std::max(s, std::abs(v));
  for (double v : atom_values_) s = std::max(s, std::abs(v));
  return s;
}

double FunctionSamples::max() const noexcept {
  double s = -std::numeric_limits<double>::infinity();
  for (double v : cells_) s = std::max(s, v);
  for (double v : atom_values_) s = std::max(s, v);
  return s;
}

double FunctionSamples::min() const noexcept {
  double s = std::numeric_limits<double>::infinity();
  for (double v : cells_) s = std::min(s, v);
  for (double v : atom_values_) s = std::min(s, v);
  return s;
}

std::vector<double> evaluation_points(const GridMeasure& layout) {
  const Grid& g = layout.grid();
  std::vector<double> pts;
  pts.reserve(layout.n_points());
  for (std::size_t i = 0; i < g.n_cells; ++i) pts.push_back(g.midpoint(i));
  for (const Atom& a : layout.atoms()) pts.push_back(a.location);
  return pts;
}

double sup_distance(const FunctionSamples& f, const FunctionSamples& g) {
  if (!f.compatible_with(g)) throw GridMismatchError("sup_distance: incompatible samples");
  double s = 0.0;
  for (std::size_t i = 0; i < f.n_points(); ++i) s = std::max(s, std::abs(f.at(i) - g.at(i)));
  return s;
}

// total_mass and pair share one summation order so that pair(mu, 1) is
// bit-identical to total_mass(mu).
double total_mass(const GridMeasure& mu) noexcept {
  double cells = 0.0;
  for (double d : mu.density()) cells += d;
  double atoms = 0.0;
  for (const Atom& a : mu.atoms()) atoms += a.weight;
  return cells * mu.grid().dx() + atoms;
}

double pair(const GridMeasure& mu, const FunctionSamples& f) {
  if (!f.compatible_with(mu)) throw GridMismatchError("pair: samples do not match the measure layout");
  const auto dens = mu.density();
  const auto cv = f.cell_values();
  double cells = 0.0;
  for (std::size_t i = 0; i < dens.size(); ++i) cells += dens[i] * cv[i];
  double atoms = 0.0;
  const auto av = f.atom_values();
  for (std::size_t k = 0; k < mu.atoms().size(); ++k) atoms += mu.atoms()[k].weight * av[k];
  return cells * mu.grid().dx() + atoms;
}

double first_moment(const GridMeasure& mu) { return pair(mu, FunctionSamples::identity(mu)); }

double tv_distance(const GridMeasure& mu, const GridMeasure& nu) {
  require_same_grid(mu.grid(), nu.grid(), "tv_distance");
  const auto a = mu.density();
  const auto b = nu.density();
  double cells = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) cells += std::abs(a[i] - b[i]);

  // Merge the two sorted atom lists; a missing atom has weight 0.
  double atoms = 0.0;
  const auto ma = mu.atoms();
  const auto na = nu.atoms();
  std::size_t i = 0, j = 0;
  while (i < ma.size() || j < na.size()) {
    if (j == na.size() || (i < ma.size() && ma[i].location < na[j].location)) {
      atoms += ma[i++].weight;
    } else if (i == ma.size() || na[j].location < ma[i].location) {
      atoms += na[j++].weight;
    } else {
      atoms += std::abs(ma[i++].weight - na[j++].weight);
    }
  }
  return cells * mu.grid().dx() + atoms;
}

GridMeasure normalize(const GridMeasure& mu) {
  const double m = total_mass(mu);
  if (!(m > mass_epsilon)) throw ZeroMassError("normalize: total mass is zero");
  std::vector<double> density(mu.density().begin(), mu.density().end());
  for (double& d : density) d /= m;
  std::vector<double> weights;
  weights.reserve(mu.atoms().size());
  for (const Atom& a : mu.atoms()) weights.push_back(a.weight / m);
  return mu.with_values(std::move(density), std::move(weights));
}

double variance(const GridMeasure& mu) {
  const GridMeasure nu = normalize(mu);
  const FunctionSamples id = FunctionSamples::identity(nu);
  const FunctionSamples id2 = FunctionSamples::sample(nu, [](double x) { return x * x; });
  const double mean = pair(nu, id);
  return std::max(0.0, pair(nu, id2) - mean * mean);
}

double window_mass(const GridMeasure& mu, double a, double b, WindowEnd end, CellRule rule) {
  return MassProfile(mu).window(a, b, end, rule);
}

MassProfile::MassProfile(const GridMeasure& mu) : mu_(&mu) {
  const auto dens = mu.density();
  cell_prefix_.resize(dens.size() + 1);
  cell_prefix_[0] = 0.0;
  for (std::size_t i = 0; i < dens.size(); ++i) cell_prefix_[i + 1] = cell_prefix_[i] + dens[i];
  const auto atoms = mu.atoms();
  atom_prefix_.resize(atoms.size() + 1);
  atom_prefix_[0] = 0.0;
  for (std::size_t k = 0; k < atoms.size(); ++k) atom_prefix_[k + 1] = atom_prefix_[k] + atoms[k].weight;
}

double MassProfile::cell_cdf(double x) const noexcept {
  const Grid& g = mu_->grid();
  const double dx = g.dx();
  if (x <= g.lo) return 0.0;
  if (x >= g.hi) return cell_prefix_.back() * dx;
  auto i = static_cast<std::size_t>((x - g.lo) / dx);
  if (i >= g.n_cells) i = g.n_cells - 1;
  return cell_prefix_[i] * dx + mu_->density()[i] * (x - g.edge(i));
}

// Smallest i with midpoint(i) >= a (or > a when strict).
std::size_t MassProfile::first_midpoint_index(double a, bool strict) const noexcept {
  const Grid& g = mu_->grid();
  const double guess = std::ceil((a - g.lo) / g.dx() - 0.5);
  std::size_t i = guess <= 0.0 ? 0
                  : guess >= static_cast<double>(g.n_cells) ? g.n_cells
                                                            : static_cast<std::size_t>(guess);
  auto below = [&](std::size_t k) { return strict ? g.midpoint(k) <= a : g.midpoint(k) < a; };
  while (i > 0 && !below(i - 1)) --i;
  while (i < g.n_cells && below(i)) ++i;
  return i;
}

double MassProfile::atom_range(double a, double b, WindowEnd end) const noexcept {
  const auto atoms = mu_->atoms();
  if (atoms.empty()) return 0.0;
  auto loc_less = [](const Atom& at, double v) { return at.location < v; };
  auto loc_le = [](const Atom& at, double v) { return at.location <= v; };
  std::size_t first, last;
  if (end == WindowEnd::closed_left) {
    first = static_cast<std::size_t>(std::lower_bound(atoms.begin(), atoms.end(), a, loc_less) - atoms.begin());
    last = static_cast<std::size_t>(std::lower_bound(atoms.begin(), atoms.end(), b, loc_less) - atoms.begin());
  } else {
    first = static_cast<std::size_t>(std::partition_point(atoms.begin(), atoms.end(),
                                                          [&](const Atom& at) { return loc_le(at, a); }) -
                                     atoms.begin());
    last = static_cast<std::size_t>(std::partition_point(atoms.begin(), atoms.end(),
                                                         [&](const Atom& at) { return loc_le(at, b); }) -
                                    atoms.begin());
  }
  return last > first ? atom_prefix_[last] - atom_prefix_[first] : 0.0;
}

double MassProfile::window(double a, double b, WindowEnd end, CellRule rule) const {
  if (!(a <= b)) throw std::invalid_argument("window_mass: requires a <= b");
  double cells = 0.0;
  if (rule == CellRule::proportional) {
    cells = std::max(0.0, cell_cdf(b) - cell_cdf(a));
  } else {
    const bool left_closed = end == WindowEnd::closed_left;
    const std::size_t i0 = first_midpoint_index(a, !left_closed);
    const std::size_t i1 = first_midpoint_index(b, !left_closed);
    if (i1 > i0) cells = (cell_prefix_[i1] - cell_prefix_[i0]) * mu_->grid().dx();
  }
  return cells + atom_range(a, b, end);
}

SupportSet support_cells(const GridMeasure& mu, double threshold) {
  SupportSet s;
  const auto dens = mu.density();
  for (std::size_t i = 0; i < dens.size(); ++i) {
    if (dens[i] > threshold) s.cells.push_back(i);
  }
  for (const Atom& a : mu.atoms()) {
    if (a.weight > threshold) s.atom_locations.push_back(a.location);
  }
  return s;
}

bool support_subset(const SupportSet& inner, const SupportSet& outer) {
  return std::includes(outer.cells.begin(), outer.cells.end(), inner.cells.begin(), inner.cells.end()) &&
         std::includes(outer.atom_locations.begin(), outer.atom_locations.end(),
                       inner.atom_locations.begin(), inner.atom_locations.end());
}

}  // namespace selection
