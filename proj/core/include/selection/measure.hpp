#pragma once

// Finite nonnegative measures on a compact interval: a piecewise-constant
// density on uniform cells plus a list of weighted atoms. Atoms are never
// merged into cells, so singular parts survive every operation exactly.

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace selection {

// Division guard for normalisation; solutions may decay exponentially
// without ever reaching zero.
inline constexpr double mass_epsilon = 1e-30;

class ZeroMassError : public std::domain_error {
 public:
  explicit ZeroMassError(const std::string& what) : std::domain_error(what) {}
};

class GridMismatchError : public std::invalid_argument {
 public:
  explicit GridMismatchError(const std::string& what) : std::invalid_argument(what) {}
};

struct Grid {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n_cells = 1;

  Grid() = default;
  Grid(double lo, double hi, std::size_t n_cells);

  [[nodiscard]] double dx() const noexcept { return (hi - lo) / static_cast<double>(n_cells); }
  [[nodiscard]] double midpoint(std::size_t i) const noexcept {
    return lo + (static_cast<double>(i) + 0.5) * dx();
  }
  [[nodiscard]] double edge(std::size_t i) const noexcept {
    return lo + static_cast<double>(i) * dx();
  }
  [[nodiscard]] bool contains(double x) const noexcept { return x >= lo && x <= hi; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

struct Atom {
  double location = 0.0;
  double weight = 0.0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

class GridMeasure {
 public:
  // Validates nonnegativity, finiteness and atom placement; atoms are sorted
  // by location and must be pairwise distinct.
  GridMeasure(Grid grid, std::vector<double> density, std::vector<Atom> atoms = {});

  static GridMeasure zero(const Grid& grid, std::span<const double> atom_locations = {});
  static GridMeasure from_density(const Grid& grid, const std::function<double(double)>& f,
                                  std::vector<Atom> atoms = {});

  [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
  [[nodiscard]] std::span<const double> density() const noexcept { return density_; }
  [[nodiscard]] std::span<const Atom> atoms() const noexcept { return atoms_; }
  [[nodiscard]] std::vector<double> atom_locations() const;
  [[nodiscard]] std::size_t n_points() const noexcept { return density_.size() + atoms_.size(); }

  // Same grid and same atom locations.
  [[nodiscard]] bool same_layout(const GridMeasure& other) const noexcept;

  [[nodiscard]] GridMeasure scaled(double factor) const;

  // New values on this measure's layout. `atom_weights` follows atoms() order.
  [[nodiscard]] GridMeasure with_values(std::vector<double> density,
                                        std::vector<double> atom_weights) const;

  friend bool operator==(const GridMeasure&, const GridMeasure&) = default;

 private:
  struct Unchecked {};
  GridMeasure(Unchecked, Grid grid, std::vector<double> density, std::vector<Atom> atoms);
  void validate_values() const;

  Grid grid_;
  std::vector<double> density_;
  std::vector<Atom> atoms_;
};

// Values of a bounded function at the cell midpoints and atom locations of a
// measure layout.
class FunctionSamples {
 public:
  FunctionSamples(Grid grid, std::vector<double> cell_values, std::vector<double> atom_locations,
                  std::vector<double> atom_values);

  static FunctionSamples sample(const GridMeasure& layout, const std::function<double(double)>& f);
  static FunctionSamples constant(const GridMeasure& layout, double value);
  static FunctionSamples identity(const GridMeasure& layout);

  [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
  [[nodiscard]] std::span<const double> cell_values() const noexcept { return cells_; }
  [[nodiscard]] std::span<const double> atom_values() const noexcept { return atom_values_; }
  [[nodiscard]] std::span<const double> atom_locations() const noexcept { return atom_locations_; }
  [[nodiscard]] std::size_t n_points() const noexcept { return cells_.size() + atom_values_.size(); }

  // Value at evaluation point i (cells first, then atoms).
  [[nodiscard]] double at(std::size_t i) const noexcept {
    return i < cells_.size() ? cells_[i] : atom_values_[i - cells_.size()];
  }

  [[nodiscard]] bool compatible_with(const GridMeasure& mu) const noexcept;
  [[nodiscard]] bool compatible_with(const FunctionSamples& other) const noexcept;
  [[nodiscard]] double sup_abs() const noexcept;
  [[nodiscard]] double max() const noexcept;
  [[nodiscard]] double min() const noexcept;

  friend bool operator==(const FunctionSamples&, const FunctionSamples&) = default;

 private:
  Grid grid_;
  std::vector<double> cells_;
  std::vector<double> atom_locations_;
  std::vector<double> atom_values_;
};

// Cell midpoints followed by atom locations.
std::vector<double> evaluation_points(const GridMeasure& layout);

// sup_x |f(x) - g(x)| over the shared evaluation points.
double sup_distance(const FunctionSamples& f, const FunctionSamples& g);

double total_mass(const GridMeasure& mu) noexcept;
double pair(const GridMeasure& mu, const FunctionSamples& f);
double first_moment(const GridMeasure& mu);
double tv_distance(const GridMeasure& mu, const GridMeasure& nu);
GridMeasure normalize(const GridMeasure& mu);
double variance(const GridMeasure& mu);

enum class WindowEnd { closed_left, closed_right };

// How cells meet a window: `proportional` measures the exact overlap of the
// piecewise-constant density, `lumped` places each cell's mass at its
// midpoint (the midpoint-quadrature view, same convention as atoms).
enum class CellRule { proportional, lumped };

// Measure of [a,b) ∩ X (or (a,b] ∩ X). Requires a <= b.
double window_mass(const GridMeasure& mu, double a, double b,
                   WindowEnd end = WindowEnd::closed_left,
                   CellRule rule = CellRule::proportional);

// Prefix sums for O(1) window queries against a fixed measure. Holds a
// reference to `mu`; it must not outlive it.
class MassProfile {
 public:
  explicit MassProfile(const GridMeasure& mu);

  [[nodiscard]] double window(double a, double b, WindowEnd end = WindowEnd::closed_left,
                              CellRule rule = CellRule::proportional) const;

 private:
  [[nodiscard]] double cell_cdf(double x) const noexcept;
  [[nodiscard]] std::size_t first_midpoint_index(double a, bool strict) const noexcept;
  [[nodiscard]] double atom_range(double a, double b, WindowEnd end) const noexcept;

  const GridMeasure* mu_;
  std::vector<double> cell_prefix_;  // sum of density[j] for j < i
  std::vector<double> atom_prefix_;  // sum of weights for atoms before k
};

struct SupportSet {
  std::vector<std::size_t> cells;
  std::vector<double> atom_locations;

  friend bool operator==(const SupportSet&, const SupportSet&) = default;
};

SupportSet support_cells(const GridMeasure& mu, double threshold = 0.0);

// True when every element of `inner` also belongs to `outer`.
bool support_subset(const SupportSet& inner, const SupportSet& outer);

}  // namespace selection
