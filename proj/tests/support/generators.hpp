#pragma once

// Deterministic random inputs for property tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "selection/measure.hpp"

namespace selection::proptest {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  // Random density on `g`, zero on a random subset of cells, plus up to
  // `max_atoms` atoms, rescaled to total mass `mass`.
  GridMeasure measure(const Grid& g, double mass, std::size_t max_atoms = 0, double zero_fraction = 0.2) {
    std::vector<double> d(g.n_cells);
    const double bump_c = uniform(g.lo, g.hi);
    const double bump_w = uniform(0.05, 0.5) * (g.hi - g.lo);
    for (std::size_t i = 0; i < g.n_cells; ++i) {
      if (coin(zero_fraction)) continue;
      const double z = (g.midpoint(i) - bump_c) / bump_w;
      d[i] = uniform(0.0, 1.0) * 0.3 + std::exp(-z * z);
    }
    std::vector<Atom> atoms;
    const std::size_t n_atoms = max_atoms == 0 ? 0 : index(max_atoms + 1);
    for (std::size_t k = 0; k < n_atoms; ++k) {
      const double loc = uniform(g.lo, g.hi);
      const bool clash = std::any_of(atoms.begin(), atoms.end(), [&](const Atom& a) { return a.location == loc; });
      if (!clash) atoms.push_back({loc, uniform(0.05, 1.0)});
    }
    GridMeasure mu(g, std::move(d), std::move(atoms));
    const double m = total_mass(mu);
    return m > 0.0 ? mu.scaled(mass / m) : mu;
  }

  // Same layout as `layout`, fresh values.
  GridMeasure like(const GridMeasure& layout, double mass) {
    std::vector<double> d(layout.density().size());
    for (double& v : d) v = coin(0.2) ? 0.0 : uniform(0.0, 1.0);
    std::vector<double> w(layout.atoms().size());
    for (double& v : w) v = uniform(0.0, 1.0);
    GridMeasure mu = layout.with_values(std::move(d), std::move(w));
    const double m = total_mass(mu);
    return m > 0.0 ? mu.scaled(mass / m) : mu;
  }

  std::mt19937_64& engine() noexcept { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace selection::proptest
