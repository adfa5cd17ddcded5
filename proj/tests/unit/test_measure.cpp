#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "selection/measure.hpp"
#include "selection/profiles.hpp"

using namespace selection;

namespace {

GridMeasure uniform(double value, std::size_t n = 1000) {
  return GridMeasure(Grid(0.0, 1.0, n), std::vector<double>(n, value));
}

GridMeasure atom_only(double loc, double w, std::size_t n = 10) {
  return GridMeasure(Grid(0.0, 1.0, n), std::vector<double>(n, 0.0), {{loc, w}});
}

}  // namespace

TEST(TotalMass, UniformDensity) { EXPECT_NEAR(total_mass(uniform(2.0)), 2.0, 1e-12); }

TEST(TotalMass, SingleAtom) { EXPECT_DOUBLE_EQ(total_mass(atom_only(0.5, 3.0)), 3.0); }

TEST(TotalMass, BetaPlusConstant) {
  const GridMeasure mu =
      GridMeasure::from_density(Grid(0.0, 1.0, 1000), [](double x) { return beta_pdf(2, 6, x) + 0.1; });
  EXPECT_NEAR(total_mass(mu), 1.1, 1e-3);
}

TEST(Pair, ConstantOneGivesMass) {
  proptest::Gen gen(1);
  const GridMeasure mu = gen.measure(Grid(0.0, 1.0, 200), 2.5, 3);
  EXPECT_NEAR(pair(mu, FunctionSamples::constant(mu, 1.0)), total_mass(mu), 1e-12);
}

TEST(Pair, IdentityOnAtom) {
  const GridMeasure mu = atom_only(0.5, 3.0);
  EXPECT_DOUBLE_EQ(pair(mu, FunctionSamples::identity(mu)), 1.5);
}

TEST(Pair, IdentityOnUniformMatchesIntegral) {
  const GridMeasure mu = uniform(1.0);
  EXPECT_NEAR(pair(mu, FunctionSamples::identity(mu)), 0.5, 1e-6);
}

TEST(TvDistance, IdentityIsZero) {
  proptest::Gen gen(2);
  const GridMeasure mu = gen.measure(Grid(0.0, 1.0, 50), 1.0, 2);
  EXPECT_EQ(tv_distance(mu, mu), 0.0);
}

TEST(TvDistance, DensityOneVersusZero) {
  EXPECT_NEAR(tv_distance(uniform(1.0), uniform(0.0)), 1.0, 1e-12);
}

TEST(TvDistance, SingularAtomsAdd) {
  const Grid g(0.0, 1.0, 10);
  const GridMeasure mu(g, std::vector<double>(10, 0.0), {{0.2, 1.0}, {0.8, 0.0}});
  const GridMeasure nu(g, std::vector<double>(10, 0.0), {{0.2, 0.0}, {0.8, 1.0}});
  EXPECT_DOUBLE_EQ(tv_distance(mu, nu), 2.0);
}

TEST(TvDistance, LayoutMismatchThrows) {
  EXPECT_THROW((void)tv_distance(uniform(1.0, 10), uniform(1.0, 20)), GridMismatchError);
}

TEST(TvDistance, PropertyMetric) {
  proptest::Gen gen(3);
  const GridMeasure layout = gen.measure(Grid(-1.0, 2.0, 64), 1.0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const GridMeasure a = gen.like(layout, gen.uniform(0.1, 3.0));
    const GridMeasure b = gen.like(layout, gen.uniform(0.1, 3.0));
    const GridMeasure c = gen.like(layout, gen.uniform(0.1, 3.0));
    EXPECT_DOUBLE_EQ(tv_distance(a, b), tv_distance(b, a));
    EXPECT_LE(tv_distance(a, c), tv_distance(a, b) + tv_distance(b, c) + 1e-12);
    EXPECT_GE(tv_distance(a, b), std::abs(total_mass(a) - total_mass(b)) - 1e-12);
  }
}

TEST(WindowMass, WholeDomain) {
  const GridMeasure mu = uniform(1.0);
  EXPECT_NEAR(window_mass(mu, 0.0, 1.0), 1.0, 1e-12);
}

TEST(WindowMass, HalfDomainOfDensityTwo) {
  const GridMeasure mu = uniform(2.0);
  EXPECT_NEAR(window_mass(mu, 0.25, 0.75), 1.0, 1e-12);
  EXPECT_NEAR(window_mass(mu, 0.25, 0.75, WindowEnd::closed_left, CellRule::lumped), 1.0, 1e-12);
}

TEST(WindowMass, HalfOpenAtomConvention) {
  const GridMeasure mu = atom_only(0.5, 4.0);
  EXPECT_DOUBLE_EQ(window_mass(mu, 0.5, 0.6), 4.0);
  EXPECT_DOUBLE_EQ(window_mass(mu, 0.4, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(window_mass(mu, 0.4, 0.5, WindowEnd::closed_right), 4.0);
}

TEST(WindowMass, ProfileAgreesWithDirect) {
  proptest::Gen gen(4);
  const GridMeasure mu = gen.measure(Grid(0.0, 1.0, 97), 1.7, 5);
  const MassProfile prof(mu);
  for (int trial = 0; trial < 500; ++trial) {
    double a = gen.uniform(-0.3, 1.3), b = gen.uniform(-0.3, 1.3);
    if (a > b) std::swap(a, b);
    for (CellRule rule : {CellRule::proportional, CellRule::lumped}) {
      for (WindowEnd end : {WindowEnd::closed_left, WindowEnd::closed_right}) {
        EXPECT_NEAR(prof.window(a, b, end, rule), window_mass(mu, a, b, end, rule), 1e-12);
      }
    }
  }
}

TEST(WindowMass, ProportionalIsAdditive) {
  proptest::Gen gen(5);
  const GridMeasure mu = gen.measure(Grid(0.0, 1.0, 40), 1.0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    double a = gen.uniform(0.0, 1.0), b = gen.uniform(0.0, 1.0);
    if (a > b) std::swap(a, b);
    const double c = gen.uniform(a, b);
    EXPECT_NEAR(window_mass(mu, a, b), window_mass(mu, a, c) + window_mass(mu, c, b), 1e-12);
  }
}

TEST(Normalize, DensityTwo) {
  const GridMeasure nu = normalize(uniform(2.0, 10));
  for (double v : nu.density()) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Normalize, AtomWeight) {
  const GridMeasure nu = normalize(atom_only(0.3, 3.0));
  EXPECT_DOUBLE_EQ(nu.atoms()[0].weight, 1.0);
}

TEST(Normalize, ZeroMassThrows) { EXPECT_THROW((void)normalize(uniform(0.0, 10)), ZeroMassError); }

TEST(Variance, SingleAtom) { EXPECT_EQ(variance(atom_only(0.7, 2.0)), 0.0); }

TEST(Variance, UniformMatchesClosedForm) { EXPECT_NEAR(variance(uniform(1.0)), 1.0 / 12.0, 1e-6); }

TEST(Variance, TwoEqualAtoms) {
  const GridMeasure mu(Grid(0.0, 1.0, 4), std::vector<double>(4, 0.0), {{0.0, 1.0}, {1.0, 1.0}});
  EXPECT_DOUBLE_EQ(variance(mu), 0.25);
}

TEST(Support, ZeroMeasureEmpty) {
  const SupportSet s = support_cells(uniform(0.0, 10));
  EXPECT_TRUE(s.cells.empty());
  EXPECT_TRUE(s.atom_locations.empty());
}

TEST(Support, PositiveEverywhere) { EXPECT_EQ(support_cells(uniform(1.0, 10)).cells.size(), 10u); }

TEST(Support, PlateauRegion) {
  const GridMeasure mu =
      GridMeasure::from_density(Grid(0.0, 1.0, 10), [](double x) { return x > 0.4 && x < 0.6 ? 1.0 : 0.0; });
  const SupportSet s = support_cells(mu);
  EXPECT_EQ(s.cells, (std::vector<std::size_t>{4, 5}));
}

TEST(Support, SubsetRelation) {
  const GridMeasure mu =
      GridMeasure::from_density(Grid(0.0, 1.0, 10), [](double x) { return x > 0.4 && x < 0.6 ? 1.0 : 0.0; });
  EXPECT_TRUE(support_subset(support_cells(mu), support_cells(uniform(1.0, 10))));
  EXPECT_FALSE(support_subset(support_cells(uniform(1.0, 10)), support_cells(mu)));
}

TEST(GridMeasure, RejectsNegativeDensity) {
  EXPECT_THROW(GridMeasure(Grid(0.0, 1.0, 2), {1.0, -0.1}), std::invalid_argument);
}

TEST(GridMeasure, RejectsAtomOutsideDomain) {
  EXPECT_THROW(GridMeasure(Grid(0.0, 1.0, 2), {1.0, 1.0}, {{1.5, 1.0}}), std::invalid_argument);
}

TEST(GridMeasure, RejectsDuplicateAtoms) {
  EXPECT_THROW(GridMeasure(Grid(0.0, 1.0, 2), {1.0, 1.0}, {{0.5, 1.0}, {0.5, 2.0}}), std::invalid_argument);
}

TEST(GridMeasure, RejectsNonFinite) {
  EXPECT_THROW(GridMeasure(Grid(0.0, 1.0, 2), {1.0, std::nan("")}), std::invalid_argument);
}

TEST(Grid, RejectsEmptyOrReversed) {
  EXPECT_THROW(Grid(1.0, 0.0, 10), std::invalid_argument);
  EXPECT_THROW(Grid(0.0, 1.0, 0), std::invalid_argument);
}

TEST(TotalMass, PropertyTvNormOfNonnegative) {
  proptest::Gen gen(6);
  for (int trial = 0; trial < 100; ++trial) {
    const GridMeasure mu = gen.measure(Grid(0.0, 1.0, 30), gen.uniform(0.0, 5.0), 3);
    const GridMeasure zero = mu.with_values(std::vector<double>(30, 0.0), std::vector<double>(mu.atoms().size(), 0.0));
    EXPECT_NEAR(tv_distance(mu, zero), total_mass(mu), 1e-12);
  }
}
