#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "selection/dsl.hpp"
#include "selection/engine.hpp"
#include "selection/operators.hpp"
#include "selection/profiles.hpp"

using namespace selection;

namespace {

GridMeasure beta_plus(const Grid& g, int p, int q, double c) {
  return GridMeasure::from_density(g, [=](double x) { return beta_pdf(p, q, (x - g.lo) / (g.hi - g.lo)) + c; });
}

EngineConfig config(double dt, double t_end, Scheme s = Scheme::exponential) {
  EngineConfig c;
  c.dt = dt;
  c.t_end = t_end;
  c.scheme = s;
  return c;
}

}  // namespace

TEST(StepExponential, ZeroFieldIsIdentity) {
  proptest::Gen gen(41);
  const GridMeasure mu = gen.measure(Grid(0, 1, 30), 1.0, 2);
  EXPECT_EQ(step_exponential(mu, FunctionSamples::constant(mu, 0.0), 0.1).measure, mu);
}

TEST(StepExponential, ConstantFieldScalesMass) {
  proptest::Gen gen(42);
  const GridMeasure mu = gen.measure(Grid(0, 1, 30), 1.3, 2);
  const GridMeasure next = step_exponential(mu, FunctionSamples::constant(mu, 2.0), 0.01).measure;
  EXPECT_NEAR(total_mass(next), 1.3 * std::exp(0.02), 1e-14);
}

TEST(StepExponential, EmptyCellStaysEmpty) {
  const GridMeasure mu(Grid(0, 1, 3), {1.0, 0.0, 2.0});
  const GridMeasure next = step_exponential(mu, FunctionSamples::constant(mu, 5.0), 0.1).measure;
  EXPECT_EQ(next.density()[1], 0.0);
}

TEST(StepExponential, GuardClampsAndFlags) {
  const GridMeasure mu(Grid(0, 1, 2), {1.0, 1.0});
  const StepResult r = step_exponential(mu, FunctionSamples::constant(mu, 1e6), 1.0);
  EXPECT_TRUE(r.overflow);
  EXPECT_DOUBLE_EQ(r.measure.density()[0], std::exp(exponent_guard));
  EXPECT_FALSE(step_exponential(mu, FunctionSamples::constant(mu, 1.0), 1.0).overflow);
}

TEST(StepSemiImplicit, ZeroFieldIsIdentity) {
  proptest::Gen gen(43);
  const GridMeasure mu = gen.measure(Grid(0, 1, 30), 1.0, 2);
  EXPECT_EQ(step_semi_implicit(mu, FunctionSamples::constant(mu, 0.0), 0.1), mu);
}

TEST(StepSemiImplicit, DecayHalves) {
  const GridMeasure mu(Grid(0, 1, 3), {1.0, 2.0, 4.0});
  const double dt = 0.25;
  const GridMeasure next = step_semi_implicit(mu, FunctionSamples::constant(mu, -1.0 / dt), dt);
  EXPECT_EQ(next.density()[0], 0.5);
  EXPECT_EQ(next.density()[1], 1.0);
  EXPECT_EQ(next.density()[2], 2.0);
}

TEST(StepSemiImplicit, SecondOrderGapToExponential) {
  const GridMeasure mu(Grid(0, 1, 1), {1.0});
  std::vector<double> gaps;
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    for (double c : {1.5, -1.5}) {
      const FunctionSamples f = FunctionSamples::constant(mu, c);
      const double gap = std::abs(step_semi_implicit(mu, f, dt).density()[0] -
                                  step_exponential(mu, f, dt).measure.density()[0]);
      if (c > 0) gaps.push_back(gap);
      EXPECT_LT(gap, c * c * dt * dt);
    }
  }
  EXPECT_NEAR(gaps[0] / gaps[1], 100.0, 5.0);
  EXPECT_NEAR(gaps[1] / gaps[2], 100.0, 5.0);
}

TEST(StepSemiImplicit, PositivityForAnyField) {
  proptest::Gen gen(44);
  const GridMeasure mu = gen.measure(Grid(0, 1, 40), 1.0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> cells(40);
    for (double& v : cells) v = gen.uniform(-1e4, 1e4);
    std::vector<double> av(mu.atoms().size());
    for (double& v : av) v = gen.uniform(-1e4, 1e4);
    const FunctionSamples f(mu.grid(), cells, mu.atom_locations(), av);
    const GridMeasure next = step_semi_implicit(mu, f, 0.5);
    EXPECT_TRUE(support_subset(support_cells(next), support_cells(mu)));
    EXPECT_TRUE(support_subset(support_cells(mu), support_cells(next)));
  }
}

TEST(Truncation, BelowLevelUnchanged) {
  const GridMeasure mu(Grid(0, 1, 3), {1, 1, 1});
  const FunctionSamples f(mu.grid(), {0.1, -4.0, 0.9}, {}, {});
  EXPECT_EQ(truncate_values(f, 1.0), f);
}

TEST(Truncation, CapsAtLevel) {
  const GridMeasure mu(Grid(0, 1, 3), {1, 1, 1});
  const OperatorPtr op = make_saturating();
  const SelectionField field(FunctionSamples::constant(mu, 4.0), op->meta_ptr());
  const SelectionField t = truncate_field(field, 2.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(t.values().at(i), 2.0);
  EXPECT_EQ(t.meta().sup_bound_n, 1.0);
  EXPECT_EQ(truncate_field(SelectionField(FunctionSamples::constant(mu, 4.0), make_cannibalism(3, 0.8, 1)->meta_ptr()), 2.0)
                .meta()
                .sup_bound_n,
            2.0);
}

TEST(Simulate, SaturatingMassStrictlyIncreases) {
  const GridMeasure mu(Grid(0, 1, 10), std::vector<double>(10, 1.0));
  const Trajectory tr = simulate(mu, *make_saturating(), config(0.01, 100));
  for (std::size_t i = 1; i < tr.mass.size(); ++i) ASSERT_GT(tr.mass[i], tr.mass[i - 1]) << "step " << i;
  EXPECT_EQ(tr.status, RunStatus::completed);
}

TEST(Simulate, LogisticOracle) {
  const GridMeasure mu(Grid(0, 1, 10), std::vector<double>(10, 0.5));
  const OperatorPtr op = make_uniform_competition(constant_profile(1.0), 1.0);
  const Trajectory tr = simulate(mu, *op, config(1e-3, std::log(3.0)));
  const double t = tr.times.back();
  const double oracle = 0.5 * std::exp(t) / (1.0 + 0.5 * std::expm1(t));
  EXPECT_NEAR(tr.mass.back(), oracle, 1e-3);
  EXPECT_NEAR(tr.mass.back(), 0.75, 1e-3);
}

TEST(Simulate, CannibalismReachesLimitMass) {
  const GridMeasure mu = beta_plus(Grid(0, 1, 1000), 2, 6, 0.1);
  const Trajectory tr = simulate(mu, *make_cannibalism(3.0, 0.8, 1.0), config(1e-3, 40));
  EXPECT_NEAR(tr.mass.back(), 15.0, 0.15);
}

TEST(Simulate, RecordsTimesAndSnapshots) {
  const GridMeasure mu(Grid(0, 1, 4), std::vector<double>(4, 1.0));
  EngineConfig c = config(0.1, 1.0);
  c.snapshot_stride = 3;
  const Trajectory tr = simulate(mu, *make_saturating(), c);
  ASSERT_EQ(tr.times.size(), 11u);
  EXPECT_EQ(tr.snapshot_times, (std::vector<double>{tr.times[0], tr.times[3], tr.times[6], tr.times[9], tr.times[10]}));
  EXPECT_EQ(tr.times[3], 3 * 0.1);
  EXPECT_EQ(tr.snapshots.size(), tr.snapshot_times.size());
}

TEST(Simulate, BlowUpIsReported) {
  const GridMeasure mu(Grid(0, 1, 4), std::vector<double>(4, 1.0));
  const OperatorPtr op = dsl::make_dsl_operator("10", dsl::standard_environment(), 0, 1);
  const Trajectory tr = simulate(mu, *op, config(0.01, 5));
  EXPECT_EQ(tr.status, RunStatus::blow_up);
  EXPECT_GT(tr.mass.back(), blowup_mass);
  EXPECT_LT(tr.times.back(), 5.0);
  EXPECT_EQ(tr.final_state().grid(), mu.grid());
}

TEST(Simulate, DeterministicRerun) {
  const GridMeasure mu = beta_plus(Grid(0, 1, 100), 2, 3, 0.0);
  const OperatorPtr op = make_prey_predator(sqrt_decreasing_profile(1.0, 1.5), 0.8, 0.7, 0.51);
  const EngineConfig c = config(0.01, 5, Scheme::semi_implicit);
  const Trajectory a = simulate(mu, *op, c), b = simulate(mu, *op, c);
  EXPECT_EQ(a.mass, b.mass);
  EXPECT_EQ(a.snapshots, b.snapshots);
}

TEST(Simulate, TruncationAboveRankIsBitIdentical) {
  const GridMeasure mu = beta_plus(Grid(0, 1, 200), 2, 6, 0.1);
  const OperatorPtr op = make_cannibalism(3.0, 0.8, 1.0);
  const double t_end = 2.0, F = 3.0;
  const double m = total_mass(mu) * std::exp(F * t_end);
  const double rank = m * op->meta().k(m) + sigma_zero_sup(*op, mu);
  EngineConfig c = config(1e-3, t_end);
  const Trajectory plain = simulate(mu, *op, c);
  c.truncation_n = rank;
  const Trajectory cut = simulate(mu, *op, c);
  EXPECT_EQ(plain.mass, cut.mass);
  EXPECT_EQ(plain.snapshots, cut.snapshots);
  c.truncation_n = 0.5;
  EXPECT_NE(simulate(mu, *op, c).mass, plain.mass);
}

TEST(Picard, ConstantFieldConvergesInOneIteration) {
  const GridMeasure mu(Grid(0, 1, 4), std::vector<double>(4, 1.0));
  const OperatorPtr op = dsl::make_dsl_operator("0.5", dsl::standard_environment(), 0, 1);
  const PicardResult r = picard_solve(mu, *op, 0.5, 0.01, 1e-14, 10);
  ASSERT_GE(r.distances.size(), 2u);
  EXPECT_GT(r.distances[0], 0.0);
  EXPECT_EQ(r.distances[1], 0.0);
  EXPECT_EQ(r.iterations, 1u);
}

TEST(Picard, ObservedRatiosBelowContractionEstimate) {
  const GridMeasure mu = beta_plus(Grid(0, 1, 100), 2, 6, 0.1);
  const OperatorPtr op = make_cannibalism(3.0, 0.8, 1.0);
  const PicardResult r = picard_solve(mu, *op, 1.0, 1e-3, 1e-13, 200, 5.0);
  EXPECT_LT(r.contraction_bound, 1.0);
  EXPECT_LE(std::exp(r.n * r.window), 2.0);
  ASSERT_GE(r.ratios.size(), 2u);
  for (std::size_t m = 0; m + 1 < r.ratios.size(); ++m) EXPECT_LE(r.ratios[m], r.contraction_bound) << m;
}

TEST(Picard, FixedPointMatchesExponentialScheme) {
  const GridMeasure mu = beta_plus(Grid(0, 1, 100), 2, 6, 0.1);
  const OperatorPtr op = make_cannibalism(3.0, 0.8, 1.0);
  const double tol = 1e-12;
  const PicardResult r = picard_solve(mu, *op, 1.0, 1e-3, tol, 200, 5.0);
  EngineConfig c = config(1e-3, r.window);
  c.truncation_n = 5.0;
  const Trajectory tr = simulate(mu, *op, c);
  ASSERT_EQ(tr.snapshots.size(), r.states.size());
  double worst = 0.0;
  for (std::size_t j = 0; j < r.states.size(); ++j) worst = std::max(worst, tv_distance(tr.snapshots[j], r.states[j]));
  EXPECT_LE(worst, 10.0 * tol);
}

TEST(Picard, SchemeChainsWindows) {
  const GridMeasure mu = beta_plus(Grid(0, 1, 50), 2, 6, 0.1);
  const OperatorPtr op = make_cannibalism(3.0, 0.8, 1.0);
  EngineConfig c = config(1e-3, 0.5, Scheme::picard);
  c.truncation_n = 5.0;
  c.picard_window = 0.05;
  const Trajectory pic = simulate(mu, *op, c);
  c.scheme = Scheme::exponential;
  const Trajectory ex = simulate(mu, *op, c);
  ASSERT_EQ(pic.mass.size(), ex.mass.size());
  for (std::size_t i = 0; i < ex.mass.size(); ++i) EXPECT_NEAR(pic.mass[i], ex.mass[i], 1e-10);
}

TEST(Picard, Errors) {
  const GridMeasure mu(Grid(0, 1, 4), std::vector<double>(4, 1.0));
  EXPECT_THROW(picard_solve(mu, *make_cannibalism(3, 0.8, 1), 1.0, 0.01, 1e-12, 10), std::invalid_argument);
  const OperatorPtr stiff = dsl::make_dsl_operator("1 - 1000*mass(mu)", dsl::standard_environment(), 0, 1);
  EXPECT_THROW(picard_solve(mu, *stiff, 1.0, 0.01, 1e-12, 10), NoContractionError);
  const OperatorPtr mild = dsl::make_dsl_operator("1 - mass(mu)", dsl::standard_environment(), 0, 1);
  EXPECT_THROW(picard_solve(mu.scaled(0.5), *mild, 0.1, 0.001, 1e-300, 3), MaxIterationsError);
}

TEST(EngineConfig, Validation) {
  EXPECT_THROW(config(0.0, 1.0).validate(), std::invalid_argument);
  EXPECT_THROW(config(2.0, 1.0).validate(), std::invalid_argument);
  EXPECT_NO_THROW(config(0.1, 1.0).validate());
  EXPECT_EQ(parse_scheme("semi_implicit"), Scheme::semi_implicit);
  EXPECT_EQ(to_string(Scheme::picard), "picard");
  EXPECT_THROW(parse_scheme("rk4"), std::invalid_argument);
}
