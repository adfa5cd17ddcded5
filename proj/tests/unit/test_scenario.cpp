#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "selection/scenario.hpp"

using namespace selection;
namespace fs = std::filesystem;

namespace {

const fs::path scenario_dir = SELECTION_SCENARIO_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* small_cfg = R"(# tiny run
name = small
domain.lo = 0
domain.hi = 1
grid.cells = 20
initial.kind = beta
initial.p = 2
initial.q = 6
initial.constant = 0.1
operator.name = cannibalism
operator.r = 3
operator.alpha = 0.8
engine.dt = 0.01
engine.t_end = 1
diagnostics.list = gronwall
output.series = mass.csv
output.snapshots = final
output.report = report.json
)";

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("selection_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, ParsesKeysCommentsAndQuotes) {
  const Config c = Config::parse("# comment\nname = demo  # trailing\n\nengine.dt = 0.5\noperator.dsl = \"1 # not a comment\"\n");
  EXPECT_EQ(c.string("name"), "demo");
  EXPECT_EQ(c.number("engine.dt"), 0.5);
  EXPECT_EQ(c.string("operator.dsl"), "1 # not a comment");
  EXPECT_EQ(c.line_of("engine.dt"), 4);
  EXPECT_FALSE(c.has("engine.t_end"));
}

TEST(Config, ListsAndNumbers) {
  const Config c = Config::parse("a.b = 1, 2 ,3\nflag.x = true\n");
  EXPECT_EQ(c.numbers("a.b"), (std::vector<double>{1, 2, 3}));
  EXPECT_TRUE(c.boolean("flag.x", false));
  EXPECT_TRUE(c.list("missing.key").empty());
}

TEST(Config, SyntaxErrorsNameTheLine) {
  try {
    (void)Config::parse("name = x\nno equals sign\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW((void)Config::parse("a.b.c = 1\n"), ParseError);
  EXPECT_THROW((void)Config::parse("a = 1\na = 2\n"), ParseError);
}

TEST(Config, BadNumberNamesKey) {
  const Config c = Config::parse("engine.dt = fast\n");
  try {
    (void)c.number("engine.dt");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.key(), "engine.dt");
  }
}

TEST(LoadScenario, BundledCannibalism) {
  const Scenario sc = load_scenario(scenario_dir / "canni.cfg");
  EXPECT_EQ(sc.operator_name, "cannibalism");
  EXPECT_EQ(sc.grid, Grid(0, 1, 1000));
  EXPECT_DOUBLE_EQ(sc.engine.t_end, 40.0);
  EXPECT_DOUBLE_EQ(sc.engine.dt, 1e-3);
  EXPECT_DOUBLE_EQ(sc.op->meta().k(1.0), 1.8);
  EXPECT_EQ(sc.op->meta().fitness_F, 3.0);
  EXPECT_NEAR(total_mass(sc.initial), 1.1, 1e-3);
  EXPECT_NEAR(sc.initial.density()[999], 0.1, 1e-6);
}

TEST(LoadScenario, AllBundledScenariosValidate) {
  for (const char* name : {"canni", "kernel", "preypred", "plateau", "triple", "saturating"}) {
    EXPECT_NO_THROW((void)load_scenario(scenario_dir / (std::string(name) + ".cfg"))) << name;
  }
}

TEST(LoadScenario, MissingOperatorNamesOperator) {
  Config c = Config::parse(small_cfg);
  Config stripped;
  for (const auto& [k, v] : c.entries()) {
    if (k != "operator.name") stripped.set(k, v.first);
  }
  try {
    (void)build_scenario(stripped);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.key(), "operator");
  }
}

TEST(LoadScenario, DslTypoReportsColumn) {
  Config c = Config::parse(small_cfg);
  c.set("operator.name", "dsl");
  c.set("operator.dsl", "3 + 0.8*x*mass(mu) - momnet(mu, y)");
  try {
    (void)build_scenario(c);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.key(), "operator.dsl");
    EXPECT_EQ(e.column(), 22);
  }
}

TEST(LoadScenario, UnknownSectionRejected) {
  Config c = Config::parse(small_cfg);
  c.set("engnie.dt", "0.1");
  EXPECT_THROW((void)build_scenario(c), ValidationError);
}

TEST(LoadScenario, UnknownNamesRejected) {
  Config c = Config::parse(small_cfg);
  c.set("operator.name", "nonesuch");
  EXPECT_THROW((void)build_scenario(c), ValidationError);
  c = Config::parse(small_cfg);
  c.set("diagnostics.list", "gronwall, crystal_ball");
  EXPECT_THROW((void)build_scenario(c), ValidationError);
}

TEST(LoadScenario, OverridesWin) {
  Overrides ov;
  ov.dt = 0.05;
  ov.cells = 10;
  ov.scheme = Scheme::semi_implicit;
  const Scenario sc = build_scenario(Config::parse(small_cfg), ov);
  EXPECT_EQ(sc.engine.dt, 0.05);
  EXPECT_EQ(sc.grid.n_cells, 10u);
  EXPECT_EQ(sc.engine.scheme, Scheme::semi_implicit);
}

TEST(LoadScenario, DslEquivalentBuildsMatch) {
  Config c = Config::parse(small_cfg);
  const Scenario builtin = build_scenario(c);
  c.set("operator.name", "dsl");
  c.set("operator.dsl", "3 + 0.8*x*mass(mu) - moment(mu, y)");
  const Scenario dsl = build_scenario(c);
  EXPECT_EQ(dsl.op->values(dsl.initial), builtin.op->values(builtin.initial));
  EXPECT_NEAR(dsl.op->meta().k(2.0), 1.8, 1e-15);
}

TEST(ListBuiltins, SixLinesWithMetadata) {
  const std::string text = list_builtins();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
  std::istringstream in(text);
  std::string line;
  bool found_prey = false, found_canni = false;
  while (std::getline(in, line)) {
    if (line.rfind("prey_predator", 0) == 0) found_prey = line.find("F: unverified") != std::string::npos;
    if (line.rfind("cannibalism", 0) == 0) found_canni = line.find("alpha") != std::string::npos;
  }
  EXPECT_TRUE(found_prey);
  EXPECT_TRUE(found_canni);
}

TEST(Output, NumberFormat) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(15.0), "15");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Output, SeriesAndSnapshotLayout) {
  const Scenario sc = build_scenario(Config::parse(small_cfg));
  std::ostringstream log;
  const RunResult res = run(sc, {}, log);
  std::ostringstream series;
  write_series_csv(series, res.trajectory, 50);
  std::istringstream in(series.str());
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "t,mass,first_moment,variance");
  std::size_t rows = 0;
  while (std::getline(in, row)) ++rows;
  EXPECT_EQ(rows, 3u);  // t = 0, 0.5, 1

  std::ostringstream snap;
  write_snapshot_csv(snap, res.trajectory.final_state());
  const std::string s = snap.str();
  EXPECT_EQ(s.rfind("x,density\n", 0), 0u);
  EXPECT_NE(s.find("#atoms\n"), std::string::npos);
}

TEST(Run, WritesFilesByteIdentically) {
  const Scenario sc = build_scenario(Config::parse(small_cfg));
  const fs::path a = temp_dir("a"), b = temp_dir("b");
  std::ostringstream log;
  EXPECT_EQ(run(sc, a, log).exit_code, 0);
  EXPECT_EQ(run(sc, b, log).exit_code, 0);
  for (const char* f : {"mass.csv", "report.json", "snapshot_t1.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const std::string csv = slurp(a / "mass.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 102);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, FailingDiagnosticExitsOne) {
  Config c = Config::parse(small_cfg);
  c.set("diagnostics.list", "concentration");
  c.set("concentration.target", "0");
  std::ostringstream log;
  EXPECT_EQ(run(build_scenario(c), {}, log).exit_code, 1);
  EXPECT_NE(log.str().find("concentration FAIL"), std::string::npos);
}

TEST(Run, BlowUpExitsZeroWithMarker) {
  Config c = Config::parse(small_cfg);
  c.set("operator.name", "dsl");
  c.set("operator.dsl", "30");
  c.set("engine.t_end", "2");
  std::ostringstream log;
  const RunResult res = run(build_scenario(c), {}, log);
  EXPECT_EQ(res.exit_code, 0);
  EXPECT_EQ(res.trajectory.status, RunStatus::blow_up);
  EXPECT_NE(log.str().find("blowup"), std::string::npos);
}
