// selsim: run, validate and list selection-equation scenarios.
//
//   selsim run <cfg...> [--out DIR] [--dt X] [--cells N] [--scheme S]
//   selsim check <cfg...>
//   selsim list
//
// Exit codes: 0 pass, 1 diagnostic failure, 2 usage or configuration error.

#include <filesystem>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "selection/scenario.hpp"

namespace fs = std::filesystem;
using selection::Overrides;

namespace {

constexpr int exit_pass = 0;
constexpr int exit_fail = 1;
constexpr int exit_usage = 2;

struct Outcome {
  int code = exit_pass;
  std::string log;
};

std::string describe(const selection::ParseError& e) {
  std::ostringstream os;
  os << "parse error";
  if (!e.key().empty()) os << " [" << e.key() << "]";
  if (e.line() > 0) os << " line " << e.line();
  if (e.column() > 0) os << " column " << e.column();
  os << ": " << e.what();
  return os.str();
}

Outcome run_one(const fs::path& cfg, const fs::path& out_dir, const Overrides& ov) {
  Outcome o;
  std::ostringstream log;
  try {
    const selection::Scenario sc = selection::load_scenario(cfg, ov);
    log << sc.name << ": running " << sc.operator_name << " (" << selection::to_string(sc.engine.scheme)
        << ", dt=" << sc.engine.dt << ", t_end=" << sc.engine.t_end << ")\n";
    o.code = selection::run(sc, out_dir, log).exit_code;
  } catch (const selection::ParseError& e) {
    log << cfg.string() << ": " << describe(e) << '\n';
    o.code = exit_usage;
  } catch (const selection::ValidationError& e) {
    log << cfg.string() << ": invalid scenario: " << e.what() << '\n';
    o.code = exit_usage;
  } catch (const std::exception& e) {
    log << cfg.string() << ": error: " << e.what() << '\n';
    o.code = exit_fail;
  }
  o.log = log.str();
  return o;
}

Outcome check_one(const fs::path& cfg) {
  Outcome o;
  try {
    const selection::Scenario sc = selection::load_scenario(cfg);
    o.log = cfg.string() + ": ok (" + sc.name + ", operator " + sc.operator_name + ", " +
            std::to_string(sc.diagnostics.size()) + " diagnostics)\n";
  } catch (const selection::ParseError& e) {
    o.log = cfg.string() + ": " + describe(e) + "\n";
    o.code = exit_usage;
  } catch (const std::exception& e) {
    o.log = cfg.string() + ": invalid scenario: " + e.what() + "\n";
    o.code = exit_usage;
  }
  return o;
}

int worst(int a, int b) { return std::max(a, b); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate measure-valued selection equations from scenario files"};
  app.require_subcommand(1);

  std::vector<std::string> run_files;
  std::string out_dir = "out";
  std::optional<double> dt;
  std::optional<std::size_t> cells;
  std::string scheme;
  auto* run_cmd = app.add_subcommand("run", "simulate scenarios and run their diagnostics");
  run_cmd->add_option("scenario", run_files, "scenario files")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_option("--dt", dt, "time step override")->check(CLI::PositiveNumber);
  run_cmd->add_option("--cells", cells, "grid cell count override")->check(CLI::PositiveNumber);
  run_cmd->add_option("--scheme", scheme, "time scheme override")
      ->check(CLI::IsMember({"exponential", "semi_implicit", "picard"}));

  std::vector<std::string> check_files;
  auto* check_cmd = app.add_subcommand("check", "validate scenario files without running them");
  check_cmd->add_option("scenario", check_files, "scenario files")->required()->check(CLI::ExistingFile);

  auto* list_cmd = app.add_subcommand("list", "list the built-in operators");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_pass : exit_usage;
  }

  if (list_cmd->parsed()) {
    std::cout << selection::list_builtins();
    return exit_pass;
  }

  if (check_cmd->parsed()) {
    int code = exit_pass;
    for (const std::string& f : check_files) {
      const Outcome o = check_one(f);
      (o.code == exit_pass ? std::cout : std::cerr) << o.log;
      code = worst(code, o.code);
    }
    return code;
  }

  Overrides ov;
  ov.dt = dt;
  ov.cells = cells;
  if (!scheme.empty()) ov.scheme = selection::parse_scheme(scheme);

  // Several scenarios run concurrently, each writing to its own subdirectory.
  const bool many = run_files.size() > 1;
  std::vector<std::future<Outcome>> jobs;
  for (const std::string& f : run_files) {
    const fs::path dir = many ? fs::path(out_dir) / fs::path(f).stem() : fs::path(out_dir);
    jobs.push_back(std::async(std::launch::async, run_one, fs::path(f), dir, ov));
  }
  int code = exit_pass;
  for (auto& j : jobs) {
    const Outcome o = j.get();
    std::cout << o.log;
    code = worst(code, o.code);
  }
  return code;
}
