#pragma once

// Scenario files: flat "section.key = value" text, '#' starts a comment.
// A scenario fixes the domain, grid, initial condition, operator, integrator,
// diagnostics and outputs of one run.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "selection/diagnostics.hpp"
#include "selection/engine.hpp"
#include "selection/measure.hpp"
#include "selection/operators.hpp"

namespace selection {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::string key, int line, int column = 0);
  [[nodiscard]] const std::string& key() const noexcept { return key_; }
  [[nodiscard]] int line() const noexcept { return line_; }
  [[nodiscard]] int column() const noexcept { return column_; }

 private:
  std::string key_;
  int line_;
  int column_;
};

class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& key, const std::string& message);
  [[nodiscard]] const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  [[nodiscard]] bool has(const std::string& key) const;
  [[nodiscard]] int line_of(const std::string& key) const;

  [[nodiscard]] std::string string(const std::string& key) const;
  [[nodiscard]] std::string string(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] double number(const std::string& key) const;
  [[nodiscard]] double number(const std::string& key, double fallback) const;
  [[nodiscard]] std::optional<double> optional_number(const std::string& key) const;
  [[nodiscard]] long integer(const std::string& key) const;
  [[nodiscard]] long integer(const std::string& key, long fallback) const;
  [[nodiscard]] bool boolean(const std::string& key, bool fallback) const;
  // Comma-separated values; empty when the key is absent.
  [[nodiscard]] std::vector<std::string> list(const std::string& key) const;
  [[nodiscard]] std::vector<double> numbers(const std::string& key) const;

  [[nodiscard]] const std::map<std::string, std::pair<std::string, int>>& entries() const noexcept {
    return entries_;
  }

 private:
  std::map<std::string, std::pair<std::string, int>> entries_;  // key -> (value, line)
};

struct Overrides {
  std::optional<double> dt;
  std::optional<std::size_t> cells;
  std::optional<Scheme> scheme;
};

struct OutputPlan {
  std::string series_file;
  std::size_t series_stride = 1;
  // "final", "all", or explicit times.
  bool snapshots_final = false;
  bool snapshots_all = false;
  std::vector<double> snapshot_times;
  std::string report_file;
};

struct Scenario {
  std::string name;
  Config config;
  Grid grid;
  GridMeasure initial{Grid(0.0, 1.0, 1), {0.0}};
  OperatorPtr op;
  std::string operator_name;
  EngineConfig engine;
  std::vector<std::string> diagnostics;
  std::vector<std::string> probes;
  OutputPlan outputs;
  // Growth-rate samples, for uniform competition oracles.
  std::optional<FunctionSamples> rate;
  std::optional<double> rate_max;
  std::optional<double> kernel_h;
};

Scenario build_scenario(const Config& cfg, const Overrides& ov = {});
Scenario load_scenario(const std::filesystem::path& path, const Overrides& ov = {});

std::vector<Probe> make_probes(const Scenario& sc);

struct RunResult {
  int exit_code = 0;
  Trajectory trajectory;
  std::vector<DiagnosticReport> reports;
};

// Simulates, runs the configured diagnostics, and writes outputs under
// out_dir (skipped when empty). Log lines go to `log`.
RunResult run(const Scenario& sc, const std::filesystem::path& out_dir, std::ostream& log);

// Runs one named diagnostic against a finished trajectory.
DiagnosticReport run_diagnostic(const Scenario& sc, const std::string& name, const Trajectory& traj);

// One line per built-in operator.
std::string list_builtins();

// ---- output ---------------------------------------------------------------

std::string format_number(double v);
void write_series_csv(std::ostream& os, const Trajectory& traj, std::size_t stride = 1);
void write_snapshot_csv(std::ostream& os, const GridMeasure& mu);

}  // namespace selection
