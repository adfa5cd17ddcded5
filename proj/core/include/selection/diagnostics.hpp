#pragma once

// Checks of a-priori estimates and asymptotic behaviour on recorded
// trajectories. All functions are pure.

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "selection/engine.hpp"
#include "selection/operators.hpp"

namespace selection {

enum class Status { pass, fail, warn };

std::string to_string(Status s);

struct DiagnosticReport {
  std::string name;
  Status status = Status::pass;
  std::vector<std::pair<std::string, double>> measured;
  std::vector<std::pair<std::string, double>> bounds;
  std::optional<std::size_t> worst_index;
  std::string detail;

  [[nodiscard]] double value(const std::string& key) const;
  // One line: "<name> PASS key=value ... | detail".
  [[nodiscard]] std::string to_text() const;
  [[nodiscard]] std::string to_json() const;
};

std::string reports_to_json(const std::vector<DiagnosticReport>& reports);

// mass(t) <= mass(0) e^{Ft} (1 + 10 dt |F|) at every recorded time. Warns
// when F is not declared.
DiagnosticReport check_gronwall(const std::vector<double>& times, const std::vector<double>& mass,
                                std::optional<double> F, double dt);
DiagnosticReport check_gronwall(const Trajectory& traj, std::optional<double> F, double dt);

// L(T) = 2 sup_{t<=T} ((m1+m2) e^{Ft} k((m1+m2) e^{Ft}) + ||S[0]||_inf).
double stability_constant(const OperatorMeta& meta, double m1, double m2, double sigma0_sup,
                          const std::vector<double>& times);

// tv(mu_t, nu_t) <= e^{l_scale L t} tv(mu_0, nu_0) (1 + 10 dt L) on the shared
// snapshot times.
DiagnosticReport check_stability(const Trajectory& a, const Trajectory& b, const OperatorMeta& meta,
                                 double sigma0_sup, double dt, double l_scale = 1.0);
DiagnosticReport check_stability(const std::vector<double>& times, const std::vector<double>& distances,
                                 double L, double dt, double l_scale = 1.0);

// mu_0({S[0] > 0}).
double growth_set_mass(const SelectionOperator& op, const GridMeasure& mu0);

// Warns with "hypothesis not met" when growth_set_mass <= 0. Otherwise
// passes iff inf_t mass > 0 and the minimum over the last 10% exceeds
// 1e-6 mass(0).
DiagnosticReport check_non_extinction(const Trajectory& traj, double growth_set_mass);

class EmptyWindowError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonPositiveError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class FitModel { loglog, semilog };

struct DecayFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

// Least squares of log d against log t (loglog) or t (semilog) over t in [t0, t1].
DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& d, double t0, double t1,
                        FitModel model);

struct OscillationOptions {
  // A reversal counts once it exceeds max(abs_floor, rel_swing * previous swing).
  double abs_floor = 0.0;
  double rel_swing = 0.0;
  double recurrence_eps = 1e-2;
  double recurrence_t_min = 5.0;
  double convergence_threshold = 1e-3;
  double tail_fraction = 0.1;
  std::size_t damped_terms = 5;
};

struct OscillationReport {
  std::size_t n_extrema = 0;
  std::vector<std::size_t> extrema;
  std::vector<double> amplitudes;  // half of each swing between consecutive extrema
  bool damped = false;             // last damped_terms amplitudes strictly decreasing
  bool recurrent = false;          // some state within eps of one at least t_min earlier
  double best_return = std::numeric_limits<double>::infinity();
  bool non_convergent = false;     // max successive-state change over the tail >= threshold
  double tail_change = 0.0;
};

OscillationReport oscillation_report(const std::vector<double>& times, const std::vector<double>& series,
                                     const OscillationOptions& opts = {});
// `states` (one vector per time) drives recurrence and convergence; `series` the extrema.
OscillationReport oscillation_report(const std::vector<double>& times, const std::vector<double>& series,
                                     const std::vector<std::vector<double>>& states,
                                     const OscillationOptions& opts = {});

// Passes iff variance(end) <= variance(0)/100 and |<nu_end, Id> - target| < tol.
DiagnosticReport concentration_report(const Trajectory& traj, double target_point, double tol = 0.02);

// sup over snapshots of <mu, S[mu]> / mu(X). Fails only when a declared F is
// exceeded; warns when F is unverified.
DiagnosticReport fitness_ratio_report(const Trajectory& traj, const SelectionOperator& op);

}  // namespace selection
