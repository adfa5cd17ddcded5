#pragma once

// Time integration of the pure selection equation d/dt mu = S[mu] mu by
// exponential stepping, semi-implicit Euler, or Picard iteration of the
// fixed-point map nu -> mu0 exp(int_0^t S[nu_s] ds).

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "selection/measure.hpp"
#include "selection/operators.hpp"

namespace selection {

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoContractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MaxIterationsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scheme { exponential, semi_implicit, picard };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

inline constexpr double blowup_mass = 1e12;
inline constexpr double exponent_guard = 700.0;

struct EngineConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  Scheme scheme = Scheme::exponential;
  std::optional<double> truncation_n;
  double picard_window = 1.0;
  double picard_tol = 1e-12;
  int picard_max_iter = 200;
  std::size_t snapshot_stride = 1;

  void validate() const;
};

// Scalar observable evaluated on every recorded state.
struct Probe {
  std::string name;
  std::function<double(const GridMeasure&, double t)> fn;
};

enum class RunStatus { completed, blow_up };

struct Trajectory {
  std::vector<double> times;
  std::vector<double> mass;
  std::vector<double> first_moment;  // <mu_t, Id>
  std::vector<double> variance;      // of mu_t / mu_t(X); NaN once the mass vanishes
  std::vector<std::pair<std::string, std::vector<double>>> probes;
  std::vector<double> snapshot_times;
  std::vector<GridMeasure> snapshots;
  RunStatus status = RunStatus::completed;
  std::string detail;

  [[nodiscard]] const std::vector<double>& probe(const std::string& name) const;
  [[nodiscard]] const GridMeasure& final_state() const { return snapshots.back(); }
};

struct StepResult {
  GridMeasure measure;
  bool overflow = false;  // some dt*S exceeded the exponent guard and was clamped
};

// density'[i] = density[i] exp(dt S[i]); atoms likewise.
StepResult step_exponential(const GridMeasure& mu, const FunctionSamples& field, double dt);
StepResult step_exponential(const GridMeasure& mu, const SelectionField& field, double dt);

// density'[i] = density[i] (1 + dt S+[i]) / (1 + dt S-[i])
GridMeasure step_semi_implicit(const GridMeasure& mu, const FunctionSamples& field, double dt);
GridMeasure step_semi_implicit(const GridMeasure& mu, const SelectionField& field, double dt);

// S_n = min(S, n); the result declares n as its uniform upper bound.
SelectionField truncate_field(const SelectionField& field, double n);
FunctionSamples truncate_values(const FunctionSamples& field, double n);

Trajectory simulate(const GridMeasure& mu0, const SelectionOperator& op, const EngineConfig& cfg,
                    const std::vector<Probe>& probes = {});

struct PicardResult {
  std::vector<double> times;          // j dt, j = 0..steps
  std::vector<GridMeasure> states;    // fixed point at each time
  std::vector<double> distances;      // sup_t tv(nu^{m+1}_t, nu^m_t)
  std::vector<double> ratios;         // distances[m] / distances[m-1]
  double window = 0.0;                // T actually used
  double contraction_bound = 0.0;     // k(2 m0) T e^{nT} m0
  double n = 0.0;                     // uniform upper bound used
  std::size_t iterations = 0;         // index of the first distance below tol
};

// Picard iteration nu^{m+1}_{t_j} = mu0 exp(dt sum_{i<j} S[nu^m_{t_i}]) on
// [0, T] with time step dt; its fixed point is the exponential-scheme path.
// T is halved until the contraction estimate is below 1 and e^{nT} <= 2;
// NoContractionError when that needs T < dt.
PicardResult picard_solve(const GridMeasure& mu0, const SelectionOperator& op, double window_T, double dt,
                          double tol, int max_iter, std::optional<double> truncation_n = std::nullopt);

}  // namespace selection
