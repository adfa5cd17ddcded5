#include "selection/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace selection {

namespace {

void require_compatible(const GridMeasure& mu, const FunctionSamples& field, const char* where) {
  if (!field.compatible_with(mu)) throw GridMismatchError(std::string(where) + ": field does not match the measure");
}

void require_finite(const std::vector<double>& v, const char* where) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NonFiniteError(std::string(where) + ": non-finite value");
  }
}

std::size_t step_count(double t_end, double dt) {
  const double q = t_end / dt;
  const auto n = static_cast<std::size_t>(std::llround(q));
  return n == 0 ? 1 : n;
}

class Recorder {
 public:
  Recorder(Trajectory& traj, const std::vector<Probe>& probes, std::size_t stride)
      : traj_(traj), probes_(probes), stride_(stride) {
    for (const Probe& p : probes_) traj_.probes.emplace_back(p.name, std::vector<double>{});
  }

  void record(const GridMeasure& mu, double t, std::size_t step, bool force_snapshot) {
    const double m = total_mass(mu);
    traj_.times.push_back(t);
    traj_.mass.push_back(m);
    traj_.first_moment.push_back(first_moment(mu));
    traj_.variance.push_back(m > mass_epsilon ? variance(mu) : std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < probes_.size(); ++k) traj_.probes[k].second.push_back(probes_[k].fn(mu, t));
    if (force_snapshot || step % stride_ == 0) {
      traj_.snapshot_times.push_back(t);
      traj_.snapshots.push_back(mu);
    }
  }

  void ensure_final_snapshot(const GridMeasure& mu, double t) {
    if (traj_.snapshot_times.empty() || traj_.snapshot_times.back() != t) {
      traj_.snapshot_times.push_back(t);
      traj_.snapshots.push_back(mu);
    }
  }

 private:
  Trajectory& traj_;
  const std::vector<Probe>& probes_;
  std::size_t stride_;
};

FunctionSamples field_values(const SelectionOperator& op, const GridMeasure& mu, const std::optional<double>& n) {
  FunctionSamples f = op.values(mu);
  return n ? truncate_values(f, *n) : f;
}

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::exponential: return "exponential";
    case Scheme::semi_implicit: return "semi_implicit";
    case Scheme::picard: return "picard";
  }
  return "?";
}

Scheme parse_scheme(const std::string& s) {
  if (s == "exponential") return Scheme::exponential;
  if (s == "semi_implicit") return Scheme::semi_implicit;
  if (s == "picard") return Scheme::picard;
  throw std::invalid_argument("unknown scheme '" + s + "' (expected exponential, semi_implicit or picard)");
}

void EngineConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("engine.dt must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("engine.t_end must be positive");
  if (dt > t_end) throw std::invalid_argument("engine.dt must not exceed engine.t_end");
  if (snapshot_stride == 0) throw std::invalid_argument("engine.snapshot_stride must be positive");
  if (scheme == Scheme::picard) {
    if (!(picard_window > 0.0)) throw std::invalid_argument("engine.picard_window must be positive");
    if (!(picard_tol > 0.0)) throw std::invalid_argument("engine.picard_tol must be positive");
    if (picard_max_iter <= 0) throw std::invalid_argument("engine.picard_max_iter must be positive");
  }
}

const std::vector<double>& Trajectory::probe(const std::string& name) const {
  for (const auto& p : probes) {
    if (p.first == name) return p.second;
  }
  throw std::out_of_range("Trajectory: no probe named '" + name + "'");
}

StepResult step_exponential(const GridMeasure& mu, const FunctionSamples& field, double dt) {
  require_compatible(mu, field, "step_exponential");
  if (!(dt > 0.0)) throw std::invalid_argument("step_exponential: dt must be positive");
  bool overflow = false;
  auto factor = [&](double s) {
    double e = dt * s;
    if (e > exponent_guard) {
      overflow = true;
      e = exponent_guard;
    }
    return std::exp(e);
  };
  const auto dens = mu.density();
  std::vector<double> d(dens.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = dens[i] * factor(field.cell_values()[i]);
  std::vector<double> w(mu.atoms().size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = mu.atoms()[k].weight * factor(field.atom_values()[k]);
  require_finite(d, "step_exponential");
  require_finite(w, "step_exponential");
  return {mu.with_values(std::move(d), std::move(w)), overflow};
}

StepResult step_exponential(const GridMeasure& mu, const SelectionField& field, double dt) {
  return step_exponential(mu, field.values(), dt);
}

GridMeasure step_semi_implicit(const GridMeasure& mu, const FunctionSamples& field, double dt) {
  require_compatible(mu, field, "step_semi_implicit");
  if (!(dt > 0.0)) throw std::invalid_argument("step_semi_implicit: dt must be positive");
  auto factor = [dt](double s) {
    const double gain = std::max(s, 0.0);
    const double loss = std::max(-s, 0.0);
    return (1.0 + dt * gain) / (1.0 + dt * loss);
  };
  const auto dens = mu.density();
  std::vector<double> d(dens.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = dens[i] * factor(field.cell_values()[i]);
  std::vector<double> w(mu.atoms().size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = mu.atoms()[k].weight * factor(field.atom_values()[k]);
  require_finite(d, "step_semi_implicit");
  require_finite(w, "step_semi_implicit");
  return mu.with_values(std::move(d), std::move(w));
}

GridMeasure step_semi_implicit(const GridMeasure& mu, const SelectionField& field, double dt) {
  return step_semi_implicit(mu, field.values(), dt);
}

FunctionSamples truncate_values(const FunctionSamples& field, double n) {
  std::vector<double> cells(field.cell_values().begin(), field.cell_values().end());
  for (double& v : cells) v = std::min(v, n);
  std::vector<double> atoms(field.atom_values().begin(), field.atom_values().end());
  for (double& v : atoms) v = std::min(v, n);
  return FunctionSamples(field.grid(), std::move(cells),
                         std::vector<double>(field.atom_locations().begin(), field.atom_locations().end()),
                         std::move(atoms));
}

SelectionField truncate_field(const SelectionField& field, double n) {
  OperatorMeta meta = field.meta();
  meta.sup_bound_n = meta.sup_bound_n ? std::min(*meta.sup_bound_n, n) : n;
  return SelectionField(truncate_values(field.values(), n), std::make_shared<const OperatorMeta>(std::move(meta)));
}

PicardResult picard_solve(const GridMeasure& mu0, const SelectionOperator& op, double window_T, double dt,
                          double tol, int max_iter, std::optional<double> truncation_n) {
  if (!(dt > 0.0) || !(window_T > 0.0) || !(tol > 0.0) || max_iter <= 0) {
    throw std::invalid_argument("picard_solve: need dt > 0, T > 0, tol > 0, max_iter > 0");
  }
  const OperatorMeta& meta = op.meta();
  std::optional<double> n_opt = truncation_n;
  if (meta.sup_bound_n) n_opt = n_opt ? std::min(*n_opt, *meta.sup_bound_n) : *meta.sup_bound_n;
  if (!n_opt) {
    throw std::invalid_argument("picard_solve: operator has no uniform upper bound; set a truncation level");
  }
  const double n = *n_opt;
  const double m0 = total_mass(mu0);
  const double k2 = meta.k(2.0 * m0);

  std::size_t steps = step_count(window_T, dt);
  auto T_of = [&](std::size_t s) { return static_cast<double>(s) * dt; };
  auto bound_of = [&](double T) { return k2 * T * std::exp(n * T) * m0; };
  while (!(bound_of(T_of(steps)) < 1.0 && std::exp(n * T_of(steps)) <= 2.0)) {
    if (steps <= 1) {
      std::ostringstream os;
      os << "picard_solve: contraction estimate k(2m0) T e^{nT} m0 < 1 needs T below dt = " << dt;
      throw NoContractionError(os.str());
    }
    steps /= 2;
  }

  PicardResult res;
  res.window = T_of(steps);
  res.contraction_bound = bound_of(res.window);
  res.n = n;
  res.times.resize(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) res.times[j] = T_of(j);

  const std::size_t nc = mu0.grid().n_cells;
  const std::size_t na = mu0.atoms().size();
  std::vector<GridMeasure> nu(steps + 1, mu0);
  std::vector<double> exponent(nc + na);

  for (int m = 0; m < max_iter; ++m) {
    std::vector<FunctionSamples> fields;
    fields.reserve(steps);
    for (std::size_t j = 0; j < steps; ++j) fields.push_back(field_values(op, nu[j], n));

    std::vector<GridMeasure> next;
    next.reserve(steps + 1);
    next.push_back(mu0);
    std::fill(exponent.begin(), exponent.end(), 0.0);
    double dist = 0.0;
    for (std::size_t j = 1; j <= steps; ++j) {
      std::vector<double> d(nc), w(na);
      for (std::size_t i = 0; i < nc + na; ++i) {
        exponent[i] += dt * fields[j - 1].at(i);
        const double e = std::min(exponent[i], exponent_guard);
        if (i < nc) {
          d[i] = mu0.density()[i] * std::exp(e);
        } else {
          w[i - nc] = mu0.atoms()[i - nc].weight * std::exp(e);
        }
      }
      next.push_back(mu0.with_values(std::move(d), std::move(w)));
      dist = std::max(dist, tv_distance(next[j], nu[j]));
    }
    if (!res.distances.empty()) {
      const double prev = res.distances.back();
      res.ratios.push_back(prev > 0.0 ? dist / prev : 0.0);
    }
    res.distances.push_back(dist);
    nu = std::move(next);
    if (dist < tol) {
      res.iterations = static_cast<std::size_t>(m);
      res.states = std::move(nu);
      return res;
    }
  }
  std::ostringstream os;
  os << "picard_solve: no convergence to tol " << tol << " within " << max_iter << " iterations (last distance "
     << res.distances.back() << ")";
  throw MaxIterationsError(os.str());
}

Trajectory simulate(const GridMeasure& mu0, const SelectionOperator& op, const EngineConfig& cfg,
                    const std::vector<Probe>& probes) {
  cfg.validate();
  Trajectory traj;
  Recorder rec(traj, probes, cfg.snapshot_stride);
  const std::size_t total = step_count(cfg.t_end, cfg.dt);
  rec.record(mu0, 0.0, 0, true);

  GridMeasure mu = mu0;
  auto check_blowup = [&](std::size_t step, double t) {
    if (traj.mass.back() > blowup_mass) {
      traj.status = RunStatus::blow_up;
      std::ostringstream os;
      os << "mass exceeded " << blowup_mass << " at t = " << t << " (step " << step << ")";
      traj.detail = os.str();
      return true;
    }
    return false;
  };

  if (cfg.scheme == Scheme::picard) {
    std::size_t done = 0;
    while (done < total) {
      const double remaining = static_cast<double>(total - done) * cfg.dt;
      const PicardResult pr = picard_solve(mu, op, std::min(cfg.picard_window, remaining), cfg.dt, cfg.picard_tol,
                                           cfg.picard_max_iter, cfg.truncation_n);
      for (std::size_t j = 1; j < pr.states.size(); ++j) {
        const std::size_t step = done + j;
        rec.record(pr.states[j], static_cast<double>(step) * cfg.dt, step, step == total);
        if (check_blowup(step, static_cast<double>(step) * cfg.dt)) {
          rec.ensure_final_snapshot(pr.states[j], traj.times.back());
          return traj;
        }
      }
      done += pr.states.size() - 1;
      mu = pr.states.back();
    }
    return traj;
  }

  for (std::size_t step = 1; step <= total; ++step) {
    const FunctionSamples field = field_values(op, mu, cfg.truncation_n);
    bool overflow = false;
    if (cfg.scheme == Scheme::exponential) {
      StepResult r = step_exponential(mu, field, cfg.dt);
      mu = std::move(r.measure);
      overflow = r.overflow;
    } else {
      mu = step_semi_implicit(mu, field, cfg.dt);
    }
    const double t = static_cast<double>(step) * cfg.dt;
    rec.record(mu, t, step, step == total);
    if (overflow) {
      traj.status = RunStatus::blow_up;
      traj.detail = "exponent guard exceeded at t = " + std::to_string(t);
      rec.ensure_final_snapshot(mu, t);
      return traj;
    }
    if (check_blowup(step, t)) {
      rec.ensure_final_snapshot(mu, t);
      return traj;
    }
  }
  return traj;
}

}  // namespace selection
