#include "selection/diagnostics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace selection {

namespace {

constexpr double rel_slack = 1e-12;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::pass: return "PASS";
    case Status::fail: return "FAIL";
    case Status::warn: return "WARN";
  }
  return "?";
}

double DiagnosticReport::value(const std::string& key) const {
  for (const auto& kv : measured) {
    if (kv.first == key) return kv.second;
  }
  for (const auto& kv : bounds) {
    if (kv.first == key) return kv.second;
  }
  throw std::out_of_range("DiagnosticReport: no value '" + key + "' in " + name);
}

std::string DiagnosticReport::to_text() const {
  std::string out = name + " " + to_string(status);
  for (const auto& [k, v] : measured) out += " " + k + "=" + num(v);
  for (const auto& [k, v] : bounds) out += " " + k + "=" + num(v);
  if (worst_index) out += " worst_index=" + std::to_string(*worst_index);
  if (!detail.empty()) out += " | " + detail;
  return out;
}

namespace {

nlohmann::ordered_json report_json(const DiagnosticReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  std::string st = to_string(r.status);
  std::transform(st.begin(), st.end(), st.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  j["status"] = st;
  j["measured"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.measured) j["measured"][k] = v;
  j["bounds"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.bounds) j["bounds"][k] = v;
  if (r.worst_index) {
    j["worst_index"] = *r.worst_index;
  } else {
    j["worst_index"] = nullptr;
  }
  j["detail"] = r.detail;
  return j;
}

}  // namespace

std::string DiagnosticReport::to_json() const { return report_json(*this).dump(2); }

std::string reports_to_json(const std::vector<DiagnosticReport>& reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  nlohmann::ordered_json doc;
  doc["reports"] = std::move(arr);
  return doc.dump(2) + "\n";
}

DiagnosticReport check_gronwall(const std::vector<double>& times, const std::vector<double>& mass,
                                std::optional<double> F, double dt) {
  DiagnosticReport r;
  r.name = "gronwall";
  if (!F) {
    r.status = Status::warn;
    r.detail = "fitness bound F unverified; check skipped";
    return r;
  }
  if (times.empty() || times.size() != mass.size()) throw std::invalid_argument("check_gronwall: series length mismatch");
  const double m0 = mass.front();
  const double tol = 1.0 + 10.0 * dt * std::abs(*F);
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_i = 0;
  std::optional<std::size_t> first_violation;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double bound = m0 * std::exp(*F * times[i]) * tol;
    const double ratio = mass[i] / bound;
    if (ratio > worst) {
      worst = ratio;
      worst_i = i;
    }
    if (!first_violation && mass[i] > bound * (1.0 + rel_slack)) first_violation = i;
  }
  r.measured = {{"max_ratio", worst}, {"final_mass", mass.back()}};
  r.bounds = {{"F", *F}, {"final_bound", m0 * std::exp(*F * times.back()) * tol}};
  if (first_violation) {
    r.status = Status::fail;
    r.worst_index = first_violation;
    r.detail = "mass exceeds mass(0) e^{Ft}(1+10 dt F) at t = " + num(times[*first_violation]);
  } else {
    r.worst_index = worst_i;
  }
  return r;
}

DiagnosticReport check_gronwall(const Trajectory& traj, std::optional<double> F, double dt) {
  return check_gronwall(traj.times, traj.mass, F, dt);
}

double stability_constant(const OperatorMeta& meta, double m1, double m2, double sigma0_sup,
                          const std::vector<double>& times) {
  if (!meta.fitness_F) throw std::invalid_argument("stability_constant: F must be declared");
  const double F = *meta.fitness_F;
  double sup = 0.0;
  for (double t : times) {
    const double m = (m1 + m2) * std::exp(F * t);
    sup = std::max(sup, m * meta.k(m) + sigma0_sup);
  }
  if (times.empty()) sup = (m1 + m2) * meta.k(m1 + m2) + sigma0_sup;
  return 2.0 * sup;
}

DiagnosticReport check_stability(const std::vector<double>& times, const std::vector<double>& d, double L,
                                 double dt, double l_scale) {
  if (times.empty() || times.size() != d.size()) throw std::invalid_argument("check_stability: series length mismatch");
  DiagnosticReport r;
  r.name = "stability";
  const double d0 = d.front();
  const double Ls = l_scale * L;
  const double tol = 1.0 + 10.0 * dt * Ls;
  double worst = 0.0;
  std::size_t worst_i = 0;
  std::optional<std::size_t> first_violation;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double bound = d0 == 0.0 ? 0.0 : std::exp(Ls * times[i]) * d0 * tol;
    const double ratio = bound > 0.0 ? d[i] / bound : (d[i] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    if (ratio > worst) {
      worst = ratio;
      worst_i = i;
    }
    if (!first_violation && d[i] > bound * (1.0 + rel_slack)) first_violation = i;
  }
  r.measured = {{"max_ratio", worst}, {"initial_distance", d0}, {"final_distance", d.back()}};
  r.bounds = {{"L", Ls}};
  r.worst_index = first_violation ? first_violation : std::optional<std::size_t>(worst_i);
  if (first_violation) {
    r.status = Status::fail;
    r.detail = "distance exceeds e^{Lt} tv(mu0,nu0) at t = " + num(times[*first_violation]);
  }
  return r;
}

DiagnosticReport check_stability(const Trajectory& a, const Trajectory& b, const OperatorMeta& meta,
                                 double sigma0_sup, double dt, double l_scale) {
  if (a.snapshots.empty() || a.snapshot_times != b.snapshot_times) {
    throw std::invalid_argument("check_stability: trajectories must share snapshot times");
  }
  if (!a.snapshots.front().same_layout(b.snapshots.front())) {
    throw GridMismatchError("check_stability: trajectories live on different layouts");
  }
  if (!meta.fitness_F) {
    DiagnosticReport r;
    r.name = "stability";
    r.status = Status::warn;
    r.detail = "fitness bound F unverified; L(T) unavailable";
    return r;
  }
  std::vector<double> d(a.snapshots.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = tv_distance(a.snapshots[i], b.snapshots[i]);
  const double L = stability_constant(meta, total_mass(a.snapshots.front()), total_mass(b.snapshots.front()),
                                      sigma0_sup, a.snapshot_times);
  return check_stability(a.snapshot_times, d, L, dt, l_scale);
}

double growth_set_mass(const SelectionOperator& op, const GridMeasure& mu0) {
  const std::vector<double> locs = mu0.atom_locations();
  const FunctionSamples s0 = op.values(GridMeasure::zero(mu0.grid(), locs));
  double cells = 0.0;
  const auto dens = mu0.density();
  for (std::size_t i = 0; i < dens.size(); ++i) {
    if (s0.cell_values()[i] > 0.0) cells += dens[i];
  }
  double atoms = 0.0;
  for (std::size_t k = 0; k < mu0.atoms().size(); ++k) {
    if (s0.atom_values()[k] > 0.0) atoms += mu0.atoms()[k].weight;
  }
  return cells * mu0.grid().dx() + atoms;
}

DiagnosticReport check_non_extinction(const Trajectory& traj, double gsm) {
  DiagnosticReport r;
  r.name = "non_extinction";
  r.measured.emplace_back("growth_set_mass", gsm);
  if (!(gsm > 0.0)) {
    r.status = Status::warn;
    r.detail = "hypothesis not met: mu0 does not charge {S[0] > 0}";
    return r;
  }
  const auto& m = traj.mass;
  if (m.empty()) throw std::invalid_argument("check_non_extinction: empty trajectory");
  const auto min_it = std::min_element(m.begin(), m.end());
  const std::size_t tail_start = m.size() - std::max<std::size_t>(1, m.size() / 10);
  const double tail_min = *std::min_element(m.begin() + static_cast<std::ptrdiff_t>(tail_start), m.end());
  const double floor = 1e-6 * m.front();
  r.measured.emplace_back("min_mass", *min_it);
  r.measured.emplace_back("tail_min_mass", tail_min);
  r.bounds.emplace_back("tail_floor", floor);
  r.worst_index = static_cast<std::size_t>(min_it - m.begin());
  if (!(*min_it > 0.0) || !(tail_min > floor)) {
    r.status = Status::fail;
    r.detail = "population mass approaches zero";
  }
  return r;
}

DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& d, double t0, double t1,
                        FitModel model) {
  if (t.size() != d.size()) throw std::invalid_argument("fit_decay_rate: series length mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t0 || t[i] > t1) continue;
    if (!(d[i] > 0.0)) throw NonPositiveError("fit_decay_rate: nonpositive value at t = " + num(t[i]));
    if (model == FitModel::loglog && !(t[i] > 0.0)) {
      throw NonPositiveError("fit_decay_rate: loglog fit needs t > 0");
    }
    xs.push_back(model == FitModel::loglog ? std::log(t[i]) : t[i]);
    ys.push_back(std::log(d[i]));
  }
  if (xs.size() < 2) throw EmptyWindowError("fit_decay_rate: fewer than two points in the window");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw EmptyWindowError("fit_decay_rate: window has a single abscissa");
  DecayFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = xs.size();
  if (xs.size() > 2) {
    double sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
      sse += e * e;
    }
    fit.stderr_slope = std::sqrt(sse / (n - 2.0) / sxx);
  }
  return fit;
}

namespace {

std::vector<std::size_t> zigzag_extrema(const std::vector<double>& s, const OscillationOptions& o) {
  std::vector<std::size_t> ext;
  if (s.size() < 3) return ext;
  int dir = 0;
  std::size_t cand = 0, lo = 0, hi = 0;
  double last_swing = 0.0;
  double last_value = s[0];
  auto thr = [&] { return std::max(o.abs_floor, o.rel_swing * last_swing); };
  auto exceeds = [&](double move) { return move > thr() && move > 0.0; };
  auto confirm = [&](std::size_t i) {
    if (!ext.empty()) last_swing = std::abs(s[i] - last_value);
    else last_swing = std::abs(s[i] - s[0]);
    last_value = s[i];
    ext.push_back(i);
  };
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double v = s[i];
    if (dir == 0) {
      if (v > s[hi]) hi = i;
      if (v < s[lo]) lo = i;
      if (i == hi && exceeds(v - s[lo])) {
        if (lo > 0) confirm(lo);
        dir = 1;
        cand = i;
      } else if (i == lo && exceeds(s[hi] - v)) {
        if (hi > 0) confirm(hi);
        dir = -1;
        cand = i;
      }
      continue;
    }
    if (dir == 1) {
      if (v > s[cand]) {
        cand = i;
      } else if (exceeds(s[cand] - v)) {
        confirm(cand);
        dir = -1;
        cand = i;
      }
    } else {
      if (v < s[cand]) {
        cand = i;
      } else if (exceeds(v - s[cand])) {
        confirm(cand);
        dir = 1;
        cand = i;
      }
    }
  }
  return ext;
}

void fill_state_metrics(OscillationReport& rep, const std::vector<double>& times,
                        const std::vector<std::vector<double>>& states, const OscillationOptions& o) {
  for (std::size_t j = 0; j < states.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (times[j] - times[i] < o.recurrence_t_min) break;
      rep.best_return = std::min(rep.best_return, max_abs_diff(states[i], states[j]));
    }
  }
  rep.recurrent = rep.best_return < o.recurrence_eps;
  if (states.size() >= 2) {
    const std::size_t tail = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                          std::ceil(o.tail_fraction * static_cast<double>(states.size() - 1))));
    double change = 0.0;
    for (std::size_t k = states.size() - 1 - tail; k + 1 < states.size(); ++k) {
      change = std::max(change, max_abs_diff(states[k], states[k + 1]));
    }
    rep.tail_change = change;
    rep.non_convergent = change >= o.convergence_threshold;
  }
}

}  // namespace

OscillationReport oscillation_report(const std::vector<double>& times, const std::vector<double>& series,
                                     const std::vector<std::vector<double>>& states, const OscillationOptions& o) {
  if (series.size() < 3) throw std::invalid_argument("oscillation_report: need at least 3 samples");
  if (times.size() != series.size()) throw std::invalid_argument("oscillation_report: series length mismatch");
  OscillationReport rep;
  rep.extrema = zigzag_extrema(series, o);
  rep.n_extrema = rep.extrema.size();
  for (std::size_t k = 1; k < rep.extrema.size(); ++k) {
    rep.amplitudes.push_back(0.5 * std::abs(series[rep.extrema[k]] - series[rep.extrema[k - 1]]));
  }
  if (o.damped_terms >= 1 && rep.amplitudes.size() >= o.damped_terms) {
    rep.damped = true;
    for (std::size_t k = rep.amplitudes.size() - o.damped_terms + 1; k < rep.amplitudes.size(); ++k) {
      if (!(rep.amplitudes[k] < rep.amplitudes[k - 1])) rep.damped = false;
    }
  }
  if (!states.empty()) {
    if (states.size() != times.size()) throw std::invalid_argument("oscillation_report: states length mismatch");
    fill_state_metrics(rep, times, states, o);
  }
  return rep;
}

// Scalar states; long series are thinned to at most 4000 samples for the
// quadratic recurrence search.
OscillationReport oscillation_report(const std::vector<double>& times, const std::vector<double>& series,
                                     const OscillationOptions& o) {
  OscillationReport rep = oscillation_report(times, series, {}, o);
  const std::size_t stride = std::max<std::size_t>(1, (series.size() + 3999) / 4000);
  std::vector<double> ts;
  std::vector<std::vector<double>> st;
  for (std::size_t i = 0; i < series.size(); i += stride) {
    ts.push_back(times[i]);
    st.push_back({series[i]});
  }
  fill_state_metrics(rep, ts, st, o);
  return rep;
}

DiagnosticReport concentration_report(const Trajectory& traj, double target, double tol) {
  if (traj.mass.empty()) throw std::invalid_argument("concentration_report: empty trajectory");
  if (!(traj.mass.back() > mass_epsilon) || !(traj.mass.front() > mass_epsilon)) {
    throw ZeroMassError("concentration_report: zero mass");
  }
  DiagnosticReport r;
  r.name = "concentration";
  const double v0 = traj.variance.front();
  const double v1 = traj.variance.back();
  const double mean = traj.first_moment.back() / traj.mass.back();
  r.measured = {{"variance_initial", v0}, {"variance_final", v1}, {"normalized_first_moment", mean},
                {"final_mass", traj.mass.back()}};
  r.bounds = {{"target_point", target}, {"variance_bound", v0 / 100.0}, {"tolerance", tol}};
  r.worst_index = traj.times.size() - 1;
  const bool variance_ok = v1 <= v0 / 100.0;
  const bool mean_ok = std::abs(mean - target) < tol;
  if (!variance_ok || !mean_ok) {
    r.status = Status::fail;
    r.detail = !variance_ok ? "no concentration" : "first moment away from the target point";
  }
  return r;
}

DiagnosticReport fitness_ratio_report(const Trajectory& traj, const SelectionOperator& op) {
  DiagnosticReport r;
  r.name = "fitness_ratio";
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_i = 0;
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const GridMeasure& mu = traj.snapshots[i];
    const double m = total_mass(mu);
    if (!(m > mass_epsilon)) continue;
    const double ratio = pair(mu, op.values(mu)) / m;
    if (ratio > worst) {
      worst = ratio;
      worst_i = i;
    }
  }
  r.measured.emplace_back("max_fitness_ratio", worst);
  r.worst_index = worst_i;
  if (!op.meta().fitness_F) {
    r.status = Status::warn;
    r.detail = "F unverified; empirical ratio recorded";
    return r;
  }
  const double F = *op.meta().fitness_F;
  r.bounds.emplace_back("F", F);
  if (worst > F + 1e-10 * std::abs(F) + 1e-14) {
    r.status = Status::fail;
    r.detail = "<mu, S[mu]> exceeds F mu(X)";
  }
  return r;
}

}  // namespace selection
