#include "selection/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "selection/dsl.hpp"
#include "selection/oracle.hpp"
#include "selection/profiles.hpp"

namespace selection {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
    return v.substr(1, v.size() - 2);
  }
  return v;
}

const std::set<std::string> known_sections = {
    "name",   "domain",      "grid",       "initial",   "operator",   "engine",
    "output", "diagnostics", "probes",     "gronwall",  "stability",  "non_extinction",
    "concentration", "oscillation", "decay", "camille", "snapshot_change", "fitness_ratio",
    "hypotheses"};

std::string section_of(const std::string& key) {
  const auto dot = key.find('.');
  return dot == std::string::npos ? key : key.substr(0, dot);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ValidationError(key, "expected a number, got '" + s + "'");
  }
  return v;
}

}  // namespace

ParseError::ParseError(const std::string& what, std::string key, int line, int column)
    : std::runtime_error(what), key_(std::move(key)), line_(line), column_(column) {}

ValidationError::ValidationError(const std::string& key, const std::string& message)
    : std::runtime_error(key + ": " + message), key_(key) {}

// ---- Config ---------------------------------------------------------------

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    // '#' outside quotes starts a comment.
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) {
        s.resize(i);
        break;
      }
    }
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(line) + ": expected 'key = value'", "", line, 1);
    }
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string value = unquote(trim(std::string_view(s).substr(eq + 1)));
    if (key.empty()) throw ParseError("line " + std::to_string(line) + ": empty key", "", line, 1);
    if (std::count(key.begin(), key.end(), '.') > 1) {
      throw ParseError("line " + std::to_string(line) + ": key '" + key + "' nests more than one level", key, line, 1);
    }
    if (cfg.entries_.count(key)) {
      throw ParseError("line " + std::to_string(line) + ": duplicate key '" + key + "'", key, line, 1);
    }
    cfg.entries_[key] = {value, line};
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path.string() + "'", "", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  const int line = has(key) ? entries_[key].second : 0;
  entries_[key] = {value, line};
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

int Config::line_of(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.second;
}

std::string Config::string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ValidationError(key, "missing required key");
  return it->second.first;
}

std::string Config::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

double Config::number(const std::string& key) const { return parse_double(key, string(key)); }

double Config::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

std::optional<double> Config::optional_number(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return number(key);
}

long Config::integer(const std::string& key) const {
  const std::string s = trim(string(key));
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ValidationError(key, "expected an integer, got '" + s + "'");
  }
  return v;
}

long Config::integer(const std::string& key, long fallback) const { return has(key) ? integer(key) : fallback; }

bool Config::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = trim(string(key));
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw ValidationError(key, "expected true or false, got '" + s + "'");
}

std::vector<std::string> Config::list(const std::string& key) const {
  std::vector<std::string> out;
  if (!has(key)) return out;
  std::istringstream in(string(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> Config::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& s : list(key)) out.push_back(parse_double(key, s));
  return out;
}

// ---- building -------------------------------------------------------------

namespace {

double positive(const Config& c, const std::string& key, double fallback) {
  const double v = c.number(key, fallback);
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(key, "must be positive");
  return v;
}

double nonnegative(const Config& c, const std::string& key, double fallback) {
  const double v = c.number(key, fallback);
  if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(key, "must be nonnegative");
  return v;
}

CellRule parse_cell_rule(const Config& c) {
  const std::string s = c.string("operator.cells", "lumped");
  if (s == "lumped") return CellRule::lumped;
  if (s == "proportional") return CellRule::proportional;
  throw ValidationError("operator.cells", "expected lumped or proportional, got '" + s + "'");
}

std::vector<Atom> parse_atoms(const Config& c, const Grid& g) {
  std::vector<Atom> atoms;
  for (const std::string& item : c.list("initial.atoms")) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ValidationError("initial.atoms", "expected location:weight, got '" + item + "'");
    const double loc = parse_double("initial.atoms", item.substr(0, colon));
    const double w = parse_double("initial.atoms", item.substr(colon + 1));
    if (!g.contains(loc)) throw ValidationError("initial.atoms", "atom location outside the domain");
    if (!(w >= 0.0)) throw ValidationError("initial.atoms", "atom weight must be nonnegative");
    atoms.push_back({loc, w});
  }
  return atoms;
}

GridMeasure build_initial(const Config& c, const Grid& g) {
  const std::string kind = c.string("initial.kind");
  std::vector<Atom> atoms = parse_atoms(c, g);
  try {
    if (kind == "triple") {
      const std::vector<double> w = c.numbers("initial.weights");
      if (w.size() != 3) throw ValidationError("initial.weights", "expected three weights");
      return triple_state({w[0], w[1], w[2]});
    }
    if (kind == "beta") {
      const long p = c.integer("initial.p");
      const long q = c.integer("initial.q");
      if (p < 1 || q < 1 || p > 40 || q > 40) throw ValidationError("initial.p", "Beta parameters must be integers in [1, 40]");
      const double scale = nonnegative(c, "initial.scale", 1.0);
      const double constant = nonnegative(c, "initial.constant", 0.0);
      const double lo = g.lo, width = g.hi - g.lo;
      return GridMeasure::from_density(
          g,
          [=](double x) {
            return scale * beta_pdf(static_cast<int>(p), static_cast<int>(q), (x - lo) / width) + constant;
          },
          std::move(atoms));
    }
    if (kind == "uniform") {
      const double m = nonnegative(c, "initial.mass", 1.0);
      const double d = m / (g.hi - g.lo);
      return GridMeasure::from_density(g, [d](double) { return d; }, std::move(atoms));
    }
    if (kind == "none") {
      return GridMeasure(g, std::vector<double>(g.n_cells, 0.0), std::move(atoms));
    }
  } catch (const std::invalid_argument& e) {
    if (dynamic_cast<const ValidationError*>(&e) == nullptr) throw ValidationError("initial", e.what());
    throw;
  }
  throw ValidationError("initial.kind", "expected beta, uniform, none or triple, got '" + kind + "'");
}

struct RateProfile {
  Profile profile;
  double r_max;
};

RateProfile build_rate_profile(const Config& c) {
  const std::string kind = c.string("operator.profile", "plateau");
  if (kind == "constant") {
    const double v = positive(c, "operator.value", 1.0);
    return {constant_profile(v), v};
  }
  if (kind == "plateau") {
    PlateauParams p;
    p.r_max = c.number("operator.r_max", p.r_max);
    p.eta = c.number("operator.eta", p.eta);
    p.s0 = c.number("operator.s0", p.s0);
    p.s1 = c.number("operator.s1", p.s1);
    p.ramp_width = c.number("operator.ramp_width", p.ramp_width);
    p.ramp_depth = c.number("operator.ramp_depth", p.ramp_depth);
    try {
      return {plateau_profile(p), p.r_max};
    } catch (const std::invalid_argument& e) {
      throw ValidationError("operator.profile", e.what());
    }
  }
  throw ValidationError("operator.profile", "expected plateau or constant, got '" + kind + "'");
}

Profile build_a_profile(const Config& c) {
  return sqrt_decreasing_profile(c.number("operator.a0", 1.0), c.number("operator.a1", 1.5));
}

void build_operator(const Config& c, Scenario& sc) {
  if (!c.has("operator.name")) throw ValidationError("operator", "missing required key operator.name");
  const std::string name = c.string("operator.name");
  sc.operator_name = name;
  try {
    if (name == "competitive_triple") {
      sc.op = make_competitive_triple();
    } else if (name == "cannibalism") {
      sc.op = make_cannibalism(positive(c, "operator.r", 3.0), c.number("operator.alpha", 0.8),
                               positive(c, "operator.A", sc.grid.hi));
    } else if (name == "kernel") {
      const double h = positive(c, "operator.h", sc.grid.hi);
      sc.kernel_h = h;
      const std::string variant = c.string("operator.ah", "corrected");
      if (variant == "corrected") {
        sc.op = make_truncated_kernel(h);
      } else if (variant == "printed") {
        Profile a{"a_h_printed", [h](double x) { return kernel_ah_printed(h, x); }};
        sc.op = make_kernel(std::move(a), truncated_exponential_kernel(h), kernel_ah_printed(h, 0.0));
      } else {
        throw ValidationError("operator.ah", "expected corrected or printed, got '" + variant + "'");
      }
    } else if (name == "prey_predator") {
      sc.op = make_prey_predator(build_a_profile(c), nonnegative(c, "operator.A", 0.8),
                                 nonnegative(c, "operator.B", 0.7), positive(c, "operator.eta", 0.51),
                                 parse_cell_rule(c));
    } else if (name == "uniform_competition") {
      RateProfile rp = build_rate_profile(c);
      sc.rate = FunctionSamples::sample(sc.initial, rp.profile.eval);
      sc.rate_max = rp.r_max;
      sc.op = make_uniform_competition(std::move(rp.profile), rp.r_max);
    } else if (name == "saturating") {
      sc.op = make_saturating();
    } else if (name == "dsl") {
      const std::string text = c.string("operator.dsl");
      dsl::Environment env = dsl::standard_environment(c.number("operator.h", 0.0));
      if (c.has("operator.h")) sc.kernel_h = c.number("operator.h");
      env.window_rule = parse_cell_rule(c);
      if (c.has("operator.a0") || c.has("operator.a1")) {
        Profile a = build_a_profile(c);
        env.add_function("a", a.eval);
      }
      if (c.has("operator.profile")) {
        RateProfile rp = build_rate_profile(c);
        sc.rate = FunctionSamples::sample(sc.initial, rp.profile.eval);
        sc.rate_max = rp.r_max;
        env.add_function("r", rp.profile.eval);
      }
      try {
        sc.op = dsl::make_dsl_operator(text, std::move(env), sc.grid.lo, sc.grid.hi);
      } catch (const dsl::DslError& e) {
        throw ParseError(std::string("operator.dsl: ") + e.what(), "operator.dsl", c.line_of("operator.dsl"),
                         e.column());
      }
    } else {
      throw ValidationError("operator.name", "unknown operator '" + name + "'");
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const ParseError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ValidationError("operator", e.what());
  }
}

EngineConfig build_engine(const Config& c, const Overrides& ov) {
  EngineConfig e;
  e.dt = ov.dt ? *ov.dt : positive(c, "engine.dt", e.dt);
  e.t_end = positive(c, "engine.t_end", e.t_end);
  try {
    e.scheme = ov.scheme ? *ov.scheme : parse_scheme(c.string("engine.scheme", "exponential"));
  } catch (const std::invalid_argument& ex) {
    throw ValidationError("engine.scheme", ex.what());
  }
  e.truncation_n = c.optional_number("engine.truncation_n");
  e.picard_window = positive(c, "engine.picard_window", e.picard_window);
  e.picard_tol = positive(c, "engine.picard_tol", e.picard_tol);
  e.picard_max_iter = static_cast<int>(c.integer("engine.picard_max_iter", e.picard_max_iter));
  const auto steps = static_cast<std::size_t>(std::llround(e.t_end / e.dt));
  const long default_stride = static_cast<long>(std::max<std::size_t>(1, (steps + 1999) / 2000));
  const long stride = c.integer("engine.snapshot_stride", default_stride);
  if (stride <= 0) throw ValidationError("engine.snapshot_stride", "must be positive");
  e.snapshot_stride = static_cast<std::size_t>(stride);
  try {
    e.validate();
  } catch (const std::invalid_argument& ex) {
    throw ValidationError("engine", ex.what());
  }
  return e;
}

const std::set<std::string> known_diagnostics = {"gronwall",      "stability",   "non_extinction", "concentration",
                                                  "oscillation",   "decay_fit",   "fitness_ratio",  "camille",
                                                  "snapshot_change", "hypotheses"};
const std::set<std::string> known_probes = {"dist_Jh", "dist_limit", "dist_camille"};

}  // namespace

Scenario build_scenario(const Config& cfg, const Overrides& ov) {
  for (const auto& [key, v] : cfg.entries()) {
    if (!known_sections.count(section_of(key))) {
      throw ValidationError(key, "unknown section '" + section_of(key) + "'");
    }
  }
  Scenario sc;
  sc.config = cfg;
  sc.name = cfg.string("name", "scenario");

  const bool triple = cfg.string("initial.kind", "") == "triple";
  if (triple) {
    sc.grid = triple_grid();
  } else {
    const double lo = cfg.number("domain.lo", 0.0);
    const double hi = cfg.number("domain.hi", 1.0);
    if (!(lo < hi)) throw ValidationError("domain", "need domain.lo < domain.hi");
    const long cells = ov.cells ? static_cast<long>(*ov.cells) : cfg.integer("grid.cells", 1000);
    if (cells <= 0) throw ValidationError("grid.cells", "must be positive");
    sc.grid = Grid(lo, hi, static_cast<std::size_t>(cells));
  }
  sc.initial = build_initial(cfg, sc.grid);
  build_operator(cfg, sc);
  sc.engine = build_engine(cfg, ov);

  sc.diagnostics = cfg.list("diagnostics.list");
  for (const std::string& d : sc.diagnostics) {
    if (!known_diagnostics.count(d)) throw ValidationError("diagnostics.list", "unknown diagnostic '" + d + "'");
  }
  sc.probes = cfg.list("probes.list");
  for (const std::string& p : sc.probes) {
    if (!known_probes.count(p)) throw ValidationError("probes.list", "unknown probe '" + p + "'");
    if (p == "dist_Jh" && !sc.kernel_h) throw ValidationError("probes.list", "dist_Jh needs operator.h");
    if ((p == "dist_limit" || p == "dist_camille") && !sc.rate) {
      throw ValidationError("probes.list", p + " needs a uniform competition growth profile");
    }
  }

  sc.outputs.series_file = cfg.string("output.series", "");
  const long stride = cfg.integer("output.series_stride", 1);
  if (stride <= 0) throw ValidationError("output.series_stride", "must be positive");
  sc.outputs.series_stride = static_cast<std::size_t>(stride);
  const std::string snaps = cfg.string("output.snapshots", "");
  if (snaps == "final") {
    sc.outputs.snapshots_final = true;
  } else if (snaps == "all") {
    sc.outputs.snapshots_all = true;
  } else if (!snaps.empty()) {
    sc.outputs.snapshot_times = cfg.numbers("output.snapshots");
  }
  sc.outputs.report_file = cfg.string("output.report", "");
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path, const Overrides& ov) {
  return build_scenario(Config::load(path), ov);
}

std::vector<Probe> make_probes(const Scenario& sc) {
  std::vector<Probe> out;
  for (const std::string& p : sc.probes) {
    if (p == "dist_Jh") {
      const double h = *sc.kernel_h;
      const GridMeasure target =
          GridMeasure::from_density(sc.grid, [h](double x) { return kernel_Jh(h, x); }, {});
      out.push_back({p, [target](const GridMeasure& mu, double) {
                       return tv_distance(mu, target);
                     }});
    } else if (p == "dist_limit") {
      const GridMeasure limit = plateau_limit(sc.initial, *sc.rate, *sc.rate_max);
      out.push_back({p, [limit](const GridMeasure& mu, double) { return tv_distance(mu, limit); }});
    } else if (p == "dist_camille") {
      const GridMeasure mu0 = sc.initial;
      const FunctionSamples r = *sc.rate;
      out.push_back({p, [mu0, r](const GridMeasure& mu, double t) {
                       return tv_distance(mu, camille_density(mu0, r, t));
                     }});
    }
  }
  return out;
}

// ---- diagnostics ----------------------------------------------------------

namespace {

std::vector<double> state_vector(const GridMeasure& mu) {
  std::vector<double> v(mu.density().begin(), mu.density().end());
  for (const Atom& a : mu.atoms()) v.push_back(a.weight);
  return v;
}

void expect_flag(DiagnosticReport& r, const Config& c, const std::string& key, bool actual, const std::string& what) {
  if (!c.has(key)) return;
  const bool want = c.boolean(key, false);
  if (want != actual) {
    r.status = Status::fail;
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += what + (actual ? " unexpectedly" : " expected but not observed");
  }
}

DiagnosticReport oscillation_diagnostic(const Scenario& sc, const Trajectory& traj) {
  const Config& c = sc.config;
  OscillationOptions o;
  o.abs_floor = c.number("oscillation.abs_floor", o.abs_floor);
  o.rel_swing = c.number("oscillation.rel_swing", o.rel_swing);
  o.recurrence_eps = c.number("oscillation.eps", o.recurrence_eps);
  o.recurrence_t_min = c.number("oscillation.t_min", o.recurrence_t_min);
  o.convergence_threshold = c.number("oscillation.threshold", o.convergence_threshold);
  o.tail_fraction = c.number("oscillation.tail_fraction", o.tail_fraction);
  o.damped_terms = static_cast<std::size_t>(c.integer("oscillation.damped_terms", static_cast<long>(o.damped_terms)));
  const std::string source = c.string("oscillation.source", "mass");

  OscillationReport rep;
  if (source == "snapshots") {
    std::vector<double> series;
    std::vector<std::vector<double>> states;
    for (const GridMeasure& mu : traj.snapshots) {
      series.push_back(total_mass(mu));
      states.push_back(state_vector(mu));
    }
    rep = oscillation_report(traj.snapshot_times, series, states, o);
  } else if (source == "mass") {
    rep = oscillation_report(traj.times, traj.mass, o);
  } else {
    throw ValidationError("oscillation.source", "expected mass or snapshots");
  }

  DiagnosticReport r;
  r.name = "oscillation";
  r.measured = {{"n_extrema", static_cast<double>(rep.n_extrema)},
                {"damped", rep.damped ? 1.0 : 0.0},
                {"recurrent", rep.recurrent ? 1.0 : 0.0},
                {"best_return", rep.best_return},
                {"non_convergent", rep.non_convergent ? 1.0 : 0.0},
                {"tail_change", rep.tail_change}};
  if (!rep.amplitudes.empty()) r.measured.emplace_back("last_amplitude", rep.amplitudes.back());
  if (c.has("oscillation.min_extrema")) {
    const long need = c.integer("oscillation.min_extrema");
    r.bounds.emplace_back("min_extrema", static_cast<double>(need));
    if (static_cast<long>(rep.n_extrema) < need) {
      r.status = Status::fail;
      r.detail = "too few extrema";
    }
  }
  expect_flag(r, c, "oscillation.expect_damped", rep.damped, "damping");
  expect_flag(r, c, "oscillation.expect_recurrent", rep.recurrent, "recurrence");
  expect_flag(r, c, "oscillation.expect_non_convergent", rep.non_convergent, "non-convergence");
  return r;
}

DiagnosticReport decay_diagnostic(const Scenario& sc, const Trajectory& traj) {
  const Config& c = sc.config;
  const std::string probe = c.string("decay.probe");
  const std::string model_s = c.string("decay.model", "loglog");
  FitModel model;
  if (model_s == "loglog") model = FitModel::loglog;
  else if (model_s == "semilog") model = FitModel::semilog;
  else throw ValidationError("decay.model", "expected loglog or semilog");
  const double t_end = traj.times.back();
  const double t0 = c.number("decay.t0", 0.5 * t_end);
  const double t1 = c.number("decay.t1", t_end);
  const std::vector<double>& d = traj.probe(probe);

  DiagnosticReport r;
  r.name = "decay_fit";
  const DecayFit fit = fit_decay_rate(traj.times, d, t0, t1, model);
  r.measured = {{"slope", fit.slope}, {"stderr", fit.stderr_slope}, {"points", static_cast<double>(fit.points)}};
  if (auto lo = c.optional_number("decay.slope_min")) {
    r.bounds.emplace_back("slope_min", *lo);
    if (fit.slope < *lo) r.status = Status::fail;
  }
  if (auto hi = c.optional_number("decay.slope_max")) {
    r.bounds.emplace_back("slope_max", *hi);
    if (fit.slope > *hi) r.status = Status::fail;
  }
  if (r.status == Status::fail) r.detail = "slope outside the accepted band";
  if (auto from = c.optional_number("decay.drop_from")) {
    const double factor = c.number("decay.drop_factor", 10.0);
    const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), *from - 1e-9);
    if (it == traj.times.end()) throw ValidationError("decay.drop_from", "time beyond the trajectory");
    const double d_ref = d[static_cast<std::size_t>(it - traj.times.begin())];
    const double drop = d_ref / d.back();
    r.measured.emplace_back("drop", drop);
    r.bounds.emplace_back("drop_factor", factor);
    if (!(drop >= factor)) {
      r.status = Status::fail;
      if (!r.detail.empty()) r.detail += "; ";
      r.detail += "distance dropped by less than the required factor";
    }
  }
  return r;
}

DiagnosticReport camille_diagnostic(const Scenario& sc, const Trajectory& traj) {
  if (!sc.rate) throw ValidationError("diagnostics.list", "camille needs a uniform competition growth profile");
  const double tol = sc.config.number("camille.tol", 5.0 * sc.engine.dt);
  double worst_mass = 0.0, worst_tv = 0.0;
  std::size_t worst_i = 0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double m = camille_mass(sc.initial, *sc.rate, traj.times[i]);
    const double e = std::abs(traj.mass[i] - m) / m;
    if (e > worst_mass) {
      worst_mass = e;
      worst_i = i;
    }
  }
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const GridMeasure oracle = camille_density(sc.initial, *sc.rate, traj.snapshot_times[k]);
    worst_tv = std::max(worst_tv, tv_distance(traj.snapshots[k], oracle) / total_mass(oracle));
  }
  DiagnosticReport r;
  r.name = "camille";
  r.measured = {{"max_rel_mass_error", worst_mass}, {"max_rel_tv_error", worst_tv}};
  r.bounds = {{"tolerance", tol}};
  r.worst_index = worst_i;
  if (!(worst_mass <= tol) || !(worst_tv <= tol)) {
    r.status = Status::fail;
    r.detail = "engine departs from the closed form";
  }
  return r;
}

DiagnosticReport snapshot_change_diagnostic(const Scenario& sc, const Trajectory& traj) {
  const double bound = sc.config.number("snapshot_change.max", 1e-6);
  DiagnosticReport r;
  r.name = "snapshot_change";
  if (traj.snapshots.size() < 2) throw ValidationError("snapshot_change", "needs at least two snapshots");
  const std::size_t n = traj.snapshots.size();
  const double change = tv_distance(traj.snapshots[n - 1], traj.snapshots[n - 2]);
  r.measured = {{"final_change", change}, {"spacing", traj.snapshot_times[n - 1] - traj.snapshot_times[n - 2]}};
  r.bounds = {{"max", bound}};
  if (!(change <= bound)) {
    r.status = Status::fail;
    r.detail = "state still moving at the end of the run";
  }
  return r;
}

DiagnosticReport stability_diagnostic(const Scenario& sc, const Trajectory& traj) {
  const double factor = sc.config.number("stability.factor", 1.01);
  const Trajectory other = simulate(sc.initial.scaled(factor), *sc.op, sc.engine);
  return check_stability(traj, other, sc.op->meta(), sigma_zero_sup(*sc.op, sc.initial), sc.engine.dt);
}

DiagnosticReport hypotheses_diagnostic(const Scenario& sc, const Trajectory& traj) {
  const std::size_t want = static_cast<std::size_t>(sc.config.integer("hypotheses.samples", 50));
  std::vector<GridMeasure> samples;
  const std::size_t step = std::max<std::size_t>(1, traj.snapshots.size() / std::max<std::size_t>(1, want));
  for (std::size_t i = 0; i < traj.snapshots.size(); i += step) samples.push_back(traj.snapshots[i]);
  const HypothesisReport h = check_hypotheses(*sc.op, samples);
  DiagnosticReport r;
  r.name = "hypotheses";
  r.measured = {{"pairs", static_cast<double>(h.pairs_checked)},
                {"lipschitz_violations", static_cast<double>(h.lipschitz_violations)},
                {"fitness_violations", static_cast<double>(h.fitness_violations)},
                {"max_lipschitz_ratio", h.max_lipschitz_ratio}};
  if (h.fitness_checked > 0) r.measured.emplace_back("max_fitness_ratio", h.max_fitness_ratio);
  if (!h.ok()) {
    r.status = Status::fail;
    r.detail = h.violations.front();
  } else if (!sc.op->meta().fitness_F) {
    r.status = Status::warn;
    r.detail = "F unverified; only the Lipschitz bound was checked";
  }
  return r;
}

}  // namespace

DiagnosticReport run_diagnostic(const Scenario& sc, const std::string& name, const Trajectory& traj) {
  if (name == "gronwall") return check_gronwall(traj, sc.op->meta().fitness_F, sc.engine.dt);
  if (name == "stability") return stability_diagnostic(sc, traj);
  if (name == "non_extinction") return check_non_extinction(traj, growth_set_mass(*sc.op, sc.initial));
  if (name == "concentration") {
    return concentration_report(traj, sc.config.number("concentration.target", sc.grid.hi),
                                sc.config.number("concentration.tol", 0.02));
  }
  if (name == "oscillation") return oscillation_diagnostic(sc, traj);
  if (name == "decay_fit") return decay_diagnostic(sc, traj);
  if (name == "fitness_ratio") return fitness_ratio_report(traj, *sc.op);
  if (name == "camille") return camille_diagnostic(sc, traj);
  if (name == "snapshot_change") return snapshot_change_diagnostic(sc, traj);
  if (name == "hypotheses") return hypotheses_diagnostic(sc, traj);
  throw ValidationError("diagnostics.list", "unknown diagnostic '" + name + "'");
}

namespace {

std::string time_tag(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", t);
  return buf;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << content;
}

}  // namespace

RunResult run(const Scenario& sc, const std::filesystem::path& out_dir, std::ostream& log) {
  RunResult res;
  res.trajectory = simulate(sc.initial, *sc.op, sc.engine, make_probes(sc));
  const Trajectory& traj = res.trajectory;
  if (traj.status == RunStatus::blow_up) log << sc.name << ": blowup: " << traj.detail << '\n';

  bool failed = false;
  for (const std::string& d : sc.diagnostics) {
    res.reports.push_back(run_diagnostic(sc, d, traj));
    log << sc.name << ": " << res.reports.back().to_text() << '\n';
    failed = failed || res.reports.back().status == Status::fail;
  }
  res.exit_code = failed ? 1 : 0;

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    if (!sc.outputs.series_file.empty()) {
      std::ostringstream os;
      write_series_csv(os, traj, sc.outputs.series_stride);
      write_file(out_dir / sc.outputs.series_file, os.str());
    }
    auto snapshot = [&](std::size_t k) {
      std::ostringstream os;
      write_snapshot_csv(os, traj.snapshots[k]);
      write_file(out_dir / ("snapshot_t" + time_tag(traj.snapshot_times[k]) + ".csv"), os.str());
    };
    if (sc.outputs.snapshots_all) {
      for (std::size_t k = 0; k < traj.snapshots.size(); ++k) snapshot(k);
    } else if (sc.outputs.snapshots_final) {
      snapshot(traj.snapshots.size() - 1);
    } else {
      for (double t : sc.outputs.snapshot_times) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < traj.snapshot_times.size(); ++k) {
          if (std::abs(traj.snapshot_times[k] - t) < std::abs(traj.snapshot_times[best] - t)) best = k;
        }
        snapshot(best);
      }
    }
    if (!sc.outputs.report_file.empty()) {
      nlohmann::ordered_json doc = nlohmann::ordered_json::parse(reports_to_json(res.reports));
      doc["scenario"] = sc.name;
      doc["operator"] = sc.operator_name;
      doc["scheme"] = to_string(sc.engine.scheme);
      doc["dt"] = sc.engine.dt;
      doc["n_cells"] = sc.grid.n_cells;
      doc["status"] = traj.status == RunStatus::blow_up ? "blowup" : "completed";
      doc["final_time"] = traj.times.back();
      doc["final_mass"] = traj.mass.back();
      doc["exit_code"] = res.exit_code;
      write_file(out_dir / sc.outputs.report_file, doc.dump(2) + "\n");
    }
  }
  return res;
}

std::string list_builtins() {
  return "competitive_triple   params: (none)                     k(r) = 2            F: 1           "
         "three-species cyclic competition, traits as atoms at 0, 1, 2\n"
         "cannibalism          params: r, alpha, A                k(r) = (1+alpha)A   F: r           "
         "cannibalistic competition on the trait interval [0, A]\n"
         "kernel               params: h, ah                      k(r) = sup|J_h|     F: sup a_h     "
         "nonlocal competition through a truncated exponential kernel on [-h, h]\n"
         "prey_predator        params: A, B, eta, a0, a1, cells   k(r) = A+B          F: unverified  "
         "food-chain interaction through trait windows of width eta\n"
         "uniform_competition  params: profile, r_max, eta, s0, s1, ramp_width, ramp_depth, value  "
         "k(r) = 1   F: r_M   competition for one shared resource with growth profile r(x)\n"
         "saturating           params: (none)                     k(r) = 1            F: 1           "
         "growth rate exp(-mass), bounded by 1, population grows without bound\n";
}

}  // namespace selection
