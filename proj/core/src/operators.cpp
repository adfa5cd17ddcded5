#include "selection/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace selection {

namespace {

constexpr double rel_slack = 1e-10;
constexpr double abs_slack = 1e-14;

double kernel_value(const Kernel& kernel, double z) {
  if (kernel.jump_radius) {
    const double r = *kernel.jump_radius;
    if (std::abs(std::abs(z) - r) <= 1e-9 * std::max(1.0, r)) return kernel.jump_value;
  }
  return kernel.eval(z);
}

std::shared_ptr<const OperatorMeta> make_meta(OperatorMeta meta) {
  return std::make_shared<const OperatorMeta>(std::move(meta));
}

OperatorMeta constant_k_meta(double k, std::optional<double> F, std::optional<double> n,
                             std::string k_text) {
  OperatorMeta m;
  m.k = [k](double) { return k; };
  m.fitness_F = F;
  m.sup_bound_n = n;
  m.k_text = std::move(k_text);
  return m;
}

std::string number_text(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

class CompetitiveTriple final : public SelectionOperator {
 public:
  CompetitiveTriple() : SelectionOperator(constant_k_meta(2.0, 1.0, std::nullopt, "2")) {}
  std::string name() const override { return "competitive_triple"; }
  FunctionSamples values(const GridMeasure& mu) const override {
    const auto s = eval_competitive_triple(triple_weights(mu));
    return FunctionSamples(mu.grid(), {1.0}, mu.atom_locations(), {s[0], s[1], s[2]});
  }
};

class Cannibalism final : public SelectionOperator {
 public:
  Cannibalism(double r, double alpha, double A)
      : SelectionOperator(constant_k_meta((1.0 + alpha) * A, r, std::nullopt,
                                          "(1+alpha)A = " + number_text((1.0 + alpha) * A))),
        r_(r),
        alpha_(alpha),
        A_(A) {}
  std::string name() const override { return "cannibalism"; }
  FunctionSamples values(const GridMeasure& mu) const override {
    const Grid& g = mu.grid();
    if (g.lo < 0.0 || g.hi > A_) throw std::invalid_argument("cannibalism: the domain must lie in [0, A]");
    return eval_cannibalism(mu, r_, alpha_);
  }

 private:
  double r_, alpha_, A_;
};

class KernelCompetition final : public SelectionOperator {
 public:
  KernelCompetition(Profile a, Kernel kernel, double a_sup)
      : SelectionOperator(constant_k_meta(kernel.sup_abs, a_sup, std::nullopt,
                                          "sup|J| = " + number_text(kernel.sup_abs))),
        a_(std::move(a)),
        kernel_(std::move(kernel)) {}
  std::string name() const override { return "kernel"; }
  FunctionSamples values(const GridMeasure& mu) const override {
    return eval_kernel(mu, FunctionSamples::sample(mu, a_.eval), kernel_);
  }

 private:
  Profile a_;
  Kernel kernel_;
};

class PreyPredator final : public SelectionOperator {
 public:
  PreyPredator(Profile a, double A, double B, double eta, CellRule rule)
      : SelectionOperator(constant_k_meta(A + B, std::nullopt, std::nullopt,
                                          "A+B = " + number_text(A + B))),
        a_(std::move(a)),
        A_(A),
        B_(B),
        eta_(eta),
        rule_(rule) {}
  std::string name() const override { return "prey_predator"; }
  FunctionSamples values(const GridMeasure& mu) const override {
    return eval_prey_predator(mu, FunctionSamples::sample(mu, a_.eval), A_, B_, eta_, rule_);
  }

 private:
  Profile a_;
  double A_, B_, eta_;
  CellRule rule_;
};

class UniformCompetition final : public SelectionOperator {
 public:
  UniformCompetition(Profile r, double r_max)
      : SelectionOperator(constant_k_meta(1.0, r_max, std::nullopt, "1")), r_(std::move(r)) {}
  std::string name() const override { return "uniform_competition"; }
  FunctionSamples values(const GridMeasure& mu) const override {
    return eval_uniform_competition(mu, FunctionSamples::sample(mu, r_.eval));
  }

 private:
  Profile r_;
};

class Saturating final : public SelectionOperator {
 public:
  Saturating() : SelectionOperator(constant_k_meta(1.0, 1.0, 1.0, "1")) {}
  std::string name() const override { return "saturating"; }
  FunctionSamples values(const GridMeasure& mu) const override { return eval_saturating(mu); }
};

FunctionSamples map_cells_atoms(const GridMeasure& mu, std::vector<double> cells, std::vector<double> atoms) {
  return FunctionSamples(mu.grid(), std::move(cells), mu.atom_locations(), std::move(atoms));
}

}  // namespace

std::string OperatorMeta::fitness_text() const {
  return fitness_F ? number_text(*fitness_F) : std::string("unverified");
}

SelectionField::SelectionField(FunctionSamples values, std::shared_ptr<const OperatorMeta> meta)
    : values_(std::move(values)), meta_(std::move(meta)) {
  if (!meta_) throw std::invalid_argument("SelectionField: missing metadata");
}

SelectionOperator::SelectionOperator(OperatorMeta meta) : meta_(make_meta(std::move(meta))) {}

SelectionField SelectionOperator::evaluate(const GridMeasure& mu) const {
  return SelectionField(values(mu), meta_);
}

std::array<double, 3> eval_competitive_triple(const std::array<double, 3>& m) {
  for (double v : m) {
    if (!(v >= 0.0)) throw std::invalid_argument("competitive_triple: state must be nonnegative");
  }
  std::array<double, 3> s{};
  for (std::size_t i = 0; i < 3; ++i) s[i] = (1.0 - m[i]) - 2.0 * m[(i + 1) % 3];
  return s;
}

FunctionSamples eval_cannibalism(const GridMeasure& mu, double r, double alpha) {
  if (!(r > 0.0) || !(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("cannibalism: need r > 0 and alpha in (0, 1]");
  }
  const double m = total_mass(mu);
  const double mom = first_moment(mu);
  const Grid& g = mu.grid();
  std::vector<double> cells(g.n_cells);
  for (std::size_t i = 0; i < g.n_cells; ++i) cells[i] = (r + (alpha * g.midpoint(i)) * m) - mom;
  std::vector<double> atoms;
  atoms.reserve(mu.atoms().size());
  for (const Atom& a : mu.atoms()) atoms.push_back((r + (alpha * a.location) * m) - mom);
  return map_cells_atoms(mu, std::move(cells), std::move(atoms));
}

FunctionSamples convolve(const GridMeasure& mu, const Kernel& kernel) {
  const Grid& g = mu.grid();
  const std::size_t n = g.n_cells;
  const double dx = g.dx();
  const auto dens = mu.density();
  const auto atoms = mu.atoms();

  // table[n - 1 + o] = J(o dx) for o in (-n, n); the inner loop over i then
  // reads the table contiguously.
  std::vector<double> table(2 * n - 1);
  for (std::size_t k = 0; k < table.size(); ++k) {
    const double o = static_cast<double>(k) - static_cast<double>(n - 1);
    table[k] = kernel_value(kernel, o * dx);
  }

  std::vector<double> cells(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double dj = dens[j];
    if (dj == 0.0) continue;
    const double* row = table.data() + (n - 1 - j);
    for (std::size_t i = 0; i < n; ++i) cells[i] += row[i] * dj;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double at = 0.0;
    const double x = g.midpoint(i);
    for (const Atom& a : atoms) at += kernel_value(kernel, x - a.location) * a.weight;
    cells[i] = cells[i] * dx + at;
  }

  std::vector<double> atom_vals(atoms.size());
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const double y = atoms[k].location;
    double c = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (dens[j] != 0.0) c += kernel_value(kernel, y - g.midpoint(j)) * dens[j];
    }
    double at = 0.0;
    for (const Atom& a : atoms) at += kernel_value(kernel, y - a.location) * a.weight;
    atom_vals[k] = c * dx + at;
  }
  return map_cells_atoms(mu, std::move(cells), std::move(atom_vals));
}

FunctionSamples eval_kernel(const GridMeasure& mu, const FunctionSamples& a, const Kernel& kernel) {
  if (!a.compatible_with(mu)) throw GridMismatchError("eval_kernel: profile samples do not match the measure");
  const FunctionSamples conv = convolve(mu, kernel);
  std::vector<double> cells(a.cell_values().size());
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = a.cell_values()[i] - conv.cell_values()[i];
  std::vector<double> atoms(a.atom_values().size());
  for (std::size_t k = 0; k < atoms.size(); ++k) atoms[k] = a.atom_values()[k] - conv.atom_values()[k];
  return map_cells_atoms(mu, std::move(cells), std::move(atoms));
}

FunctionSamples eval_prey_predator(const GridMeasure& mu, const FunctionSamples& a, double A, double B,
                                   double eta, CellRule rule) {
  if (!(A >= 0.0) || !(B >= 0.0) || !(eta > 0.0)) {
    throw std::invalid_argument("prey_predator: need A >= 0, B >= 0, eta > 0");
  }
  if (!a.compatible_with(mu)) throw GridMismatchError("eval_prey_predator: profile samples do not match the measure");
  const MassProfile prof(mu);
  auto at = [&](double x, double ax) {
    const double prey = prof.window(x - eta, x, WindowEnd::closed_left, rule);
    const double pred = prof.window(x, x + eta, WindowEnd::closed_left, rule);
    return (ax + A * prey) - B * pred;
  };
  const Grid& g = mu.grid();
  std::vector<double> cells(g.n_cells);
  for (std::size_t i = 0; i < g.n_cells; ++i) cells[i] = at(g.midpoint(i), a.cell_values()[i]);
  std::vector<double> atoms(mu.atoms().size());
  for (std::size_t k = 0; k < atoms.size(); ++k) atoms[k] = at(mu.atoms()[k].location, a.atom_values()[k]);
  return map_cells_atoms(mu, std::move(cells), std::move(atoms));
}

FunctionSamples eval_uniform_competition(const GridMeasure& mu, const FunctionSamples& r) {
  if (!r.compatible_with(mu)) throw GridMismatchError("eval_uniform_competition: profile samples do not match the measure");
  const double m = total_mass(mu);
  std::vector<double> cells(r.cell_values().begin(), r.cell_values().end());
  for (double& v : cells) v = v - m;
  std::vector<double> atoms(r.atom_values().begin(), r.atom_values().end());
  for (double& v : atoms) v = v - m;
  return map_cells_atoms(mu, std::move(cells), std::move(atoms));
}

FunctionSamples eval_saturating(const GridMeasure& mu) {
  return FunctionSamples::constant(mu, std::exp(-total_mass(mu)));
}

Grid triple_grid() { return Grid(0.0, 2.0, 1); }

GridMeasure triple_state(const std::array<double, 3>& w) {
  return GridMeasure(triple_grid(), {0.0}, {{0.0, w[0]}, {1.0, w[1]}, {2.0, w[2]}});
}

std::array<double, 3> triple_weights(const GridMeasure& mu) {
  const auto atoms = mu.atoms();
  if (!(mu.grid() == triple_grid()) || atoms.size() != 3 || atoms[0].location != 0.0 ||
      atoms[1].location != 1.0 || atoms[2].location != 2.0 || mu.density()[0] != 0.0) {
    throw std::invalid_argument("competitive_triple: state must be three atoms at 0, 1, 2 on [0, 2]");
  }
  return {atoms[0].weight, atoms[1].weight, atoms[2].weight};
}

OperatorPtr make_competitive_triple() { return std::make_shared<CompetitiveTriple>(); }

OperatorPtr make_cannibalism(double r, double alpha, double A) {
  if (!(r > 0.0) || !(alpha > 0.0 && alpha <= 1.0) || !(A > 0.0)) {
    throw std::invalid_argument("cannibalism: need r > 0, alpha in (0, 1], A > 0");
  }
  return std::make_shared<Cannibalism>(r, alpha, A);
}

OperatorPtr make_kernel(Profile a, Kernel kernel, double a_sup) {
  if (!kernel.nonnegative) throw std::invalid_argument("kernel: only nonnegative kernels are supported");
  return std::make_shared<KernelCompetition>(std::move(a), std::move(kernel), a_sup);
}

OperatorPtr make_truncated_kernel(double h) {
  Profile a{"a_h", [h](double x) { return kernel_ah(h, x); }};
  return make_kernel(std::move(a), truncated_exponential_kernel(h), kernel_ah(h, 0.0));
}

OperatorPtr make_prey_predator(Profile a, double A, double B, double eta, CellRule rule) {
  if (!(A >= 0.0) || !(B >= 0.0) || !(eta > 0.0)) {
    throw std::invalid_argument("prey_predator: need A >= 0, B >= 0, eta > 0");
  }
  return std::make_shared<PreyPredator>(std::move(a), A, B, eta, rule);
}

OperatorPtr make_uniform_competition(Profile r, double r_max) {
  if (!(r_max > 0.0)) throw std::invalid_argument("uniform_competition: r_max must be positive");
  return std::make_shared<UniformCompetition>(std::move(r), r_max);
}

OperatorPtr make_saturating() { return std::make_shared<Saturating>(); }

HypothesisReport check_hypotheses(const SelectionOperator& op, const std::vector<GridMeasure>& samples) {
  return check_hypotheses(op, samples, op.meta());
}

HypothesisReport check_hypotheses(const SelectionOperator& op, const std::vector<GridMeasure>& samples,
                                  const OperatorMeta& meta) {
  HypothesisReport rep;
  std::vector<FunctionSamples> fields;
  std::vector<double> masses;
  fields.reserve(samples.size());
  for (const GridMeasure& mu : samples) {
    fields.push_back(op.values(mu));
    masses.push_back(total_mass(mu));
  }

  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (meta.fitness_F) {
      ++rep.fitness_checked;
      const double fit = pair(samples[i], fields[i]);
      const double bound = *meta.fitness_F * masses[i];
      if (masses[i] > 0.0 && bound != 0.0) rep.max_fitness_ratio = std::max(rep.max_fitness_ratio, fit / bound);
      if (fit > bound + rel_slack * std::abs(bound) + abs_slack) {
        ++rep.fitness_violations;
        std::ostringstream os;
        os.precision(17);
        os << "fitness: sample " << i << ": <mu,S> = " << fit << " > F*mass = " << bound;
        rep.violations.push_back(os.str());
      }
    }
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      if (!samples[i].same_layout(samples[j])) continue;
      ++rep.pairs_checked;
      const double lhs = sup_distance(fields[i], fields[j]);
      const double tv = tv_distance(samples[i], samples[j]);
      const double rhs = meta.k(std::max(masses[i], masses[j])) * tv;
      if (rhs > 0.0) rep.max_lipschitz_ratio = std::max(rep.max_lipschitz_ratio, lhs / rhs);
      if (lhs > rhs + rel_slack * rhs + abs_slack) {
        ++rep.lipschitz_violations;
        std::ostringstream os;
        os.precision(17);
        os << "lipschitz: samples " << i << "," << j << ": ||dS||_inf = " << lhs << " > k*tv = " << rhs;
        rep.violations.push_back(os.str());
      }
    }
  }
  return rep;
}

double sigma_zero_sup(const SelectionOperator& op, const GridMeasure& layout) {
  const std::vector<double> locs = layout.atom_locations();
  return op.values(GridMeasure::zero(layout.grid(), locs)).sup_abs();
}

}  // namespace selection
