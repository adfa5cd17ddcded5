#pragma once

// Selection pressure operators: maps from finite nonnegative measures to
// bounded functions on the trait space, each carrying a Lipschitz function
// k(r) and (when known) a fitness bound F.

#include <array>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "selection/measure.hpp"
#include "selection/profiles.hpp"

namespace selection {

struct OperatorMeta {
  // ||S[mu] - S[nu]||_inf <= k(r) ||mu - nu||_TV whenever both masses are <= r.
  std::function<double(double)> k;
  // <mu, S[mu]> <= F mu(X); empty means unverified.
  std::optional<double> fitness_F;
  // Uniform upper bound of S, when one exists.
  std::optional<double> sup_bound_n;
  std::string k_text;

  [[nodiscard]] std::string fitness_text() const;
};

class SelectionField {
 public:
  SelectionField(FunctionSamples values, std::shared_ptr<const OperatorMeta> meta);

  [[nodiscard]] const FunctionSamples& values() const noexcept { return values_; }
  [[nodiscard]] const OperatorMeta& meta() const noexcept { return *meta_; }
  [[nodiscard]] std::shared_ptr<const OperatorMeta> meta_ptr() const noexcept { return meta_; }

 private:
  FunctionSamples values_;
  std::shared_ptr<const OperatorMeta> meta_;
};

class SelectionOperator {
 public:
  virtual ~SelectionOperator() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual FunctionSamples values(const GridMeasure& mu) const = 0;

  [[nodiscard]] SelectionField evaluate(const GridMeasure& mu) const;
  [[nodiscard]] const OperatorMeta& meta() const noexcept { return *meta_; }
  [[nodiscard]] std::shared_ptr<const OperatorMeta> meta_ptr() const noexcept { return meta_; }

 protected:
  explicit SelectionOperator(OperatorMeta meta);

 private:
  std::shared_ptr<const OperatorMeta> meta_;
};

using OperatorPtr = std::shared_ptr<const SelectionOperator>;

// ---- pointwise evaluators ------------------------------------------------

// S(x_i) = 1 - m_i - 2 m_{i+1}, indices mod 3.
std::array<double, 3> eval_competitive_triple(const std::array<double, 3>& state);

// S(x) = r + alpha x mu(X) - <mu, Id>
FunctionSamples eval_cannibalism(const GridMeasure& mu, double r, double alpha);

// (J * mu)(x) at every evaluation point: midpoint quadrature over cells plus
// exact atom sums. Cell-to-cell terms use a Toeplitz table summed in
// ascending source index.
FunctionSamples convolve(const GridMeasure& mu, const Kernel& kernel);

// S(x) = a(x) - (J * mu)(x)
FunctionSamples eval_kernel(const GridMeasure& mu, const FunctionSamples& a, const Kernel& kernel);

// S(x) = a(x) + A mu([x-eta, x)) - B mu([x, x+eta))
FunctionSamples eval_prey_predator(const GridMeasure& mu, const FunctionSamples& a, double A, double B,
                                   double eta, CellRule rule = CellRule::lumped);

// S(x) = r(x) - mu(X)
FunctionSamples eval_uniform_competition(const GridMeasure& mu, const FunctionSamples& r);

// S = exp(-mu(X))
FunctionSamples eval_saturating(const GridMeasure& mu);

// ---- built-in operators ---------------------------------------------------

// Three traits modelled as atoms at 0, 1, 2 on [0,2]; the single cell must
// carry no mass.
Grid triple_grid();
GridMeasure triple_state(const std::array<double, 3>& weights);
std::array<double, 3> triple_weights(const GridMeasure& mu);

OperatorPtr make_competitive_triple();
OperatorPtr make_cannibalism(double r, double alpha, double A);
OperatorPtr make_kernel(Profile a, Kernel kernel, double a_sup);
// Truncated kernel competition on [-h,h]: a_h and J_h.
OperatorPtr make_truncated_kernel(double h);
OperatorPtr make_prey_predator(Profile a, double A, double B, double eta,
                               CellRule rule = CellRule::lumped);
OperatorPtr make_uniform_competition(Profile r, double r_max);
OperatorPtr make_saturating();

// ---- hypothesis checks ----------------------------------------------------

struct HypothesisReport {
  std::size_t pairs_checked = 0;
  std::size_t lipschitz_violations = 0;
  std::size_t fitness_checked = 0;
  std::size_t fitness_violations = 0;
  double max_lipschitz_ratio = 0.0;  // ||dS||_inf / (k * tv)
  double max_fitness_ratio = -std::numeric_limits<double>::infinity();  // <mu,S>/(F mass)
  std::vector<std::string> violations;

  [[nodiscard]] bool ok() const noexcept { return lipschitz_violations == 0 && fitness_violations == 0; }
};

// Checks the Lipschitz bound on every pair of samples and the fitness bound
// on every sample, against `meta` (defaults to the operator's own).
HypothesisReport check_hypotheses(const SelectionOperator& op, const std::vector<GridMeasure>& samples);
HypothesisReport check_hypotheses(const SelectionOperator& op, const std::vector<GridMeasure>& samples,
                                  const OperatorMeta& meta);

// ||S[0]||_inf on the given layout.
double sigma_zero_sup(const SelectionOperator& op, const GridMeasure& layout);

}  // namespace selection
