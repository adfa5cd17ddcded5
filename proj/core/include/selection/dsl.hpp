#pragma once

// Expression language for user-defined selection operators.
//
//   expr    = term { ("+" | "-") term } ;
//   term    = unary { ("*" | "/") unary } ;
//   unary   = "-" unary | primary ;
//   primary = number | "x" | "y" | "(" expr ")"
//           | "mass" "(" "mu" ")"
//           | "moment" "(" "mu" "," expr ")"
//           | "window" "(" "mu" "," expr "," expr ")"
//           | "conv" "(" ident "," "mu" ")"
//           | ident "(" expr ")" ;
//
// `y` is bound only inside moment(); window bounds and function arguments
// outside moment() are expressions in `x`.

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "selection/measure.hpp"
#include "selection/operators.hpp"
#include "selection/profiles.hpp"

namespace selection::dsl {

class DslError : public std::runtime_error {
 public:
  DslError(const std::string& what, int line, int column);
  [[nodiscard]] int line() const noexcept { return line_; }
  [[nodiscard]] int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

class SyntaxError : public DslError {
 public:
  using DslError::DslError;
};

class UnknownIdentifier : public DslError {
 public:
  using DslError::DslError;
};

class DivisionByZero : public DslError {
 public:
  using DslError::DslError;
};

class UnknownFunction : public DslError {
 public:
  using DslError::DslError;
};

enum class NodeKind { number, var_x, var_y, call, mass, moment, window, conv, add, sub, mul, div, neg };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind;
  double value = 0.0;    // number
  std::string name;      // call: function name; conv: kernel name
  std::vector<NodePtr> children;
  int line = 1;
  int column = 1;
};

// Structural equality, ignoring source positions.
bool equal(const Node& a, const Node& b);

NodePtr parse(std::string_view text);

// Minimal-parenthesis rendering; parse(to_string(e)) is structurally equal to e.
std::string to_string(const Node& e);

struct Function {
  std::function<double(double)> fn;
  // Lipschitz constant on X, used only when the argument depends on mu.
  double lipschitz = std::numeric_limits<double>::infinity();
};

struct Environment {
  std::map<std::string, Function, std::less<>> functions;
  std::map<std::string, Kernel, std::less<>> kernels;
  CellRule window_rule = CellRule::lumped;

  void add_function(std::string name, std::function<double(double)> fn,
                    double lipschitz = std::numeric_limits<double>::infinity());
  void add_kernel(Kernel k);
};

// Registers J and, when h > 0, J_h.
Environment standard_environment(double h = 0.0);

// Values at the cell midpoints and atoms of mu. Aggregates are computed once
// per evaluation; windows and convolutions per point.
FunctionSamples evaluate(const Node& e, const GridMeasure& mu, const Environment& env);

// Conservative k(r) from structural rules, bounds propagated by interval
// arithmetic over x in [lo, hi] and masses <= r. F is set when every additive
// term has a finite upper bound, with the pair alpha*x*mass(mu) - moment(mu, y)
// (alpha <= 1, lo >= 0) counted as nonpositive.
OperatorMeta infer_meta(const NodePtr& e, double lo, double hi, const Environment& env);

class DslOperator final : public SelectionOperator {
 public:
  DslOperator(NodePtr expr, Environment env, double lo, double hi);

  [[nodiscard]] std::string name() const override { return "dsl"; }
  [[nodiscard]] FunctionSamples values(const GridMeasure& mu) const override;
  [[nodiscard]] const Node& expr() const noexcept { return *expr_; }

 private:
  NodePtr expr_;
  Environment env_;
};

OperatorPtr make_dsl_operator(std::string_view text, Environment env, double lo, double hi);

}  // namespace selection::dsl
