#include "selection/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace selection::dsl {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::string where(int line, int column) {
  return std::to_string(line) + ":" + std::to_string(column);
}

// ---- lexing ---------------------------------------------------------------

enum class Tok { number, ident, lparen, rparen, comma, plus, minus, star, slash, end };

struct Token {
  Tok kind;
  std::string text;
  double value = 0.0;
  int line = 1;
  int column = 1;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (s[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < s.size()) {
    const char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      advance(1);
      continue;
    }
    Token t{Tok::end, "", 0.0, line, col};
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      const auto res = std::from_chars(s.data() + i, s.data() + s.size(), v);
      if (res.ec != std::errc{}) {
        throw SyntaxError("malformed number at " + where(line, col), line, col);
      }
      const auto len = static_cast<std::size_t>(res.ptr - (s.data() + i));
      t.kind = Tok::number;
      t.value = v;
      t.text = std::string(s.substr(i, len));
      advance(len);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.kind = Tok::ident;
      t.text = std::string(s.substr(i, j - i));
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    switch (c) {
      case '(': t.kind = Tok::lparen; break;
      case ')': t.kind = Tok::rparen; break;
      case ',': t.kind = Tok::comma; break;
      case '+': t.kind = Tok::plus; break;
      case '-': t.kind = Tok::minus; break;
      case '*': t.kind = Tok::star; break;
      case '/': t.kind = Tok::slash; break;
      default:
        throw SyntaxError(std::string("unexpected character '") + c + "' at " + where(line, col), line, col);
    }
    t.text = std::string(1, c);
    advance(1);
    out.push_back(std::move(t));
  }
  out.push_back({Tok::end, "", 0.0, line, col});
  return out;
}

// ---- parsing --------------------------------------------------------------

enum class Scope { top, moment, bound };

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  NodePtr parse_all() {
    NodePtr e = expr(Scope::top);
    if (peek().kind != Tok::end) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, peek()); }
  [[noreturn]] static void fail_at(const std::string& msg, const Token& t) {
    throw SyntaxError(msg + " at " + where(t.line, t.column), t.line, t.column);
  }

  void expect(Tok kind, const char* what) {
    if (peek().kind != kind) {
      fail(std::string("expected ") + what + (peek().kind == Tok::end ? " before end of input" : ", found '" + peek().text + "'"));
    }
    ++pos_;
  }

  static NodePtr make(NodeKind k, const Token& at, std::vector<NodePtr> children = {}) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->children = std::move(children);
    n->line = at.line;
    n->column = at.column;
    return n;
  }

  NodePtr expr(Scope s) {
    NodePtr lhs = term(s);
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const Token& op = take();
      NodePtr rhs = term(s);
      lhs = make(op.kind == Tok::plus ? NodeKind::add : NodeKind::sub, op, {lhs, rhs});
    }
    return lhs;
  }

  NodePtr term(Scope s) {
    NodePtr lhs = unary(s);
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      const Token& op = take();
      NodePtr rhs = unary(s);
      lhs = make(op.kind == Tok::star ? NodeKind::mul : NodeKind::div, op, {lhs, rhs});
    }
    return lhs;
  }

  NodePtr unary(Scope s) {
    if (peek().kind == Tok::minus) {
      const Token& op = take();
      return make(NodeKind::neg, op, {unary(s)});
    }
    return primary(s);
  }

  void expect_mu() {
    if (peek().kind != Tok::ident || peek().text != "mu") fail("expected 'mu'");
    ++pos_;
  }

  NodePtr primary(Scope s) {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number: {
        take();
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::number;
        n->value = t.value;
        n->line = t.line;
        n->column = t.column;
        return n;
      }
      case Tok::lparen: {
        take();
        NodePtr e = expr(s);
        expect(Tok::rparen, "')'");
        return e;
      }
      case Tok::ident:
        return identifier(s);
      case Tok::end:
        fail("unexpected end of input");
      default:
        fail("unexpected '" + t.text + "'");
    }
  }

  NodePtr identifier(Scope s) {
    const Token& t = take();
    const std::string& id = t.text;
    const bool call = peek().kind == Tok::lparen;

    if (id == "x" && !call) {
      if (s == Scope::moment) fail_at("'x' is not available inside moment(); use 'y'", t);
      return make(NodeKind::var_x, t);
    }
    if (id == "y" && !call) {
      if (s != Scope::moment) fail_at("'y' is only bound inside moment()", t);
      return make(NodeKind::var_y, t);
    }
    if (id == "mu") fail_at("'mu' may only appear as an argument of mass, moment, window or conv", t);

    const bool aggregate = id == "mass" || id == "moment" || id == "window" || id == "conv";
    if (aggregate) {
      if (!call) fail_at("'" + id + "' must be called", t);
      if (s != Scope::top) fail_at("aggregate '" + id + "' is not allowed here", t);
      take();
      NodePtr n;
      if (id == "mass") {
        expect_mu();
        n = make(NodeKind::mass, t);
      } else if (id == "moment") {
        expect_mu();
        expect(Tok::comma, "','");
        n = make(NodeKind::moment, t, {expr(Scope::moment)});
      } else if (id == "window") {
        expect_mu();
        expect(Tok::comma, "','");
        NodePtr lo = expr(Scope::bound);
        expect(Tok::comma, "','");
        NodePtr hi = expr(Scope::bound);
        n = make(NodeKind::window, t, {lo, hi});
      } else {
        if (peek().kind != Tok::ident) fail("expected a kernel name");
        auto c = std::make_shared<Node>();
        c->kind = NodeKind::conv;
        c->name = take().text;
        c->line = t.line;
        c->column = t.column;
        expect(Tok::comma, "','");
        expect_mu();
        n = c;
      }
      expect(Tok::rparen, "')'");
      return n;
    }

    if (!call) throw UnknownIdentifier("unknown identifier '" + id + "' at " + where(t.line, t.column), t.line, t.column);
    const Token& arg = toks_[pos_ + 1];
    if (arg.kind == Tok::ident && arg.text == "mu") {
      throw UnknownIdentifier("unknown aggregate '" + id + "' at " + where(t.line, t.column), t.line, t.column);
    }
    take();
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::call;
    n->name = id;
    n->line = t.line;
    n->column = t.column;
    n->children.push_back(expr(s));
    expect(Tok::rparen, "')'");
    return n;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// ---- printing -------------------------------------------------------------

int precedence(const Node& n) {
  switch (n.kind) {
    case NodeKind::add:
    case NodeKind::sub: return 1;
    case NodeKind::mul:
    case NodeKind::div: return 2;
    case NodeKind::neg: return 3;
    default: return 4;
  }
}

std::string number_text(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  return v < 0.0 ? "(" + s + ")" : s;
}

void print(const Node& n, std::string& out);

void print_wrapped(const Node& n, bool wrap, std::string& out) {
  if (wrap) out += '(';
  print(n, out);
  if (wrap) out += ')';
}

void print(const Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::number: out += number_text(n.value); return;
    case NodeKind::var_x: out += 'x'; return;
    case NodeKind::var_y: out += 'y'; return;
    case NodeKind::call:
      out += n.name + "(";
      print(*n.children[0], out);
      out += ')';
      return;
    case NodeKind::mass: out += "mass(mu)"; return;
    case NodeKind::moment:
      out += "moment(mu, ";
      print(*n.children[0], out);
      out += ')';
      return;
    case NodeKind::window:
      out += "window(mu, ";
      print(*n.children[0], out);
      out += ", ";
      print(*n.children[1], out);
      out += ')';
      return;
    case NodeKind::conv: out += "conv(" + n.name + ", mu)"; return;
    case NodeKind::neg:
      out += '-';
      print_wrapped(*n.children[0], precedence(*n.children[0]) < 3, out);
      return;
    case NodeKind::add:
    case NodeKind::sub:
    case NodeKind::mul:
    case NodeKind::div: {
      const int p = precedence(n);
      const char* op = n.kind == NodeKind::add   ? " + "
                       : n.kind == NodeKind::sub ? " - "
                       : n.kind == NodeKind::mul ? "*"
                                                 : "/";
      print_wrapped(*n.children[0], precedence(*n.children[0]) < p, out);
      out += op;
      print_wrapped(*n.children[1], precedence(*n.children[1]) <= p, out);
      return;
    }
  }
}

// ---- evaluation -----------------------------------------------------------

// A value is either one scalar (size 1, broadcast) or one entry per point.
using Values = std::vector<double>;

struct EvalContext {
  const GridMeasure& mu;
  const Environment& env;
  const std::vector<double>& points;
  std::size_t n;
};

double at(const Values& v, std::size_t i) { return v.size() == 1 ? v[0] : v[i]; }

template <class F>
Values zip(const Values& a, const Values& b, std::size_t n, F f) {
  if (a.size() == 1 && b.size() == 1) return {f(a[0], b[0])};
  Values out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(at(a, i), at(b, i));
  return out;
}

template <class F>
Values map(const Values& a, F f) {
  Values out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

std::function<double(double)> lookup_function(const Node& n, const Environment& env) {
  if (n.name == "sqrt") return [](double v) { return std::sqrt(v); };
  if (n.name == "exp") return [](double v) { return std::exp(v); };
  if (n.name == "abs") return [](double v) { return std::abs(v); };
  const auto it = env.functions.find(n.name);
  if (it == env.functions.end()) {
    throw UnknownFunction("unknown function '" + n.name + "' at " + where(n.line, n.column), n.line, n.column);
  }
  return it->second.fn;
}

const Kernel& lookup_kernel(const Node& n, const Environment& env) {
  const auto it = env.kernels.find(n.name);
  if (it == env.kernels.end()) {
    throw UnknownFunction("unknown kernel '" + n.name + "' at " + where(n.line, n.column), n.line, n.column);
  }
  return it->second;
}

FunctionSamples to_samples(const Values& v, const GridMeasure& mu) {
  const std::size_t nc = mu.grid().n_cells;
  const std::size_t na = mu.atoms().size();
  std::vector<double> cells(nc), atoms(na);
  for (std::size_t i = 0; i < nc; ++i) cells[i] = at(v, i);
  for (std::size_t k = 0; k < na; ++k) atoms[k] = at(v, nc + k);
  return FunctionSamples(mu.grid(), std::move(cells), mu.atom_locations(), std::move(atoms));
}

Values eval(const Node& n, const EvalContext& c) {
  switch (n.kind) {
    case NodeKind::number: return {n.value};
    case NodeKind::var_x:
    case NodeKind::var_y: return c.points;
    case NodeKind::call: return map(eval(*n.children[0], c), lookup_function(n, c.env));
    case NodeKind::mass: return {total_mass(c.mu)};
    case NodeKind::moment: {
      const Values g = eval(*n.children[0], c);
      return {pair(c.mu, to_samples(g, c.mu))};
    }
    case NodeKind::window: {
      const Values lo = eval(*n.children[0], c);
      const Values hi = eval(*n.children[1], c);
      const MassProfile prof(c.mu);
      Values out(c.n);
      for (std::size_t i = 0; i < c.n; ++i) {
        out[i] = prof.window(at(lo, i), at(hi, i), WindowEnd::closed_left, c.env.window_rule);
      }
      return out;
    }
    case NodeKind::conv: {
      const FunctionSamples s = convolve(c.mu, lookup_kernel(n, c.env));
      Values out(c.n);
      for (std::size_t i = 0; i < c.n; ++i) out[i] = s.at(i);
      return out;
    }
    case NodeKind::neg: return map(eval(*n.children[0], c), [](double v) { return -v; });
    case NodeKind::add:
      return zip(eval(*n.children[0], c), eval(*n.children[1], c), c.n, [](double a, double b) { return a + b; });
    case NodeKind::sub:
      return zip(eval(*n.children[0], c), eval(*n.children[1], c), c.n, [](double a, double b) { return a - b; });
    case NodeKind::mul:
      return zip(eval(*n.children[0], c), eval(*n.children[1], c), c.n, [](double a, double b) { return a * b; });
    case NodeKind::div: {
      const Values num = eval(*n.children[0], c);
      const Values den = eval(*n.children[1], c);
      for (double d : den) {
        if (d == 0.0) throw DivisionByZero("division by zero at " + where(n.line, n.column), n.line, n.column);
      }
      return zip(num, den, c.n, [](double a, double b) { return a / b; });
    }
  }
  return {};
}

// ---- metadata inference ---------------------------------------------------

struct Bound {
  double lo, hi;  // range over x in X and masses <= rho
  double L;       // Lipschitz constant in mu (TV), masses <= rho
};

double mul0(double a, double b) { return a == 0.0 || b == 0.0 ? 0.0 : a * b; }

double sup_abs(const Bound& b) { return std::max(std::abs(b.lo), std::abs(b.hi)); }

Bound sanitize(Bound b) {
  if (std::isnan(b.lo)) b.lo = -inf;
  if (std::isnan(b.hi)) b.hi = inf;
  if (std::isnan(b.L)) b.L = inf;
  return b;
}

Bound sampled_range(const std::function<double(double)>& f, double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) return {-inf, inf, 0.0};
  constexpr int samples = 4096;
  double lo = inf, hi = -inf;
  for (int i = 0; i <= samples; ++i) {
    const double x = a + (b - a) * (static_cast<double>(i) / samples);
    const double v = f(x);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi, 0.0};
}

struct Analyzer {
  const Environment& env;
  double x_lo, x_hi;

  Bound run(const Node& n, double rho) const {
    switch (n.kind) {
      case NodeKind::number: return {n.value, n.value, 0.0};
      case NodeKind::var_x:
      case NodeKind::var_y: return {x_lo, x_hi, 0.0};
      case NodeKind::mass: return {0.0, rho, 1.0};
      case NodeKind::window: return {0.0, rho, 1.0};
      case NodeKind::moment: {
        const Bound g = run(*n.children[0], rho);
        return sanitize({std::min(0.0, mul0(g.lo, rho)), std::max(0.0, mul0(g.hi, rho)), sup_abs(g)});
      }
      case NodeKind::conv: {
        const auto it = env.kernels.find(n.name);
        if (it == env.kernels.end()) return {-inf, inf, inf};
        const double s = it->second.sup_abs;
        const double top = mul0(s, rho);
        return {it->second.nonnegative ? 0.0 : -top, top, s};
      }
      case NodeKind::call: return sanitize(call(n, run(*n.children[0], rho)));
      case NodeKind::neg: {
        const Bound a = run(*n.children[0], rho);
        return {-a.hi, -a.lo, a.L};
      }
      case NodeKind::add: {
        const Bound a = run(*n.children[0], rho), b = run(*n.children[1], rho);
        return sanitize({a.lo + b.lo, a.hi + b.hi, a.L + b.L});
      }
      case NodeKind::sub: {
        const Bound a = run(*n.children[0], rho), b = run(*n.children[1], rho);
        return sanitize({a.lo - b.hi, a.hi - b.lo, a.L + b.L});
      }
      case NodeKind::mul: {
        const Bound a = run(*n.children[0], rho), b = run(*n.children[1], rho);
        const double p[4] = {mul0(a.lo, b.lo), mul0(a.lo, b.hi), mul0(a.hi, b.lo), mul0(a.hi, b.hi)};
        return sanitize({*std::min_element(p, p + 4), *std::max_element(p, p + 4),
                         mul0(sup_abs(a), b.L) + mul0(sup_abs(b), a.L)});
      }
      case NodeKind::div: {
        const Bound a = run(*n.children[0], rho), b = run(*n.children[1], rho);
        if (b.lo <= 0.0 && b.hi >= 0.0) {
          return {-inf, inf, a.L == 0.0 && b.L == 0.0 ? 0.0 : inf};
        }
        const double p[4] = {a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi};
        const double m = std::min(std::abs(b.lo), std::abs(b.hi));
        return sanitize({*std::min_element(p, p + 4), *std::max_element(p, p + 4),
                         a.L / m + mul0(sup_abs(a), b.L) / (m * m)});
      }
    }
    return {-inf, inf, inf};
  }

  Bound call(const Node& n, const Bound& a) const {
    if (n.name == "sqrt") {
      const double L = a.L == 0.0 ? 0.0 : (a.lo > 0.0 ? a.L / (2.0 * std::sqrt(a.lo)) : inf);
      return {std::sqrt(std::max(0.0, a.lo)), std::sqrt(std::max(0.0, a.hi)), L};
    }
    if (n.name == "exp") return {std::exp(a.lo), std::exp(a.hi), mul0(std::exp(a.hi), a.L)};
    if (n.name == "abs") {
      if (a.lo >= 0.0) return {a.lo, a.hi, a.L};
      if (a.hi <= 0.0) return {-a.hi, -a.lo, a.L};
      return {0.0, std::max(-a.lo, a.hi), a.L};
    }
    const auto it = env.functions.find(n.name);
    if (it == env.functions.end()) return {-inf, inf, a.L == 0.0 ? 0.0 : inf};
    Bound r = sampled_range(it->second.fn, a.lo, a.hi);
    r.L = mul0(it->second.lipschitz, a.L);
    return r;
  }
};

void flatten(const NodePtr& n, bool positive, std::vector<std::pair<NodePtr, bool>>& terms) {
  if (n->kind == NodeKind::add || n->kind == NodeKind::sub) {
    flatten(n->children[0], positive, terms);
    flatten(n->children[1], n->kind == NodeKind::add ? positive : !positive, terms);
  } else if (n->kind == NodeKind::neg) {
    flatten(n->children[0], !positive, terms);
  } else {
    terms.emplace_back(n, positive);
  }
}

// Product of positive constants, exactly one x and exactly one mass(mu).
bool scaled_x_mass(const Node& n, double& alpha, int& xs, int& masses) {
  switch (n.kind) {
    case NodeKind::mul:
      return scaled_x_mass(*n.children[0], alpha, xs, masses) && scaled_x_mass(*n.children[1], alpha, xs, masses);
    case NodeKind::number:
      if (!(n.value >= 0.0)) return false;
      alpha *= n.value;
      return true;
    case NodeKind::var_x: ++xs; return true;
    case NodeKind::mass: ++masses; return true;
    default: return false;
  }
}

bool is_cannibal_gain(const Node& n) {
  double alpha = 1.0;
  int xs = 0, masses = 0;
  return scaled_x_mass(n, alpha, xs, masses) && xs == 1 && masses == 1 && alpha <= 1.0;
}

bool is_first_moment(const Node& n) {
  return n.kind == NodeKind::moment && n.children[0]->kind == NodeKind::var_y;
}

std::optional<double> infer_fitness(const NodePtr& e, const Analyzer& an) {
  std::vector<std::pair<NodePtr, bool>> terms;
  flatten(e, true, terms);
  std::vector<bool> used(terms.size(), false);
  if (an.x_lo >= 0.0) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (used[i] || !terms[i].second || !is_cannibal_gain(*terms[i].first)) continue;
      for (std::size_t j = 0; j < terms.size(); ++j) {
        if (!used[j] && j != i && !terms[j].second && is_first_moment(*terms[j].first)) {
          used[i] = used[j] = true;
          break;
        }
      }
    }
  }
  double F = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (used[i]) continue;
    const Bound b = an.run(*terms[i].first, inf);
    const double top = terms[i].second ? b.hi : -b.lo;
    if (!std::isfinite(top)) return std::nullopt;
    F += top;
  }
  return F;
}

}  // namespace

DslError::DslError(const std::string& what, int line, int column)
    : std::runtime_error(what), line_(line), column_(column) {}

bool equal(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.children.size() != b.children.size()) return false;
  if (a.kind == NodeKind::number && !(a.value == b.value)) return false;
  if ((a.kind == NodeKind::call || a.kind == NodeKind::conv) && a.name != b.name) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!equal(*a.children[i], *b.children[i])) return false;
  }
  return true;
}

NodePtr parse(std::string_view text) { return Parser(tokenize(text)).parse_all(); }

std::string to_string(const Node& e) {
  std::string out;
  print(e, out);
  return out;
}

void Environment::add_function(std::string name, std::function<double(double)> fn, double lipschitz) {
  functions[std::move(name)] = Function{std::move(fn), lipschitz};
}

void Environment::add_kernel(Kernel k) {
  std::string name = k.name;
  kernels[std::move(name)] = std::move(k);
}

Environment standard_environment(double h) {
  Environment env;
  env.add_kernel(exponential_kernel());
  if (h > 0.0) env.add_kernel(truncated_exponential_kernel(h));
  return env;
}

FunctionSamples evaluate(const Node& e, const GridMeasure& mu, const Environment& env) {
  const std::vector<double> points = evaluation_points(mu);
  const EvalContext ctx{mu, env, points, points.size()};
  return to_samples(eval(e, ctx), mu);
}

OperatorMeta infer_meta(const NodePtr& e, double lo, double hi, const Environment& env) {
  const Analyzer an{env, lo, hi};
  OperatorMeta m;
  m.k = [e, an_env = env, lo, hi](double r) {
    const Analyzer a{an_env, lo, hi};
    return a.run(*e, r).L;
  };
  m.fitness_F = infer_fitness(e, an);
  const Bound top = an.run(*e, inf);
  if (std::isfinite(top.hi)) m.sup_bound_n = top.hi;
  std::ostringstream os;
  os.precision(6);
  os << "inferred, k(1) = " << an.run(*e, 1.0).L;
  m.k_text = os.str();
  return m;
}

DslOperator::DslOperator(NodePtr expr, Environment env, double lo, double hi)
    : SelectionOperator(infer_meta(expr, lo, hi, env)), expr_(std::move(expr)), env_(std::move(env)) {}

FunctionSamples DslOperator::values(const GridMeasure& mu) const { return dsl::evaluate(*expr_, mu, env_); }

OperatorPtr make_dsl_operator(std::string_view text, Environment env, double lo, double hi) {
  return std::make_shared<DslOperator>(parse(text), std::move(env), lo, hi);
}

}  // namespace selection::dsl
