#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "minlb/interval.hpp"

namespace minlb {

enum class ExprKind {
  Constant,
  Variable,
  Sum,         // n-ary
  Product,     // n-ary
  Difference,  // binary
  Quotient,    // binary
  Power,       // integer exponent
  Exp,
  Log,
  Sqrt,
};

/// Immutable arithmetic expression tree over variables x0, x1, ...
/// Safe for concurrent reads; evaluation keeps its scratch state outside.
struct Expr {
  ExprKind kind = ExprKind::Constant;
  double value = 0.0;       // Constant payload
  int var = -1;             // Variable payload
  long long exponent = 0;   // Power payload
  std::vector<Expr> children;

  static Expr constant(double v) {
    Expr e;
    e.kind = ExprKind::Constant;
    e.value = v;
    return e;
  }
  static Expr variable(int index) {
    if (index < 0) throw std::invalid_argument("variable index must be >= 0");
    Expr e;
    e.kind = ExprKind::Variable;
    e.var = index;
    return e;
  }
  static Expr sum(std::vector<Expr> terms) {
    if (terms.size() < 2) throw std::invalid_argument("sum needs >= 2 terms");
    Expr e;
    e.kind = ExprKind::Sum;
    e.children = std::move(terms);
    return e;
  }
  static Expr product(std::vector<Expr> factors) {
    if (factors.size() < 2) throw std::invalid_argument("product needs >= 2 factors");
    Expr e;
    e.kind = ExprKind::Product;
    e.children = std::move(factors);
    return e;
  }
  static Expr difference(Expr a, Expr b) {
    Expr e;
    e.kind = ExprKind::Difference;
    e.children.push_back(std::move(a));
    e.children.push_back(std::move(b));
    return e;
  }
  static Expr quotient(Expr num, Expr den) {
    Expr e;
    e.kind = ExprKind::Quotient;
    e.children.push_back(std::move(num));
    e.children.push_back(std::move(den));
    return e;
  }
  static Expr power(Expr base, long long k) {
    Expr e;
    e.kind = ExprKind::Power;
    e.exponent = k;
    e.children.push_back(std::move(base));
    return e;
  }
  static Expr exp(Expr a) {
    Expr e;
    e.kind = ExprKind::Exp;
    e.children.push_back(std::move(a));
    return e;
  }
  static Expr log(Expr a) {
    Expr e;
    e.kind = ExprKind::Log;
    e.children.push_back(std::move(a));
    return e;
  }
  static Expr sqrt(Expr a) {
    Expr e;
    e.kind = ExprKind::Sqrt;
    e.children.push_back(std::move(a));
    return e;
  }

  bool operator==(const Expr& o) const {
    if (kind != o.kind || children.size() != o.children.size()) return false;
    switch (kind) {
      case ExprKind::Constant:
        if (value != o.value) return false;
        break;
      case ExprKind::Variable:
        if (var != o.var) return false;
        break;
      case ExprKind::Power:
        if (exponent != o.exponent) return false;
        break;
      default:
        break;
    }
    for (size_t i = 0; i < children.size(); ++i)
      if (!(children[i] == o.children[i])) return false;
    return true;
  }
};

/// Largest variable index occurring in e, or -1 if none.
inline int max_var_index(const Expr& e) {
  int m = e.kind == ExprKind::Variable ? e.var : -1;
  for (const Expr& c : e.children) m = std::max(m, max_var_index(c));
  return m;
}

inline void collect_vars(const Expr& e, std::set<int>& out) {
  if (e.kind == ExprKind::Variable) out.insert(e.var);
  for (const Expr& c : e.children) collect_vars(c, out);
}

inline bool has_vars(const Expr& e) {
  if (e.kind == ExprKind::Variable) return true;
  for (const Expr& c : e.children)
    if (has_vars(c)) return true;
  return false;
}

/// True if e is an affine function of the variables (constants may be
/// arbitrary variable-free subtrees).
inline bool is_affine(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Constant:
    case ExprKind::Variable:
      return true;
    case ExprKind::Sum:
    case ExprKind::Difference:
      for (const Expr& c : e.children)
        if (!is_affine(c)) return false;
      return true;
    case ExprKind::Product: {
      int with_vars = 0;
      const Expr* nonconst = nullptr;
      for (const Expr& c : e.children)
        if (has_vars(c)) {
          ++with_vars;
          nonconst = &c;
        }
      return with_vars == 0 || (with_vars == 1 && is_affine(*nonconst));
    }
    case ExprKind::Quotient:
      return !has_vars(e.children[1]) && is_affine(e.children[0]);
    case ExprKind::Power:
      if (e.exponent == 0) return true;
      if (e.exponent == 1) return is_affine(e.children[0]);
      return !has_vars(e.children[0]);
    case ExprKind::Exp:
    case ExprKind::Log:
    case ExprKind::Sqrt:
      return !has_vars(e.children[0]);
  }
  return false;
}

/// Variables that occur nonlinearly in e, i.e. that feed a nonlinear term
/// during factorable decomposition and therefore need finite bounds.
inline void collect_nonlinear_vars(const Expr& e, std::set<int>& out) {
  if (is_affine(e)) return;
  switch (e.kind) {
    case ExprKind::Sum:
    case ExprKind::Difference:
      for (const Expr& c : e.children) collect_nonlinear_vars(c, out);
      return;
    case ExprKind::Product: {
      std::vector<const Expr*> with_vars;
      for (const Expr& c : e.children)
        if (has_vars(c)) with_vars.push_back(&c);
      if (with_vars.size() == 1) {
        collect_nonlinear_vars(*with_vars[0], out);
      } else {
        for (const Expr* c : with_vars) collect_vars(*c, out);
      }
      return;
    }
    case ExprKind::Quotient:
      if (!has_vars(e.children[1])) {
        collect_nonlinear_vars(e.children[0], out);
      } else {
        collect_vars(e.children[0], out);
        collect_vars(e.children[1], out);
      }
      return;
    case ExprKind::Power:
      if (e.exponent == 1) collect_nonlinear_vars(e.children[0], out);
      else if (e.exponent != 0) collect_vars(e.children[0], out);
      return;
    case ExprKind::Exp:
    case ExprKind::Log:
    case ExprKind::Sqrt:
      collect_vars(e.children[0], out);
      return;
    default:
      return;
  }
}

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline void format_double(std::string& out, double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace detail

inline void print_expr(const Expr& e, std::string& out) {
  switch (e.kind) {
    case ExprKind::Constant:
      detail::format_double(out, e.value);
      return;
    case ExprKind::Variable:
      out += 'x';
      out += std::to_string(e.var);
      return;
    default:
      break;
  }
  static const char* names[] = {"", "", "+", "*", "-", "/", "^", "exp", "log", "sqrt"};
  out += '(';
  out += names[static_cast<int>(e.kind)];
  for (const Expr& c : e.children) {
    out += ' ';
    print_expr(c, out);
  }
  if (e.kind == ExprKind::Power) {
    out += ' ';
    out += std::to_string(e.exponent);
  }
  out += ')';
}

inline std::string to_string(const Expr& e) {
  std::string s;
  print_expr(e, s);
  return s;
}

// ---------------------------------------------------------------------------
// Parsing

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, size_t pos)
      : std::runtime_error(msg + " (at offset " + std::to_string(pos) + ")"),
        position(pos) {}
  size_t position;
};

namespace detail {

struct Parser {
  std::string_view text;
  size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos); }

  std::string_view next_atom() {
    size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')')
      ++pos;
    if (pos == start) fail("expected atom");
    return text.substr(start, pos - start);
  }

  Expr parse_expr() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    if (text[pos] == '(') return parse_list();
    if (text[pos] == ')') fail("unexpected ')'");
    return parse_atom();
  }

  Expr parse_atom() {
    size_t start = pos;
    std::string_view tok = next_atom();
    if (tok[0] == 'x') {
      for (size_t i = 1; i < tok.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(tok[i]))) {
          pos = start;
          fail("malformed variable token '" + std::string(tok) + "'");
        }
      if (tok.size() == 1) {
        pos = start;
        fail("malformed variable token 'x'");
      }
      int idx = 0;
      std::from_chars(tok.data() + 1, tok.data() + tok.size(), idx);
      return Expr::variable(idx);
    }
    std::string buf(tok);
    char* end = nullptr;
    double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size()) {
      pos = start;
      fail("expected number or variable, got '" + buf + "'");
    }
    return Expr::constant(v);
  }

  long long parse_int_literal() {
    skip_ws();
    size_t start = pos;
    std::string_view tok = next_atom();
    long long k = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), k);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      pos = start;
      fail("power exponent must be an integer literal, got '" + std::string(tok) + "'");
    }
    return k;
  }

  Expr parse_list() {
    size_t open = pos;
    ++pos;  // consume '('
    skip_ws();
    if (pos >= text.size()) fail("unterminated list");
    std::string_view op = next_atom();

    std::vector<Expr> args;
    auto parse_args_until_close = [&] {
      for (;;) {
        skip_ws();
        if (pos >= text.size()) {
          pos = open;
          fail("unterminated list");
        }
        if (text[pos] == ')') {
          ++pos;
          return;
        }
        args.push_back(parse_expr());
      }
    };

    if (op == "^") {
      Expr base = parse_expr();
      long long k = parse_int_literal();
      skip_ws();
      if (pos >= text.size() || text[pos] != ')') fail("expected ')' after exponent");
      ++pos;
      return Expr::power(std::move(base), k);
    }

    parse_args_until_close();
    auto arity = [&](size_t lo, size_t hi) {
      if (args.size() < lo || args.size() > hi) {
        pos = open;
        fail("operator '" + std::string(op) + "' got " + std::to_string(args.size()) +
             " argument(s)");
      }
    };
    if (op == "+") {
      arity(2, SIZE_MAX);
      return Expr::sum(std::move(args));
    }
    if (op == "*") {
      arity(2, SIZE_MAX);
      return Expr::product(std::move(args));
    }
    if (op == "-") {
      arity(2, 2);
      return Expr::difference(std::move(args[0]), std::move(args[1]));
    }
    if (op == "/") {
      arity(2, 2);
      return Expr::quotient(std::move(args[0]), std::move(args[1]));
    }
    if (op == "exp") {
      arity(1, 1);
      return Expr::exp(std::move(args[0]));
    }
    if (op == "log") {
      arity(1, 1);
      return Expr::log(std::move(args[0]));
    }
    if (op == "sqrt") {
      arity(1, 1);
      return Expr::sqrt(std::move(args[0]));
    }
    pos = open + 1;
    fail("unknown operator '" + std::string(op) + "'");
  }
};

}  // namespace detail

inline Expr parse_expr(std::string_view text) {
  detail::Parser p{text};
  Expr e = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input after expression");
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation

/// Exact integer power by repeated squaring; 0^-k signals failure via NaN.
inline double ipow(double base, long long k) {
  if (k < 0) {
    if (base == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 / ipow(base, -k);
  }
  double r = 1.0, b = base;
  for (long long n = k; n > 0; n >>= 1) {
    if (n & 1) r *= b;
    b *= b;
  }
  return r;
}

/// Flattened postorder view of an expression, reusable across evaluations.
/// Domain failures (log/sqrt outside domain, division by zero, NaN) are
/// reported by returning nullopt / false, never by throwing mid-iteration.
class Tape {
 public:
  explicit Tape(const Expr& e) { flatten(e); }

  int root() const { return static_cast<int>(nodes_.size()) - 1; }
  size_t size() const { return nodes_.size(); }

  std::optional<double> value(std::span<const double> x,
                              std::vector<double>& vals) const {
    if (!forward(x, vals)) return std::nullopt;
    double v = vals[root()];
    if (std::isnan(v)) return std::nullopt;
    return v;
  }

  /// Computes the value and accumulates weight * de/dx into grad.
  /// Returns false on domain failure or a non-finite value/derivative.
  bool value_and_gradient(std::span<const double> x, double& out,
                          std::span<double> grad, double weight,
                          std::vector<double>& vals,
                          std::vector<double>& adj) const {
    if (!forward(x, vals)) return false;
    out = vals[root()];
    if (!std::isfinite(out)) return false;
    adj.assign(nodes_.size(), 0.0);
    adj[root()] = weight;
    std::vector<double> scratch;
    bool ok = true;
    for (int i = root(); i >= 0; --i) {
      const Node& n = nodes_[i];
      const double a = adj[i];
      if (!std::isfinite(a)) {
        ok = false;
        break;
      }
      switch (n.kind) {
        case ExprKind::Constant:
          break;
        case ExprKind::Variable:
          grad[n.var] += a;
          break;
        case ExprKind::Sum:
          for (int c = n.child_begin; c < n.child_end; ++c) adj[child_[c]] += a;
          break;
        case ExprKind::Difference:
          adj[child_[n.child_begin]] += a;
          adj[child_[n.child_begin + 1]] -= a;
          break;
        case ExprKind::Product: {
          const int nc = n.child_end - n.child_begin;
          scratch.assign(2 * (nc + 1), 1.0);  // prefix | suffix products
          double* pref = scratch.data();
          double* suf = scratch.data() + nc + 1;
          for (int j = 0; j < nc; ++j)
            pref[j + 1] = pref[j] * vals[child_[n.child_begin + j]];
          for (int j = nc - 1; j >= 0; --j)
            suf[j] = suf[j + 1] * vals[child_[n.child_begin + j]];
          for (int j = 0; j < nc; ++j)
            adj[child_[n.child_begin + j]] += a * pref[j] * suf[j + 1];
          break;
        }
        case ExprKind::Quotient: {
          const double num = vals[child_[n.child_begin]];
          const double den = vals[child_[n.child_begin + 1]];
          adj[child_[n.child_begin]] += a / den;
          adj[child_[n.child_begin + 1]] -= a * num / (den * den);
          break;
        }
        case ExprKind::Power: {
          const double b = vals[child_[n.child_begin]];
          const double d = static_cast<double>(n.exponent) * ipow(b, n.exponent - 1);
          adj[child_[n.child_begin]] += a * d;
          break;
        }
        case ExprKind::Exp:
          adj[child_[n.child_begin]] += a * vals[i];
          break;
        case ExprKind::Log:
          adj[child_[n.child_begin]] += a / vals[child_[n.child_begin]];
          break;
        case ExprKind::Sqrt:
          adj[child_[n.child_begin]] += a * 0.5 / vals[i];
          break;
      }
    }
    if (!ok) return false;
    for (int i = 0; i < root(); ++i) {
      const Node& n = nodes_[i];
      if (n.kind == ExprKind::Variable && !std::isfinite(grad[n.var])) return false;
    }
    return true;
  }

 private:
  struct Node {
    ExprKind kind;
    double value;
    int var;
    long long exponent;
    int child_begin, child_end;  // range into child_
  };

  int flatten(const Expr& e) {
    std::vector<int> kids;
    kids.reserve(e.children.size());
    for (const Expr& c : e.children) kids.push_back(flatten(c));
    Node n{e.kind, e.value, e.var, e.exponent,
           static_cast<int>(child_.size()),
           static_cast<int>(child_.size() + kids.size())};
    child_.insert(child_.end(), kids.begin(), kids.end());
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }

  bool forward(std::span<const double> x, std::vector<double>& vals) const {
    vals.resize(nodes_.size());
    for (size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      double v = 0.0;
      switch (n.kind) {
        case ExprKind::Constant:
          v = n.value;
          break;
        case ExprKind::Variable:
          if (n.var >= static_cast<int>(x.size())) return false;
          v = x[n.var];
          break;
        case ExprKind::Sum:
          for (int c = n.child_begin; c < n.child_end; ++c) v += vals[child_[c]];
          break;
        case ExprKind::Product:
          v = 1.0;
          for (int c = n.child_begin; c < n.child_end; ++c) v *= vals[child_[c]];
          break;
        case ExprKind::Difference:
          v = vals[child_[n.child_begin]] - vals[child_[n.child_begin + 1]];
          break;
        case ExprKind::Quotient: {
          const double den = vals[child_[n.child_begin + 1]];
          if (den == 0.0) return false;
          v = vals[child_[n.child_begin]] / den;
          break;
        }
        case ExprKind::Power:
          v = ipow(vals[child_[n.child_begin]], n.exponent);
          break;
        case ExprKind::Exp:
          v = std::exp(vals[child_[n.child_begin]]);
          break;
        case ExprKind::Log: {
          const double arg = vals[child_[n.child_begin]];
          if (arg <= 0.0) return false;
          v = std::log(arg);
          break;
        }
        case ExprKind::Sqrt: {
          const double arg = vals[child_[n.child_begin]];
          if (arg < 0.0) return false;
          v = std::sqrt(arg);
          break;
        }
      }
      if (std::isnan(v)) return false;
      vals[i] = v;
    }
    return true;
  }

  std::vector<Node> nodes_;
  std::vector<int> child_;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation that reports domain violations as nullopt.
inline std::optional<double> evaluate_opt(const Expr& e, std::span<const double> x) {
  Tape t(e);
  std::vector<double> vals;
  return t.value(x, vals);
}

/// Evaluation that throws EvalError on domain violations.
inline double evaluate(const Expr& e, std::span<const double> x) {
  auto v = evaluate_opt(e, x);
  if (!v) throw EvalError("domain violation evaluating " + to_string(e));
  return *v;
}

/// Exact derivative of e with respect to every variable, or nullopt at a
/// domain violation / non-differentiable point.
inline std::optional<std::vector<double>> gradient_opt(const Expr& e,
                                                       std::span<const double> x) {
  Tape t(e);
  std::vector<double> vals, adj, grad(x.size(), 0.0);
  double out;
  if (!t.value_and_gradient(x, out, grad, 1.0, vals, adj)) return std::nullopt;
  return grad;
}

inline std::vector<double> gradient(const Expr& e, std::span<const double> x) {
  auto g = gradient_opt(e, x);
  if (!g) throw EvalError("gradient undefined for " + to_string(e));
  return *g;
}

/// Sound (possibly conservative) range of e over the box. Box entries for
/// variables entering nonlinear terms must be finite for useful output;
/// infinities propagate conservatively.
inline Interval interval_eval(const Expr& e, std::span<const Interval> box) {
  switch (e.kind) {
    case ExprKind::Constant:
      return Interval::point(e.value);
    case ExprKind::Variable:
      if (e.var >= static_cast<int>(box.size()))
        throw std::invalid_argument("interval_eval: box too small");
      return box[e.var];
    case ExprKind::Sum: {
      Interval r = interval_eval(e.children[0], box);
      for (size_t i = 1; i < e.children.size(); ++i)
        r = r + interval_eval(e.children[i], box);
      return r;
    }
    case ExprKind::Product: {
      Interval r = interval_eval(e.children[0], box);
      for (size_t i = 1; i < e.children.size(); ++i)
        r = r * interval_eval(e.children[i], box);
      return r;
    }
    case ExprKind::Difference:
      return interval_eval(e.children[0], box) - interval_eval(e.children[1], box);
    case ExprKind::Quotient:
      return interval_eval(e.children[0], box) / interval_eval(e.children[1], box);
    case ExprKind::Power:
      return int_pow(interval_eval(e.children[0], box), e.exponent);
    case ExprKind::Exp:
      return minlb::exp(interval_eval(e.children[0], box));
    case ExprKind::Log:
      return minlb::log(interval_eval(e.children[0], box));
    case ExprKind::Sqrt:
      return minlb::sqrt(interval_eval(e.children[0], box));
  }
  throw std::logic_error("unreachable expression kind");
}

}  // namespace minlb
