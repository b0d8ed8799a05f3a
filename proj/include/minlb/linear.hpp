#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "minlb/expr.hpp"
#include "minlb/interval.hpp"

namespace minlb {

enum class Rel { Le, Ge, Eq };

inline const char* rel_name(Rel r) {
  switch (r) {
    case Rel::Le: return "<=";
    case Rel::Ge: return ">=";
    case Rel::Eq: return "=";
  }
  return "?";
}

/// Sparse linear row: sum(coeffs) rel rhs. Coefficients sorted by column.
struct LinearRow {
  std::vector<std::pair<int, double>> coeffs;
  Rel rel = Rel::Le;
  double rhs = 0.0;

  double activity(std::span<const double> x) const {
    double a = 0.0;
    for (auto [j, c] : coeffs) a += c * x[j];
    return a;
  }

  /// Signed violation: positive means the row is violated by that amount.
  double violation(std::span<const double> x) const {
    const double a = activity(x);
    switch (rel) {
      case Rel::Le: return a - rhs;
      case Rel::Ge: return rhs - a;
      case Rel::Eq: return std::abs(a - rhs);
    }
    return 0.0;
  }
};

/// Sparse affine form sum_j coeffs[j] * x_j + constant, with deterministic
/// (column-ordered) iteration. The working currency of factorable
/// decomposition.
struct LinExpr {
  std::map<int, double> coeffs;
  double constant = 0.0;

  static LinExpr of_constant(double c) {
    LinExpr e;
    e.constant = c;
    return e;
  }
  static LinExpr of_column(int j, double coeff = 1.0) {
    LinExpr e;
    e.coeffs[j] = coeff;
    return e;
  }

  bool is_constant() const { return coeffs.empty(); }

  /// True when this is exactly one column with coefficient 1 and no constant.
  bool is_bare_column() const {
    return constant == 0.0 && coeffs.size() == 1 && coeffs.begin()->second == 1.0;
  }
  int bare_column() const { return coeffs.begin()->first; }

  LinExpr& operator+=(const LinExpr& o) {
    for (auto [j, c] : o.coeffs) add_term(j, c);
    constant += o.constant;
    return *this;
  }
  LinExpr& operator-=(const LinExpr& o) {
    for (auto [j, c] : o.coeffs) add_term(j, -c);
    constant -= o.constant;
    return *this;
  }
  LinExpr& operator*=(double s) {
    if (s == 0.0) {
      coeffs.clear();
      constant = 0.0;
      return *this;
    }
    for (auto& [j, c] : coeffs) c *= s;
    constant *= s;
    return *this;
  }
  void add_term(int j, double c) {
    auto [it, inserted] = coeffs.try_emplace(j, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) coeffs.erase(it);
    } else if (c == 0.0) {
      coeffs.erase(it);
    }
  }

  double value(std::span<const double> x) const {
    double v = constant;
    for (auto [j, c] : coeffs) v += c * x[j];
    return v;
  }

  Interval range(std::span<const Interval> box) const {
    Interval r = Interval::point(constant);
    for (auto [j, c] : coeffs) r = r + scale(box[j], c);
    return r;
  }

  std::vector<std::pair<int, double>> sorted_terms() const {
    return {coeffs.begin(), coeffs.end()};
  }

  /// Row "this rel rhs" with the constant folded into the right-hand side.
  LinearRow as_row(Rel rel, double rhs) const {
    return LinearRow{sorted_terms(), rel, rhs - constant};
  }
};

/// Rebuilds the affine form of an expression tree when one exists.
inline bool try_affine(const Expr& e, LinExpr& out) {
  switch (e.kind) {
    case ExprKind::Constant:
      out = LinExpr::of_constant(e.value);
      return true;
    case ExprKind::Variable:
      out = LinExpr::of_column(e.var);
      return true;
    case ExprKind::Sum: {
      LinExpr acc, term;
      for (const Expr& c : e.children) {
        if (!try_affine(c, term)) return false;
        acc += term;
      }
      out = std::move(acc);
      return true;
    }
    case ExprKind::Difference: {
      LinExpr a, b;
      if (!try_affine(e.children[0], a) || !try_affine(e.children[1], b)) return false;
      a -= b;
      out = std::move(a);
      return true;
    }
    case ExprKind::Product: {
      LinExpr term, affine_part = LinExpr::of_constant(1.0);
      bool seen_nonconst = false;
      double scale = 1.0;
      for (const Expr& c : e.children) {
        if (!try_affine(c, term)) return false;
        if (term.is_constant()) {
          scale *= term.constant;
        } else {
          if (seen_nonconst) return false;
          seen_nonconst = true;
          affine_part = std::move(term);
        }
      }
      affine_part *= scale;
      out = std::move(affine_part);
      return true;
    }
    case ExprKind::Quotient: {
      LinExpr num, den;
      if (!try_affine(e.children[1], den) || !den.is_constant() || den.constant == 0.0)
        return false;
      if (!try_affine(e.children[0], num)) return false;
      num *= 1.0 / den.constant;
      out = std::move(num);
      return true;
    }
    case ExprKind::Power: {
      if (e.exponent == 0) {
        out = LinExpr::of_constant(1.0);
        return true;
      }
      LinExpr base;
      if (!try_affine(e.children[0], base)) return false;
      if (e.exponent == 1) {
        out = std::move(base);
        return true;
      }
      if (!base.is_constant()) return false;
      out = LinExpr::of_constant(ipow(base.constant, e.exponent));
      return std::isfinite(out.constant);
    }
    case ExprKind::Exp:
    case ExprKind::Log:
    case ExprKind::Sqrt: {
      LinExpr arg;
      if (!try_affine(e.children[0], arg) || !arg.is_constant()) return false;
      double v = arg.constant;
      if (e.kind == ExprKind::Exp) v = std::exp(v);
      else if (e.kind == ExprKind::Log) {
        if (arg.constant <= 0.0) return false;
        v = std::log(v);
      } else {
        if (arg.constant < 0.0) return false;
        v = std::sqrt(v);
      }
      out = LinExpr::of_constant(v);
      return true;
    }
  }
  return false;
}

/// Converts a linear row over problem variables back into an Expr in
/// "g(x) <= 0" form (Ge rows are sign-flipped; Eq not supported here).
inline Expr row_to_leq_expr(const LinearRow& row) {
  std::vector<Expr> terms;
  const double sign = row.rel == Rel::Ge ? -1.0 : 1.0;
  for (auto [j, c] : row.coeffs)
    terms.push_back(Expr::product({Expr::constant(sign * c), Expr::variable(j)}));
  terms.push_back(Expr::constant(-sign * row.rhs));
  if (terms.size() == 1) return std::move(terms[0]);
  return Expr::sum(std::move(terms));
}

}  // namespace minlb
