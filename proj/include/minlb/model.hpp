#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "minlb/expr.hpp"
#include "minlb/interval.hpp"
#include "minlb/linear.hpp"

namespace minlb {

enum class VarKind { Continuous, Integer };

struct Variable {
  std::string name;
  double lb = -kInf;
  double ub = kInf;
  VarKind kind = VarKind::Continuous;

  bool is_binary() const {
    return kind == VarKind::Integer && lb >= 0.0 && ub <= 1.0;
  }
};

/// Full variable assignment, indexed like Problem::variables.
using Point = std::vector<double>;

/// Constraint in normalized form: expr(x) <= 0.
struct Constraint {
  std::string name;
  Expr expr;
};

struct Tolerances {
  double feasibility = 1e-6;
  double integrality = 1e-6;
};

/// MINLP in standard form: minimize objective subject to every constraint
/// expression <= 0, variable bounds, and integrality on Integer variables.
/// Immutable after load; transformations return new values.
struct Problem {
  std::vector<Variable> variables;
  Expr objective = Expr::constant(0.0);
  std::vector<Constraint> constraints;

  int size() const { return static_cast<int>(variables.size()); }

  std::vector<int> integer_indices() const {
    std::vector<int> idx;
    for (int j = 0; j < size(); ++j)
      if (variables[j].kind == VarKind::Integer) idx.push_back(j);
    return idx;
  }

  /// Binary variables are detected, not declared: integer with bounds in [0,1].
  std::vector<int> binary_indices() const {
    std::vector<int> idx;
    for (int j = 0; j < size(); ++j)
      if (variables[j].is_binary()) idx.push_back(j);
    return idx;
  }

  std::vector<Interval> box() const {
    std::vector<Interval> b;
    b.reserve(variables.size());
    for (const Variable& v : variables) b.emplace_back(v.lb, v.ub);
    return b;
  }

  /// Structural validation with named diagnostics. Bounds must be sane,
  /// expressions in range, and every variable entering a nonlinear term
  /// needs finite bounds (convexification validity depends on them).
  void validate() const {
    std::set<std::string> names;
    for (const Variable& v : variables) {
      if (v.name.empty()) throw std::invalid_argument("variable with empty name");
      if (!names.insert(v.name).second)
        throw std::invalid_argument("duplicate variable name '" + v.name + "'");
      if (!(v.lb <= v.ub))
        throw std::invalid_argument("variable '" + v.name + "': lb > ub");
      if (v.kind == VarKind::Integer &&
          (!std::isfinite(v.lb) || !std::isfinite(v.ub)))
        throw std::invalid_argument("integer variable '" + v.name +
                                    "' must have finite bounds");
    }
    auto check_range = [&](const Expr& e, const std::string& where) {
      if (max_var_index(e) >= size())
        throw std::invalid_argument(where + " references variable index " +
                                    std::to_string(max_var_index(e)) +
                                    " but the problem has " +
                                    std::to_string(size()) + " variables");
    };
    check_range(objective, "objective");
    for (const Constraint& c : constraints) check_range(c.expr, "constraint '" + c.name + "'");

    std::set<int> nonlinear;
    collect_nonlinear_vars(objective, nonlinear);
    for (const Constraint& c : constraints) collect_nonlinear_vars(c.expr, nonlinear);
    for (int j : nonlinear) {
      const Variable& v = variables[j];
      if (!std::isfinite(v.lb) || !std::isfinite(v.ub))
        throw std::invalid_argument(
            "variable '" + v.name +
            "' appears nonlinearly and must have finite bounds");
    }
  }
};

struct Solution {
  Point point;
  double objective = 0.0;
  double max_violation = 0.0;
  bool integral = false;
};

struct FeasReport {
  bool feasible = false;
  double max_violation = 0.0;  // largest constraint/bound excess, 0 if none
  bool integral = true;
  bool eval_failure = false;
  std::string worst;  // name of the worst-violated constraint or variable
};

/// Normalizes "expr rel rhs" into one or two "<= 0" expressions.
inline std::vector<Expr> normalize(const Expr& e, Rel rel, double rhs) {
  auto le_form = [&](const Expr& lhs, double r) {
    if (r == 0.0) return lhs;
    return Expr::difference(lhs, Expr::constant(r));
  };
  switch (rel) {
    case Rel::Le:
      return {le_form(e, rhs)};
    case Rel::Ge:
      return {Expr::difference(Expr::constant(rhs), e)};
    case Rel::Eq:
      return {le_form(e, rhs), Expr::difference(Expr::constant(rhs), e)};
  }
  return {};
}

/// Feasibility check against constraints, bounds and integrality.
inline FeasReport is_feasible(const Problem& pr, const Point& p,
                              const Tolerances& tol = {}) {
  if (static_cast<int>(p.size()) != pr.size())
    throw std::invalid_argument("point length does not match problem");
  FeasReport rep;
  rep.feasible = true;
  for (const Constraint& c : pr.constraints) {
    auto v = evaluate_opt(c.expr, p);
    if (!v) {
      rep.feasible = false;
      rep.eval_failure = true;
      rep.max_violation = kInf;
      rep.worst = c.name;
      return rep;
    }
    if (*v > rep.max_violation) {
      rep.max_violation = *v;
      rep.worst = c.name;
    }
  }
  for (int j = 0; j < pr.size(); ++j) {
    const Variable& var = pr.variables[j];
    const double excess = std::max(var.lb - p[j], p[j] - var.ub);
    if (excess > rep.max_violation) {
      rep.max_violation = excess;
      rep.worst = var.name;
    }
    if (var.kind == VarKind::Integer &&
        std::abs(p[j] - std::round(p[j])) > tol.integrality) {
      rep.integral = false;
      if (rep.worst.empty()) rep.worst = var.name;
    }
  }
  rep.max_violation = std::max(rep.max_violation, 0.0);
  rep.feasible = rep.max_violation <= tol.feasibility && rep.integral;
  return rep;
}

inline Solution make_solution(const Problem& pr, Point p, const Tolerances& tol = {}) {
  Solution s;
  FeasReport rep = is_feasible(pr, p, tol);
  s.objective = evaluate(pr.objective, p);
  s.point = std::move(p);
  s.max_violation = rep.max_violation;
  s.integral = rep.integral;
  return s;
}

/// Continuous relaxation: integrality dropped, bounds retained.
inline Problem relax_integrality(const Problem& pr) {
  Problem q = pr;
  for (Variable& v : q.variables) v.kind = VarKind::Continuous;
  return q;
}

/// Fixes every integer variable to the rounded value of p; p must be
/// integral on them within tolerance.
inline Problem fix_integers(const Problem& pr, const Point& p,
                            const Tolerances& tol = {}) {
  Problem q = pr;
  for (int j = 0; j < pr.size(); ++j) {
    if (pr.variables[j].kind != VarKind::Integer) continue;
    const double r = std::round(p[j]);
    if (std::abs(p[j] - r) > tol.integrality)
      throw std::invalid_argument("fix_integers: variable '" +
                                  pr.variables[j].name + "' is at " +
                                  std::to_string(p[j]) + ", not integral");
    q.variables[j].lb = q.variables[j].ub = r;
  }
  return q;
}

}  // namespace minlb
