#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "minlb/linear.hpp"
#include "minlb/lp.hpp"
#include "minlb/model.hpp"

namespace minlb {

enum class AtomKind { Linear, Bilinear, Square, PowerK, Exp, Log, Sqrt, Quotient };

inline const char* atom_kind_name(AtomKind k) {
  switch (k) {
    case AtomKind::Linear: return "linear";
    case AtomKind::Bilinear: return "bilinear";
    case AtomKind::Square: return "square";
    case AtomKind::PowerK: return "power";
    case AtomKind::Exp: return "exp";
    case AtomKind::Log: return "log";
    case AtomKind::Sqrt: return "sqrt";
    case AtomKind::Quotient: return "quotient";
  }
  return "?";
}

/// One lifted nonlinear (or affine) subterm: `out` is the auxiliary column.
/// Inputs always precede the output in column order.
/// Quotient encodes in1 = out * in2 (in1 the numerator, in2 the denominator).
struct Atom {
  AtomKind kind = AtomKind::Linear;
  int out = -1;
  int in1 = -1, in2 = -1;
  long long exponent = 0;  // PowerK
  LinExpr lin;             // Linear

  double value(std::span<const double> cols) const {
    switch (kind) {
      case AtomKind::Linear: return lin.value(cols);
      case AtomKind::Bilinear: return cols[in1] * cols[in2];
      case AtomKind::Square: return cols[in1] * cols[in1];
      case AtomKind::PowerK: return ipow(cols[in1], exponent);
      case AtomKind::Exp: return std::exp(cols[in1]);
      case AtomKind::Log: return std::log(cols[in1]);
      case AtomKind::Sqrt: return std::sqrt(cols[in1]);
      case AtomKind::Quotient: return cols[in1] / cols[in2];
    }
    return 0.0;
  }
};

/// Polyhedral outer approximation of a Problem: original columns first,
/// then one auxiliary per atom, then the objective epigraph column eta.
struct LinearRelaxation {
  int n_original = 0;
  int n_cols = 0;
  int eta_col = -1;
  std::vector<Interval> col_bounds;
  std::vector<LinearRow> rows;
  std::vector<double> objective;  // minimize; unit weight on eta
  std::vector<Atom> atoms;
  std::vector<int> integer_cols;  // original integer columns
};

// ---------------------------------------------------------------------------
// Envelope rows per atom kind.

namespace detail {

inline void emit(std::vector<LinearRow>& rows, std::initializer_list<std::pair<int, double>> terms,
                 Rel rel, double rhs) {
  LinExpr e;
  for (auto [j, c] : terms) e.add_term(j, c);
  rows.push_back(e.as_row(rel, rhs));
}

// Tangent/secant helpers for univariate atoms w = f(x) over [lo, hi].
// "under" rows are w >= line, "over" rows are w <= line.
inline void tangent_row(std::vector<LinearRow>& rows, int w, int x, double slope,
                        double intercept, bool under) {
  emit(rows, {{w, 1.0}, {x, -slope}}, under ? Rel::Ge : Rel::Le, intercept);
}

struct Univariate {
  double (*f)(double);
  double (*df)(double);
};

inline void secant_row(std::vector<LinearRow>& rows, int w, int x, const Univariate& fn,
                       double lo, double hi, bool under) {
  double slope;
  if (hi - lo <= 1e-12) slope = fn.df(0.5 * (lo + hi));
  else slope = (fn.f(hi) - fn.f(lo)) / (hi - lo);
  tangent_row(rows, w, x, slope, fn.f(lo) - slope * lo, under);
}

inline void tangents_at(std::vector<LinearRow>& rows, int w, int x, const Univariate& fn,
                        std::initializer_list<double> points, bool under) {
  double last = kInf;
  for (double t : points) {
    if (t == last) continue;  // collapsed sample points on tiny boxes
    last = t;
    const double s = fn.df(t);
    if (!std::isfinite(s)) continue;  // skip e.g. sqrt tangent at 0
    tangent_row(rows, w, x, s, fn.f(t) - s * t, under);
  }
}

// Tangency parameter for odd powers over a sign-straddling box: the tangent
// line from (L, L^k), L < 0, touches x^k at t* = -L * u, where u in (0,1)
// solves k u^(k-1) + (k-1) u^k = 1 (monotone increasing, so bisection).
inline double odd_power_tangency(long long k, double endpoint) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double u = 0.5 * (lo + hi);
    const double g = static_cast<double>(k) * ipow(u, k - 1) +
                     static_cast<double>(k - 1) * ipow(u, k) - 1.0;
    (g < 0.0 ? lo : hi) = u;
  }
  return -endpoint * 0.5 * (lo + hi);
}

inline void mccormick(std::vector<LinearRow>& rows, int p, int x, int y,
                      const Interval& X, const Interval& Y) {
  // p >= xL*y + yL*x - xL*yL ; p >= xU*y + yU*x - xU*yU
  emit(rows, {{p, 1.0}, {y, -X.lo}, {x, -Y.lo}}, Rel::Ge, -X.lo * Y.lo);
  emit(rows, {{p, 1.0}, {y, -X.hi}, {x, -Y.hi}}, Rel::Ge, -X.hi * Y.hi);
  // p <= xU*y + yL*x - xU*yL ; p <= xL*y + yU*x - xL*yU
  emit(rows, {{p, 1.0}, {y, -X.hi}, {x, -Y.lo}}, Rel::Le, -X.hi * Y.lo);
  emit(rows, {{p, 1.0}, {y, -X.lo}, {x, -Y.hi}}, Rel::Le, -X.lo * Y.hi);
}

}  // namespace detail

/// Valid linear under/over-estimators for one atom over the current column
/// boxes. Every emitted row contains the atom's graph over the box.
inline std::vector<LinearRow> envelope(const Atom& a,
                                       std::span<const Interval> bounds) {
  using namespace detail;
  std::vector<LinearRow> rows;
  const int w = a.out;

  if (a.kind == AtomKind::Linear) {
    LinExpr e = LinExpr::of_column(w);
    e -= a.lin;
    rows.push_back(e.as_row(Rel::Eq, 0.0));
    return rows;
  }
  if (a.kind == AtomKind::Bilinear) {
    mccormick(rows, w, a.in1, a.in2, bounds[a.in1], bounds[a.in2]);
    return rows;
  }
  if (a.kind == AtomKind::Quotient) {
    // in1 = w * in2: McCormick over (w, in2) with product value column in1.
    mccormick(rows, a.in1, w, a.in2, bounds[w], bounds[a.in2]);
    return rows;
  }

  const Interval X = bounds[a.in1];
  const double lo = X.lo, hi = X.hi, mid = 0.5 * (lo + hi);
  if (!X.finite())
    throw std::domain_error("envelope: unbounded input for nonlinear term");

  // Pinned input: the auxiliary's interval bounds already collapse to the
  // single attainable value (an equality expressed as bounds), and secant
  // slopes would blow up, so no rows are needed.
  if (hi - lo <= 1e-12) return rows;

  switch (a.kind) {
    case AtomKind::Square: {
      Univariate fn{[](double v) { return v * v; }, [](double v) { return 2.0 * v; }};
      secant_row(rows, w, a.in1, fn, lo, hi, false);
      tangents_at(rows, w, a.in1, fn, {lo, mid, hi}, true);
      break;
    }
    case AtomKind::Exp: {
      if (hi > 700.0)
        throw std::domain_error("envelope: exp over a box reaching beyond 700");
      Univariate fn{[](double v) { return std::exp(v); },
                    [](double v) { return std::exp(v); }};
      secant_row(rows, w, a.in1, fn, lo, hi, false);
      tangents_at(rows, w, a.in1, fn, {lo, mid, hi}, true);
      break;
    }
    case AtomKind::Log: {
      if (lo <= 0.0)
        throw std::domain_error("envelope: log over a box touching (-inf, 0]");
      Univariate fn{[](double v) { return std::log(v); },
                    [](double v) { return 1.0 / v; }};
      secant_row(rows, w, a.in1, fn, lo, hi, true);
      tangents_at(rows, w, a.in1, fn, {lo, mid, hi}, false);
      break;
    }
    case AtomKind::Sqrt: {
      if (lo < 0.0)
        throw std::domain_error("envelope: sqrt over a box containing negatives");
      Univariate fn{[](double v) { return std::sqrt(v); },
                    [](double v) { return 0.5 / std::sqrt(v); }};
      secant_row(rows, w, a.in1, fn, lo, hi, true);
      tangents_at(rows, w, a.in1, fn, {lo, mid, hi}, false);
      break;
    }
    case AtomKind::PowerK: {
      const long long k = a.exponent;
      struct PowFn {
        long long k;
        double f(double v) const { return ipow(v, k); }
        double df(double v) const { return static_cast<double>(k) * ipow(v, k - 1); }
      } pf{k};
      auto tangent = [&](double t, bool under) {
        const double s = pf.df(t);
        tangent_row(rows, w, a.in1, s, pf.f(t) - s * t, under);
      };
      auto secant = [&](bool under) {
        const double s = (pf.f(hi) - pf.f(lo)) / (hi - lo);
        tangent_row(rows, w, a.in1, s, pf.f(lo) - s * lo, under);
      };
      if (k % 2 == 0 || lo >= 0.0) {  // convex piece (even, or odd on [0,inf))
        secant(false);
        tangent(lo, true);
        tangent(mid, true);
        tangent(hi, true);
      } else if (hi <= 0.0) {  // odd on (-inf,0]: concave
        secant(true);
        tangent(lo, false);
        tangent(mid, false);
        tangent(hi, false);
      } else {  // odd, straddling 0
        const double t_under = detail::odd_power_tangency(k, lo);   // > 0
        if (t_under <= hi) {
          tangent(t_under, true);
          tangent(0.5 * (t_under + hi), true);
          tangent(hi, true);
        } else {
          secant(true);
        }
        const double t_over = detail::odd_power_tangency(k, hi);    // < 0
        if (t_over >= lo) {
          tangent(t_over, false);
          tangent(0.5 * (t_over + lo), false);
          tangent(lo, false);
        } else {
          secant(false);
        }
      }
      break;
    }
    default:
      throw std::logic_error("unhandled atom kind in envelope");
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Factorable decomposition.

namespace detail {

class RelaxBuilder {
 public:
  explicit RelaxBuilder(const Problem& pr) : pr_(pr) {
    rel_.n_original = pr.size();
    rel_.integer_cols = pr.integer_indices();
    for (const Variable& v : pr.variables) rel_.col_bounds.emplace_back(v.lb, v.ub);
  }

  LinearRelaxation finish() {
    for (const Constraint& c : pr_.constraints) {
      try {
        LinExpr g = decompose(c.expr);
        rel_.rows.push_back(g.as_row(Rel::Le, 0.0));
      } catch (const std::exception& e) {
        throw std::domain_error("constraint '" + c.name + "': " + e.what());
      }
    }
    try {
      LinExpr f = decompose(pr_.objective);
      rel_.eta_col = new_col(f.range(rel_.col_bounds));
      f.add_term(rel_.eta_col, -1.0);
      rel_.rows.push_back(f.as_row(Rel::Le, 0.0));  // objective chain <= eta
    } catch (const std::exception& e) {
      throw std::domain_error(std::string("objective: ") + e.what());
    }
    rel_.n_cols = static_cast<int>(rel_.col_bounds.size());
    rel_.objective.assign(rel_.n_cols, 0.0);
    rel_.objective[rel_.eta_col] = 1.0;
    for (const Atom& a : rel_.atoms) {
      auto rows = envelope(a, rel_.col_bounds);
      rel_.rows.insert(rel_.rows.end(), rows.begin(), rows.end());
    }
    return std::move(rel_);
  }

 private:
  int new_col(Interval b) {
    rel_.col_bounds.push_back(b);
    return static_cast<int>(rel_.col_bounds.size()) - 1;
  }

  int materialize(const LinExpr& e) {
    if (e.is_bare_column()) return e.bare_column();
    Atom a;
    a.kind = AtomKind::Linear;
    a.lin = e;
    a.out = new_col(e.range(rel_.col_bounds));
    rel_.atoms.push_back(a);
    return a.out;
  }

  int unary_atom(AtomKind kind, int in, Interval out_bounds, long long expo = 0) {
    Atom a;
    a.kind = kind;
    a.in1 = in;
    a.exponent = expo;
    a.out = new_col(out_bounds);
    rel_.atoms.push_back(a);
    return a.out;
  }

  int bilinear(int x, int y) {
    if (x == y) {
      return unary_atom(AtomKind::Square, x, int_pow(rel_.col_bounds[x], 2));
    }
    Atom a;
    a.kind = AtomKind::Bilinear;
    a.in1 = x;
    a.in2 = y;
    a.out = new_col(rel_.col_bounds[x] * rel_.col_bounds[y]);
    rel_.atoms.push_back(a);
    return a.out;
  }

  // w = num / den as the bilinear identity num = w * den; the denominator
  // box must exclude zero for the quotient to have a bounded envelope.
  LinExpr quotient_cols(const LinExpr& num, const LinExpr& den) {
    const Interval den_box = den.range(rel_.col_bounds);
    if (den_box.lo <= 0.0 && den_box.hi >= 0.0)
      throw std::domain_error("denominator range contains 0");
    const int xcol = materialize(num);
    const int ycol = materialize(den);
    Atom a;
    a.kind = AtomKind::Quotient;
    a.in1 = xcol;
    a.in2 = ycol;
    a.out = new_col(rel_.col_bounds[xcol] / rel_.col_bounds[ycol]);
    rel_.atoms.push_back(a);
    return LinExpr::of_column(a.out);
  }

  LinExpr decompose(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Constant:
        return LinExpr::of_constant(e.value);
      case ExprKind::Variable:
        return LinExpr::of_column(e.var);
      case ExprKind::Sum: {
        LinExpr acc;
        for (const Expr& c : e.children) acc += decompose(c);
        return acc;
      }
      case ExprKind::Difference: {
        LinExpr acc = decompose(e.children[0]);
        acc -= decompose(e.children[1]);
        return acc;
      }
      case ExprKind::Product: {
        double scale = 1.0;
        std::vector<LinExpr> factors;
        for (const Expr& c : e.children) {
          LinExpr part = decompose(c);
          if (part.is_constant()) scale *= part.constant;
          else factors.push_back(std::move(part));
        }
        if (factors.empty()) return LinExpr::of_constant(scale);
        if (factors.size() == 1) {
          factors[0] *= scale;
          return std::move(factors[0]);
        }
        // left-to-right binarization
        int cur = materialize(factors[0]);
        for (size_t i = 1; i < factors.size(); ++i)
          cur = bilinear(cur, materialize(factors[i]));
        LinExpr out = LinExpr::of_column(cur);
        out *= scale;
        return out;
      }
      case ExprKind::Quotient: {
        LinExpr den = decompose(e.children[1]);
        if (den.is_constant()) {
          if (den.constant == 0.0) throw std::domain_error("division by zero constant");
          LinExpr num = decompose(e.children[0]);
          num *= 1.0 / den.constant;
          return num;
        }
        return quotient_cols(decompose(e.children[0]), den);
      }
      case ExprKind::Power: {
        if (e.exponent == 0) return LinExpr::of_constant(1.0);
        LinExpr base = decompose(e.children[0]);
        if (e.exponent == 1) return base;
        if (base.is_constant()) {
          const double v = ipow(base.constant, e.exponent);
          if (!std::isfinite(v)) throw std::domain_error("constant power undefined");
          return LinExpr::of_constant(v);
        }
        if (e.exponent < 0)
          return quotient_cols(LinExpr::of_constant(1.0),
                               power_pos(base, -e.exponent));
        return power_pos(base, e.exponent);
      }
      case ExprKind::Exp: {
        LinExpr arg = decompose(e.children[0]);
        if (arg.is_constant()) return LinExpr::of_constant(std::exp(arg.constant));
        const int c = materialize(arg);
        return LinExpr::of_column(
            unary_atom(AtomKind::Exp, c, minlb::exp(rel_.col_bounds[c])));
      }
      case ExprKind::Log: {
        LinExpr arg = decompose(e.children[0]);
        if (arg.is_constant()) {
          if (arg.constant <= 0.0) throw std::domain_error("log of nonpositive constant");
          return LinExpr::of_constant(std::log(arg.constant));
        }
        const int c = materialize(arg);
        return LinExpr::of_column(
            unary_atom(AtomKind::Log, c, minlb::log(rel_.col_bounds[c])));
      }
      case ExprKind::Sqrt: {
        LinExpr arg = decompose(e.children[0]);
        if (arg.is_constant()) {
          if (arg.constant < 0.0) throw std::domain_error("sqrt of negative constant");
          return LinExpr::of_constant(std::sqrt(arg.constant));
        }
        const int c = materialize(arg);
        return LinExpr::of_column(
            unary_atom(AtomKind::Sqrt, c, minlb::sqrt(rel_.col_bounds[c])));
      }
    }
    throw std::logic_error("unreachable expression kind");
  }

  LinExpr power_pos(const LinExpr& base, long long k) {
    const int c = materialize(base);
    if (k == 2)
      return LinExpr::of_column(
          unary_atom(AtomKind::Square, c, int_pow(rel_.col_bounds[c], 2)));
    return LinExpr::of_column(
        unary_atom(AtomKind::PowerK, c, int_pow(rel_.col_bounds[c], k), k));
  }

  const Problem& pr_;
  LinearRelaxation rel_;
};

}  // namespace detail

/// Builds the polyhedral relaxation: factorable decomposition, auxiliary
/// bounds by interval evaluation, envelope rows per atom, constraint rows
/// copied as linear forms, objective lifted onto eta.
inline LinearRelaxation build_relaxation(const Problem& pr) {
  pr.validate();
  detail::RelaxBuilder b(pr);
  return b.finish();
}

/// Lifts an original-space point to the full column space by evaluating each
/// atom; eta carries the true objective value.
inline std::vector<double> lift_point(const LinearRelaxation& rel, const Problem& pr,
                                      const Point& p) {
  std::vector<double> cols(rel.n_cols, 0.0);
  std::copy(p.begin(), p.end(), cols.begin());
  for (const Atom& a : rel.atoms) cols[a.out] = a.value(cols);
  cols[rel.eta_col] = evaluate(pr.objective, p);
  return cols;
}

inline LpProblem relaxation_to_lp(const LinearRelaxation& rel) {
  LpProblem lp;
  lp.n_cols = rel.n_cols;
  lp.objective = rel.objective;
  lp.rows = rel.rows;
  lp.lower.reserve(rel.n_cols);
  lp.upper.reserve(rel.n_cols);
  for (const Interval& b : rel.col_bounds) {
    lp.lower.push_back(b.lo);
    lp.upper.push_back(b.hi);
  }
  return lp;
}

/// Human-readable dump for envelope auditing (CLI --dump-relaxation).
inline std::string dump_relaxation(const LinearRelaxation& rel) {
  std::ostringstream os;
  os << "columns: " << rel.n_cols << " (" << rel.n_original << " original, eta="
     << rel.eta_col << ")\n";
  for (int j = 0; j < rel.n_cols; ++j) {
    os << "  col " << j << "  [" << rel.col_bounds[j].lo << ", "
       << rel.col_bounds[j].hi << "]";
    if (j < rel.n_original) os << "  original";
    if (j == rel.eta_col) os << "  eta";
    for (const Atom& a : rel.atoms)
      if (a.out == j) {
        os << "  " << atom_kind_name(a.kind) << "(";
        if (a.kind == AtomKind::Linear) {
          for (auto [col, c] : a.lin.coeffs) os << " " << c << "*c" << col;
          os << " + " << a.lin.constant << " ";
        } else {
          os << "c" << a.in1;
          if (a.in2 >= 0) os << ", c" << a.in2;
          if (a.kind == AtomKind::PowerK) os << ", k=" << a.exponent;
        }
        os << ")";
      }
    os << "\n";
  }
  os << "rows: " << rel.rows.size() << "\n";
  for (const LinearRow& r : rel.rows) {
    os << " ";
    for (auto [j, c] : r.coeffs) os << " " << (c >= 0 ? "+" : "") << c << "*c" << j;
    os << " " << rel_name(r.rel) << " " << r.rhs << "\n";
  }
  return os.str();
}

}  // namespace minlb
