// Test-only oracles and instance generators. Everything here is independent
// of the solver paths it is used to check: gradients come from central
// differences, LP optima from vertex enumeration, MILP optima from explicit
// integer enumeration, and global MINLP optima from dense grids.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "minlb/expr.hpp"
#include "minlb/heur.hpp"
#include "minlb/instance_io.hpp"
#include "minlb/lp.hpp"
#include "minlb/milp.hpp"
#include "minlb/model.hpp"
#include "minlb/relax.hpp"

namespace testutil {

using namespace minlb;

// ---------------------------------------------------------------------------
// Gradient oracle: central finite differences.

inline std::optional<std::vector<double>> fd_gradient(const Expr& e, const Point& p,
                                                      double h = 1e-6) {
  std::vector<double> g(p.size());
  Point q = p;
  for (size_t j = 0; j < p.size(); ++j) {
    q[j] = p[j] + h;
    auto fp = evaluate_opt(e, q);
    q[j] = p[j] - h;
    auto fm = evaluate_opt(e, q);
    q[j] = p[j];
    if (!fp || !fm) return std::nullopt;
    g[j] = (*fp - *fm) / (2.0 * h);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Random expression trees. Leaves are variables or small constants; inner
// nodes cover the whole operator set. log/sqrt arguments are shifted into
// safe territory so that most sampled points are evaluable.

inline Expr random_tree(std::mt19937_64& rng, int nvars, int depth) {
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_int_distribution<int> var(0, nvars - 1);
  auto leaf = [&]() -> Expr {
    if (std::uniform_int_distribution<int>(0, 2)(rng) == 0)
      return Expr::constant(coef(rng));
    return Expr::variable(var(rng));
  };
  if (depth <= 0) return leaf();
  switch (std::uniform_int_distribution<int>(0, 8)(rng)) {
    case 0:
      return Expr::sum({random_tree(rng, nvars, depth - 1),
                        random_tree(rng, nvars, depth - 1)});
    case 1: {
      std::vector<Expr> terms;
      const int n = std::uniform_int_distribution<int>(2, 3)(rng);
      for (int i = 0; i < n; ++i) terms.push_back(random_tree(rng, nvars, depth - 1));
      return Expr::sum(std::move(terms));
    }
    case 2:
      return Expr::product({random_tree(rng, nvars, depth - 1),
                            random_tree(rng, nvars, depth - 1)});
    case 3:
      return Expr::difference(random_tree(rng, nvars, depth - 1),
                              random_tree(rng, nvars, depth - 1));
    case 4:
      return Expr::quotient(random_tree(rng, nvars, depth - 1),
                            Expr::sum({Expr::power(leaf(), 2), Expr::constant(1.0)}));
    case 5:
      return Expr::power(random_tree(rng, nvars, depth - 1),
                         std::uniform_int_distribution<int>(2, 4)(rng));
    case 6:
      return Expr::exp(Expr::product({Expr::constant(0.25),
                                      random_tree(rng, nvars, depth - 1)}));
    case 7:
      return Expr::log(Expr::sum({Expr::power(leaf(), 2), Expr::constant(1.0)}));
    default:
      return Expr::sqrt(Expr::sum({Expr::power(leaf(), 2), Expr::constant(0.5)}));
  }
}

inline Point random_point(std::mt19937_64& rng, int nvars, double lo = -2.0,
                          double hi = 2.0) {
  Point p(nvars);
  for (double& v : p) v = std::uniform_real_distribution<double>(lo, hi)(rng);
  return p;
}

inline std::vector<Interval> random_box(std::mt19937_64& rng, int nvars) {
  std::vector<Interval> box;
  for (int j = 0; j < nvars; ++j) {
    const double lo = std::uniform_real_distribution<double>(-2.0, 1.0)(rng);
    const double w = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
    box.emplace_back(lo, lo + w);
  }
  return box;
}

inline Point sample_in_box(std::mt19937_64& rng, const std::vector<Interval>& box) {
  Point p(box.size());
  for (size_t j = 0; j < box.size(); ++j)
    p[j] = std::uniform_real_distribution<double>(box[j].lo, box[j].hi)(rng);
  return p;
}

// ---------------------------------------------------------------------------
// Dense Gaussian elimination (partial pivoting) for the vertex oracle.

inline bool solve_dense(std::vector<std::vector<double>> a, std::vector<double> b,
                        std::vector<double>& x) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-11) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return true;
}

// ---------------------------------------------------------------------------
// LP oracle: enumerate all vertices of {rows, bounds} (requires a bounded
// box), return the best objective or nullopt when infeasible.

inline std::optional<double> lp_vertex_oracle(const LpProblem& lp) {
  const int n = lp.n_cols;
  struct Plane {
    std::vector<double> a;
    double b;
  };
  std::vector<Plane> planes;
  for (const LinearRow& r : lp.rows) {
    Plane p{std::vector<double>(n, 0.0), r.rhs};
    for (auto [j, c] : r.coeffs) p.a[j] += c;
    planes.push_back(std::move(p));
  }
  for (int j = 0; j < n; ++j) {
    Plane lo{std::vector<double>(n, 0.0), lp.lower[j]};
    lo.a[j] = 1.0;
    planes.push_back(std::move(lo));
    Plane hi{std::vector<double>(n, 0.0), lp.upper[j]};
    hi.a[j] = 1.0;
    planes.push_back(std::move(hi));
  }
  const int total = static_cast<int>(planes.size());

  auto feasible = [&](const std::vector<double>& x) {
    for (const LinearRow& r : lp.rows)
      if (r.violation(x) > 1e-7) return false;
    for (int j = 0; j < n; ++j)
      if (x[j] < lp.lower[j] - 1e-7 || x[j] > lp.upper[j] + 1e-7) return false;
    return true;
  };

  std::optional<double> best;
  std::vector<int> combo(n);
  auto consider = [&]() {
    std::vector<std::vector<double>> a;
    std::vector<double> b, x;
    for (int idx : combo) {
      a.push_back(planes[idx].a);
      b.push_back(planes[idx].b);
    }
    if (!solve_dense(std::move(a), std::move(b), x)) return;
    if (!feasible(x)) return;
    double obj = 0.0;
    for (int j = 0; j < n; ++j) obj += lp.objective[j] * x[j];
    if (!best || obj < *best) best = obj;
  };
  // all C(total, n) combinations
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (;;) {
    combo = idx;
    consider();
    int pos = n - 1;
    while (pos >= 0 && idx[pos] == total - n + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int i = pos + 1; i < n; ++i) idx[i] = idx[i - 1] + 1;
  }
  return best;
}

// ---------------------------------------------------------------------------
// MILP oracle: enumerate every assignment of the integer columns and solve
// the continuous rest with a per-assignment LP.

struct EnumMilpResult {
  bool feasible = false;
  double objective = kInf;
};

inline EnumMilpResult milp_enum_oracle(const MilpProblem& m) {
  EnumMilpResult res;
  LpProblem work = m.lp;
  std::vector<long long> lo, width;
  long long count = 1;
  for (int j : m.integer_cols) {
    const long long l = static_cast<long long>(std::ceil(m.lp.lower[j] - 1e-9));
    const long long u = static_cast<long long>(std::floor(m.lp.upper[j] + 1e-9));
    if (u < l) return res;  // no integral assignment at all
    lo.push_back(l);
    width.push_back(u - l + 1);
    count *= u - l + 1;
    if (count > 2'000'000) throw std::runtime_error("oracle: enumeration too large");
  }
  for (long long code = 0; code < count; ++code) {
    long long c = code;
    for (size_t t = 0; t < m.integer_cols.size(); ++t) {
      const double v = static_cast<double>(lo[t] + c % width[t]);
      c /= width[t];
      work.lower[m.integer_cols[t]] = v;
      work.upper[m.integer_cols[t]] = v;
    }
    LpResult lr = solve_lp(work);
    if (lr.status == LpStatus::Optimal && lr.objective < res.objective) {
      res.feasible = true;
      res.objective = lr.objective;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Grid oracle for MINLPs with exactly one continuous variable: enumerates
// binary patterns within Hamming distance <= k of x_bar (k = |B| for the
// global optimum) and scans the continuous variable on a dense grid.

inline int hamming_on(const std::vector<int>& B, const Point& a, const Point& b) {
  int d = 0;
  for (int i : B)
    if (std::llround(a[i]) != std::llround(b[i])) ++d;
  return d;
}

inline std::optional<double> grid_oracle(const Problem& pr, const Point& x_bar, int k,
                                         int grid = 40000) {
  const std::vector<int> B = pr.binary_indices();
  std::vector<int> cont;
  for (int j = 0; j < pr.size(); ++j)
    if (pr.variables[j].kind == VarKind::Continuous) cont.push_back(j);
  if (cont.size() != 1 ||
      B.size() + cont.size() != static_cast<size_t>(pr.size()))
    throw std::runtime_error("grid_oracle: needs binaries + exactly one continuous");
  const int xc = cont[0];
  const double lo = pr.variables[xc].lb, hi = pr.variables[xc].ub;

  std::optional<double> best;
  const size_t nb = B.size();
  for (uint64_t pattern = 0; pattern < (uint64_t{1} << nb); ++pattern) {
    Point p(pr.size(), 0.0);
    bool in_bounds = true;
    for (size_t t = 0; t < nb; ++t) {
      const double v = (pattern >> t) & 1 ? 1.0 : 0.0;
      p[B[t]] = v;
      if (v < pr.variables[B[t]].lb - 1e-9 || v > pr.variables[B[t]].ub + 1e-9)
        in_bounds = false;
    }
    if (!in_bounds) continue;
    if (hamming_on(B, p, x_bar) > k) continue;
    for (int gi = 0; gi <= grid; ++gi) {
      p[xc] = lo + (hi - lo) * gi / grid;
      bool ok = true;
      for (const Constraint& c : pr.constraints) {
        auto v = evaluate_opt(c.expr, p);
        if (!v || *v > 1e-9) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      auto f = evaluate_opt(pr.objective, p);
      if (f && (!best || *f < *best)) best = *f;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Instances.

inline Problem make_t1() {
  Problem pr;
  pr.variables.push_back({"y0", 0.0, 1.0, VarKind::Integer});
  pr.variables.push_back({"y1", 0.0, 1.0, VarKind::Integer});
  pr.variables.push_back({"x", 0.0, 4.0, VarKind::Continuous});
  pr.objective = parse_expr("(+ (* -2 x0) (* -3 x1) (* -1 x2))");
  pr.constraints.push_back({"capacity", parse_expr("(- (- (^ x2 2) (* 4 x0)) 4)")});
  pr.constraints.push_back({"coupling", parse_expr("(- (* x2 x1) 2)")});
  pr.validate();
  return pr;
}

inline Solution t1_incumbent(const Problem& pr) {
  return make_solution(pr, {0.0, 0.0, 2.0});
}

/// Nonconvex family for end-to-end checks: one continuous x in [-2, 2],
/// nbin binaries with distinct rewards,
///   minimize (x^2 - c)^2 - sum_i a_i y_i
///   s.t.     x^2 - 2 - sum_i d_i y_i <= 0,  optionally x*y_0 <= 3.
/// Every binary pattern admits feasible x, the continuous part is W-shaped
/// (nonconvex), and flipping any y_i to 1 strictly improves the objective.
struct GenInstance {
  Problem pr;
  Solution incumbent;  // all binaries at zero, x at a suboptimal feasible value
};

inline GenInstance gen_lb_instance(std::uint64_t seed, int nbin, bool add_bilinear) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> a_dist(1.0, 2.0);
  std::uniform_real_distribution<double> d_dist(0.1, 0.5);
  const double c = std::uniform_real_distribution<double>(0.5, 1.5)(rng);

  Problem pr;
  for (int i = 0; i < nbin; ++i)
    pr.variables.push_back({"y" + std::to_string(i), 0.0, 1.0, VarKind::Integer});
  pr.variables.push_back({"x", -2.0, 2.0, VarKind::Continuous});
  const int xc = nbin;

  std::vector<Expr> obj_terms;
  obj_terms.push_back(Expr::power(
      Expr::difference(Expr::power(Expr::variable(xc), 2), Expr::constant(c)), 2));
  for (int i = 0; i < nbin; ++i)
    obj_terms.push_back(
        Expr::product({Expr::constant(-a_dist(rng)), Expr::variable(i)}));
  pr.objective = Expr::sum(std::move(obj_terms));

  std::vector<Expr> cap_terms;
  cap_terms.push_back(Expr::power(Expr::variable(xc), 2));
  cap_terms.push_back(Expr::constant(-2.0));
  for (int i = 0; i < nbin; ++i)
    cap_terms.push_back(
        Expr::product({Expr::constant(-d_dist(rng)), Expr::variable(i)}));
  pr.constraints.push_back({"capacity", Expr::sum(std::move(cap_terms))});
  if (add_bilinear)
    pr.constraints.push_back(
        {"mix", Expr::difference(Expr::product({Expr::variable(xc), Expr::variable(0)}),
                                 Expr::constant(3.0))});
  pr.validate();

  GenInstance g;
  g.incumbent = make_solution(pr, [&] {
    Point p(pr.size(), 0.0);
    // x = 1.2 is feasible (1.44 - 2 < 0) and away from the stationary
    // point of (x^2-c)^2 at x = 0, so local descent can actually move.
    p[xc] = 1.2;
    return p;
  }());
  g.pr = std::move(pr);
  return g;
}

/// Variant of gen_lb_instance whose incumbent is the global optimum: the
/// binary pattern is all-ones and x sits at the positive minimizer of the
/// continuous part, so no neighbourhood point can improve.
inline GenInstance gen_lb_instance_at_optimum(std::uint64_t seed, int nbin) {
  GenInstance g = gen_lb_instance(seed, nbin, false);
  Point p(g.pr.size(), 1.0);
  // recover c from the objective: first term is (x^2 - c)^2
  const Expr& first = g.pr.objective.children[0];
  const double c = first.children[0].children[1].value;
  p[nbin] = std::sqrt(c);
  g.incumbent = make_solution(g.pr, std::move(p));
  return g;
}

/// Random small MINLP with nb binaries and nc bounded continuous variables,
/// a linear objective, and a mix of linear / bilinear / square constraints.
/// Used to cross-check the distance MILP against enumeration.
inline Problem gen_random_minlp(std::uint64_t seed, int nb, int nc) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.5, 1.5);
  Problem pr;
  for (int i = 0; i < nb; ++i)
    pr.variables.push_back({"y" + std::to_string(i), 0.0, 1.0, VarKind::Integer});
  for (int i = 0; i < nc; ++i) {
    const double lo = std::uniform_real_distribution<double>(-2.0, 0.0)(rng);
    pr.variables.push_back({"x" + std::to_string(i), lo,
                            lo + std::uniform_real_distribution<double>(1.0, 3.0)(rng),
                            VarKind::Continuous});
  }
  const int n = pr.size();
  std::vector<Expr> obj;
  for (int j = 0; j < n; ++j)
    obj.push_back(Expr::product({Expr::constant(coef(rng)), Expr::variable(j)}));
  pr.objective = obj.size() > 1 ? Expr::sum(std::move(obj)) : std::move(obj[0]);

  std::uniform_int_distribution<int> var(0, n - 1);
  const int rows = std::uniform_int_distribution<int>(2, 4)(rng);
  for (int r = 0; r < rows; ++r) {
    const int kind = std::uniform_int_distribution<int>(0, 2)(rng);
    Expr body = Expr::constant(0.0);
    if (kind == 0) {
      std::vector<Expr> terms;
      for (int j = 0; j < n; ++j)
        terms.push_back(Expr::product({Expr::constant(coef(rng)), Expr::variable(j)}));
      body = terms.size() > 1 ? Expr::sum(std::move(terms)) : std::move(terms[0]);
    } else if (kind == 1) {
      body = Expr::product({Expr::variable(var(rng)), Expr::variable(var(rng))});
    } else {
      body = Expr::power(Expr::variable(var(rng)), 2);
    }
    const double rhs = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    pr.constraints.push_back(
        {"c" + std::to_string(r), Expr::difference(std::move(body), Expr::constant(rhs))});
  }
  pr.validate();
  return pr;
}

}  // namespace testutil
