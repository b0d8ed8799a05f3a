#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <vector>

#include "minlb/lp.hpp"
#include "minlb/model.hpp"
#include "minlb/relax.hpp"

namespace minlb {

/// Deterministic-work clock rate: simplex pivots (and, upstream, expression
/// evaluations) are charged against time limits at this rate, so "seconds"
/// in limits and traces are reproducible across runs and machines.
inline constexpr double kWorkUnitsPerSecond = 1e6;

struct MilpProblem {
  LpProblem lp;
  std::vector<int> integer_cols;
  int n_original = -1;  // first columns mapping back to problem variables
};

enum class MilpStatus { Optimal, FeasibleLimit, Infeasible, LimitNoSolution };

inline const char* milp_status_name(MilpStatus s) {
  switch (s) {
    case MilpStatus::Optimal: return "optimal";
    case MilpStatus::FeasibleLimit: return "feasible_limit";
    case MilpStatus::Infeasible: return "infeasible";
    case MilpStatus::LimitNoSolution: return "limit_no_solution";
  }
  return "?";
}

struct MilpResult {
  MilpStatus status = MilpStatus::Infeasible;
  std::vector<double> point;  // full column vector when a solution exists
  double objective = std::numeric_limits<double>::quiet_NaN();
  long long nodes = 0;
  long long work_units = 0;     // simplex pivots spent
  double wall_seconds = 0.0;    // informational only, never in traces

  double work_seconds() const {
    return static_cast<double>(work_units) / kWorkUnitsPerSecond;
  }
};

/// Appends one linear row; the feasible set shrinks by exactly the points
/// the row cuts off.
inline void add_cut(MilpProblem& m, const LinearRow& row) {
  m.lp.rows.push_back(row);
}

/// Eq.-(3)-style distance problem: minimize the L1 distance between the
/// original variables and x_prime over the relaxation polyhedron, with
/// integrality on the original integer columns. Distance is measured over
/// original variables only, never auxiliaries.
inline MilpProblem l1_objective(const LinearRelaxation& rel, const Point& x_prime) {
  if (static_cast<int>(x_prime.size()) != rel.n_original)
    throw std::invalid_argument("l1_objective: point length mismatch");
  MilpProblem m;
  m.n_original = rel.n_original;
  m.integer_cols = rel.integer_cols;
  LpProblem& lp = m.lp;
  lp.n_cols = rel.n_cols + rel.n_original;
  lp.objective.assign(lp.n_cols, 0.0);
  lp.rows = rel.rows;
  for (const Interval& b : rel.col_bounds) {
    lp.lower.push_back(b.lo);
    lp.upper.push_back(b.hi);
  }
  for (int i = 0; i < rel.n_original; ++i) {
    const int d = rel.n_cols + i;
    lp.objective[d] = 1.0;
    lp.lower.push_back(0.0);
    lp.upper.push_back(kInf);
    lp.rows.push_back(LinearRow{{{i, 1.0}, {d, -1.0}}, Rel::Le, x_prime[i]});
    lp.rows.push_back(LinearRow{{{i, -1.0}, {d, -1.0}}, Rel::Le, -x_prime[i]});
  }
  return m;
}

namespace detail {

struct BbNode {
  double bound;
  int depth;
  long long id;
  std::vector<double> lower, upper;
};

struct BbNodeWorse {
  bool operator()(const BbNode& a, const BbNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // best bound first
    if (a.depth != b.depth) return a.depth < b.depth;  // then depth-first
    return a.id > b.id;
  }
};

}  // namespace detail

/// Best-first branch and bound with most-fractional branching. Deterministic:
/// the time limit is counted in simplex pivots (see kWorkUnitsPerSecond), so
/// identical inputs always explore the identical tree. `search_log`, when
/// given, receives one line per explored node (node, bound, incumbent).
inline MilpResult solve_milp(const MilpProblem& m, double time_limit_seconds = kInf,
                             long long node_limit = std::numeric_limits<long long>::max(),
                             std::ostream* search_log = nullptr) {
  constexpr double kIntTol = 1e-6;
  constexpr double kPruneMargin = 1e-9;
  const auto wall_start = std::chrono::steady_clock::now();

  m.lp.check_shape();
  for (int j : m.integer_cols)
    if (!std::isfinite(m.lp.lower[j]) || !std::isfinite(m.lp.upper[j]))
      throw std::invalid_argument("solve_milp: integer column without finite bounds");

  MilpResult res;
  const long long work_budget =
      std::isfinite(time_limit_seconds)
          ? static_cast<long long>(time_limit_seconds * kWorkUnitsPerSecond)
          : std::numeric_limits<long long>::max();

  LpProblem work = m.lp;  // per-node bounds are swapped in
  long long next_id = 0;
  std::priority_queue<detail::BbNode, std::vector<detail::BbNode>, detail::BbNodeWorse> open;
  open.push({-kInf, 0, next_id++, m.lp.lower, m.lp.upper});

  bool has_incumbent = false;
  std::vector<double> best_point;
  double best_obj = kInf;
  bool out_of_budget = false;

  while (!open.empty()) {
    if (res.work_units >= work_budget || res.nodes >= node_limit) {
      out_of_budget = true;
      break;
    }
    detail::BbNode node = open.top();
    open.pop();
    if (has_incumbent && node.bound >= best_obj - kPruneMargin) continue;
    ++res.nodes;

    work.lower = std::move(node.lower);
    work.upper = std::move(node.upper);
    LpResult lp = solve_lp(work, 200000, &res.work_units);
    if (lp.status == LpStatus::Unbounded)
      throw std::runtime_error("solve_milp: LP relaxation is unbounded");
    if (lp.status == LpStatus::IterationLimit) {
      out_of_budget = true;  // treat as budget exhaustion, keep determinism
      break;
    }
    if (lp.status == LpStatus::Infeasible) continue;
    if (search_log) {
      *search_log << "node " << res.nodes << "  bound " << lp.objective;
      if (has_incumbent) *search_log << "  incumbent " << best_obj;
      *search_log << "\n";
    }
    if (has_incumbent && lp.objective >= best_obj - kPruneMargin) continue;

    // Most-fractional integer column, ties by lowest index.
    int branch_col = -1;
    double branch_frac = kIntTol;
    for (int j : m.integer_cols) {
      const double v = lp.point[j];
      const double frac = std::abs(v - std::round(v));
      if (frac > branch_frac) {
        branch_frac = frac;
        branch_col = j;
      }
    }
    if (branch_col < 0) {  // integral
      if (!has_incumbent || lp.objective < best_obj) {
        has_incumbent = true;
        best_obj = lp.objective;
        best_point = lp.point;
      }
      continue;
    }

    const double v = lp.point[branch_col];
    detail::BbNode down{lp.objective, node.depth + 1, next_id++, work.lower, work.upper};
    down.upper[branch_col] = std::floor(v);
    detail::BbNode up{lp.objective, node.depth + 1, next_id++, work.lower, work.upper};
    up.lower[branch_col] = std::ceil(v);
    if (down.lower[branch_col] <= down.upper[branch_col]) open.push(std::move(down));
    if (up.lower[branch_col] <= up.upper[branch_col]) open.push(std::move(up));
  }

  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  if (has_incumbent) {
    res.status = out_of_budget ? MilpStatus::FeasibleLimit : MilpStatus::Optimal;
    res.point = std::move(best_point);
    res.objective = best_obj;
  } else {
    res.status = out_of_budget ? MilpStatus::LimitNoSolution : MilpStatus::Infeasible;
  }
  return res;
}

}  // namespace minlb
