#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "minlb/milp.hpp"
#include "minlb/model.hpp"
#include "minlb/nlp.hpp"
#include "minlb/relax.hpp"

namespace minlb {

/// Right-hand side of the local branching constraint: min(15, max(1, b/2)),
/// with integer (floor) division.
inline int compute_k(long long binary_count) {
  if (binary_count < 0) throw std::invalid_argument("compute_k: negative count");
  return static_cast<int>(std::min<long long>(15, std::max<long long>(1, binary_count / 2)));
}

namespace detail {

inline double binary_value(const Point& x, int i, double int_tol, const char* what) {
  const double v = std::round(x[i]);
  if (std::abs(x[i] - v) > int_tol || (v != 0.0 && v != 1.0))
    throw std::invalid_argument(std::string(what) + ": coordinate " +
                                std::to_string(i) + " = " + std::to_string(x[i]) +
                                " is not binary");
  return v;
}

}  // namespace detail

/// Local branching row: at most k of the binaries indexed by B may flip
/// relative to x_bar. With k = |B| the row is vacuous.
inline LinearRow lb_constraint(const Point& x_bar, const std::vector<int>& B, int k,
                               double int_tol = 1e-6) {
  LinearRow row;
  row.rel = Rel::Le;
  double ones = 0.0;
  for (int i : B) {
    const double v = detail::binary_value(x_bar, i, int_tol, "lb_constraint");
    row.coeffs.emplace_back(i, v == 1.0 ? -1.0 : 1.0);
    ones += v;
  }
  row.rhs = static_cast<double>(k) - ones;
  return row;
}

/// Reverse local branching cut: excludes exactly the binary pattern of
/// x_star on B (at least one binary must differ).
inline LinearRow reverse_cut(const Point& x_star, const std::vector<int>& B,
                             double int_tol = 1e-6) {
  if (B.empty())
    throw std::invalid_argument("reverse_cut: empty binary set (row would read 0 >= 1)");
  LinearRow row;
  row.rel = Rel::Ge;
  double ones = 0.0;
  for (int i : B) {
    const double v = detail::binary_value(x_star, i, int_tol, "reverse_cut");
    row.coeffs.emplace_back(i, v == 1.0 ? -1.0 : 1.0);
    ones += v;
  }
  row.rhs = 1.0 - ones;
  return row;
}

// ---------------------------------------------------------------------------
// Improvement heuristic.

struct LbConfig {
  std::optional<int> k;               // unset: computed from |B|
  int max_iterations = 10;
  double milp_time = 2.0;             // deterministic work seconds per MILP
  std::optional<double> time_limit;   // overall, deterministic work seconds
  Tolerances tol;
  NlpConfig nlp;
  std::ostream* milp_log = nullptr;   // node/bound/incumbent lines
};

enum class LbOutcome { Improved, Exhausted, LimitReached, SolverFailure };

inline const char* lb_outcome_name(LbOutcome o) {
  switch (o) {
    case LbOutcome::Improved: return "improved";
    case LbOutcome::Exhausted: return "exhausted";
    case LbOutcome::LimitReached: return "limit_reached";
    case LbOutcome::SolverFailure: return "solver_failure";
  }
  return "?";
}

struct IterationRecord {
  Point x_double_prime;
  MilpStatus milp_status = MilpStatus::Infeasible;
  Point x_star;
  bool x_star_feasible = false;
  double x_star_objective = std::numeric_limits<double>::quiet_NaN();
  bool cut_added = false;
  double cum_work_seconds = 0.0;
};

struct LbTrace {
  Point x_prime;
  std::vector<IterationRecord> records;
  LbOutcome outcome = LbOutcome::SolverFailure;
  std::optional<Solution> improved;
  int k = 0;
  long long work_units = 0;
  double wall_seconds = 0.0;

  double work_seconds() const {
    return static_cast<double>(work_units) / kWorkUnitsPerSecond;
  }
};

/// One invocation of the local branching improvement loop:
///   x'  = local solve of the continuous relaxation + LB row, started at the
///         incumbent (falls back to the incumbent if the solve fails);
///   x'' = L1-nearest integral point of the linear relaxation + LB row +
///         accumulated reverse cuts;
///   x*  = fixed-integer local restoration started at x''.
/// Success needs x* feasible and strictly below the incumbent; each failed
/// iteration cuts off x*'s binary pattern and retries.
inline LbTrace improve(const Problem& pr, const Solution& incumbent, const LbConfig& cfg) {
  const auto wall_start = std::chrono::steady_clock::now();
  const std::vector<int> B = pr.binary_indices();
  if (B.empty())
    throw std::invalid_argument("improve: problem has no binary variables");
  if (cfg.max_iterations < 1)
    throw std::invalid_argument("improve: max_iterations must be >= 1");
  if (static_cast<int>(incumbent.point.size()) != pr.size())
    throw std::invalid_argument("improve: incumbent size mismatch");

  LbTrace trace;
  trace.k = cfg.k ? *cfg.k : compute_k(static_cast<long long>(B.size()));
  if (trace.k < 1) throw std::invalid_argument("improve: k must be >= 1");

  const Point& x_bar = incumbent.point;
  const double f_bar = incumbent.objective;
  const LinearRow lb_row = lb_constraint(x_bar, B, trace.k, cfg.tol.integrality);

  // x' from the continuous relaxation plus the local branching row,
  // warm-started at the incumbent so descent w.r.t. f(x_bar) is guaranteed.
  {
    Problem qbar = relax_integrality(pr);
    qbar.constraints.push_back({"local_branching", row_to_leq_expr(lb_row)});
    NlpTask task{std::move(qbar), x_bar, {}, cfg.nlp};
    NlpResult r = solve_local(task);
    trace.work_units += r.work_units;
    trace.x_prime = r.status == NlpStatus::Failed ? x_bar : r.point;
  }

  const LinearRelaxation rel = build_relaxation(pr);
  MilpProblem milp = l1_objective(rel, trace.x_prime);
  add_cut(milp, lb_row);

  const std::vector<int> int_idx = pr.integer_indices();
  std::vector<bool> mask(pr.size(), false);
  for (int j : int_idx) mask[j] = true;

  auto out_of_budget = [&] {
    return cfg.time_limit && trace.work_seconds() >= *cfg.time_limit;
  };

  trace.outcome = LbOutcome::LimitReached;
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    if (out_of_budget()) break;

    MilpResult mr = solve_milp(milp, cfg.milp_time,
                               std::numeric_limits<long long>::max(), cfg.milp_log);
    trace.work_units += mr.work_units;
    if (mr.status == MilpStatus::Infeasible) {
      trace.outcome = LbOutcome::Exhausted;  // neighbourhood emptied by cuts
      break;
    }
    if (mr.status == MilpStatus::LimitNoSolution) break;  // budget, unproven

    IterationRecord rec;
    rec.milp_status = mr.status;
    rec.x_double_prime.assign(mr.point.begin(), mr.point.begin() + pr.size());

    // Fixed-integer restoration NLP started at x'' (integers snapped).
    Point start = rec.x_double_prime;
    for (int j : int_idx) start[j] = std::round(start[j]);
    Problem fixed = fix_integers(pr, start, cfg.tol);
    NlpTask task{std::move(fixed), start, mask, cfg.nlp};
    NlpResult nr = solve_local(task);
    trace.work_units += nr.work_units;

    Point x_star = nr.point;
    auto f_star = evaluate_opt(pr.objective, x_star);
    if (!f_star) {
      // Fall back to x'' itself; if even that is not evaluable, give up.
      x_star = start;
      f_star = evaluate_opt(pr.objective, x_star);
      if (!f_star) {
        trace.outcome = LbOutcome::SolverFailure;
        break;
      }
    }
    FeasReport feas = is_feasible(pr, x_star, cfg.tol);
    rec.x_star = x_star;
    rec.x_star_feasible = feas.feasible;
    rec.x_star_objective = *f_star;

    if (feas.feasible && *f_star < f_bar - 1e-9) {
      rec.cum_work_seconds = trace.work_seconds();
      trace.records.push_back(std::move(rec));
      Solution sol;
      sol.point = x_star;
      sol.objective = *f_star;
      sol.max_violation = feas.max_violation;
      sol.integral = feas.integral;
      trace.improved = std::move(sol);
      trace.outcome = LbOutcome::Improved;
      break;
    }

    add_cut(milp, reverse_cut(x_star, B, cfg.tol.integrality));
    rec.cut_added = true;
    rec.cum_work_seconds = trace.work_seconds();
    trace.records.push_back(std::move(rec));
  }

  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return trace;
}

// ---------------------------------------------------------------------------
// Feasibility heuristic.

struct FeasConfig {
  int starts = 10;  // h
  std::uint64_t seed = 0;
  double milp_time = 2.0;
  double slack_tol = 1e-6;  // keep interior minima with t <= slack_tol
  Tolerances tol;
  NlpConfig nlp;
  std::ostream* milp_log = nullptr;
};

/// Epigraph form of the interior-point problem: minimize t subject to
/// g_j(x) - t <= 0 over the original box, integrality dropped. t <= 0 at the
/// optimum certifies a point feasible for the continuous relaxation; more
/// negative t sits deeper in the interior.
struct FeasNlp {
  Problem problem;
  int t_col = -1;
};

inline FeasNlp build_feas_nlp(const Problem& pr) {
  constexpr double kSlackBound = 1e6;
  FeasNlp f;
  f.problem = relax_integrality(pr);
  f.t_col = f.problem.size();
  f.problem.variables.push_back(
      {"_slack", -kSlackBound, kSlackBound, VarKind::Continuous});
  f.problem.objective = Expr::variable(f.t_col);
  for (Constraint& c : f.problem.constraints)
    c.expr = Expr::difference(std::move(c.expr), Expr::variable(f.t_col));
  return f;
}

struct FeasStartRecord {
  Point x;          // original coordinates of the F-minimum
  double t = kInf;  // minimax value; +inf when the solve failed
  NlpStatus status = NlpStatus::Failed;
};

struct FeasAttemptRecord {
  int start_index = -1;
  MilpStatus milp_status = MilpStatus::Infeasible;
  bool candidate_feasible = false;
};

struct FeasTrace {
  std::vector<FeasStartRecord> starts;     // in start order
  std::vector<FeasAttemptRecord> attempts;  // in attempt order
  std::optional<Solution> solution;
  long long work_units = 0;
  double wall_seconds = 0.0;

  double work_seconds() const {
    return static_cast<double>(work_units) / kWorkUnitsPerSecond;
  }
};

/// Multistart interior search + nearest-integral MILP (no local branching
/// row: there is no incumbent) + fixed-integer restoration. Reverse cuts
/// accumulate within this call only. Deterministic under a fixed seed.
inline FeasTrace find_feasible(const Problem& pr, const FeasConfig& cfg) {
  const auto wall_start = std::chrono::steady_clock::now();
  if (cfg.starts < 1) throw std::invalid_argument("find_feasible: starts must be >= 1");
  FeasTrace trace;

  const FeasNlp F = build_feas_nlp(pr);
  std::mt19937_64 rng(cfg.seed);

  // All starts are drawn up front, in index order, so results do not depend
  // on how the solves would be scheduled.
  std::vector<Point> starts(cfg.starts);
  for (Point& s : starts) {
    s.resize(F.problem.size(), 0.0);
    for (int j = 0; j < pr.size(); ++j) {
      const double lo = std::clamp(pr.variables[j].lb, -1e3, 1e3);
      const double hi = std::clamp(pr.variables[j].ub, -1e3, 1e3);
      s[j] = std::uniform_real_distribution<double>(lo, hi)(rng);
    }
  }

  for (Point& s : starts) {
    // Start t just above the current violation so the epigraph constraints
    // hold at the start and descent on t is guaranteed.
    double t0 = 1e6;
    double worst = -kInf;
    bool ok = true;
    for (const Constraint& c : pr.constraints) {
      auto g = evaluate_opt(c.expr, s);
      if (!g) {
        ok = false;
        break;
      }
      worst = std::max(worst, *g);
    }
    if (ok && std::isfinite(worst)) t0 = std::clamp(worst + 1.0, -1e6, 1e6);
    s[F.t_col] = t0;

    FeasStartRecord rec;
    NlpTask task{F.problem, s, {}, cfg.nlp};
    NlpResult r = solve_local(task);
    trace.work_units += r.work_units;
    if (r.status != NlpStatus::Failed) {
      rec.status = r.status;
      rec.t = r.point[F.t_col];
      rec.x.assign(r.point.begin(), r.point.begin() + pr.size());
    }
    trace.starts.push_back(std::move(rec));
  }

  // Interior minima sorted by slack value, best (most interior) first.
  std::vector<int> order;
  for (int i = 0; i < cfg.starts; ++i)
    if (trace.starts[i].t <= cfg.slack_tol) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return trace.starts[a].t < trace.starts[b].t;
  });
  if (order.empty()) {
    trace.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return trace;
  }

  const LinearRelaxation rel = build_relaxation(pr);
  const std::vector<int> B = pr.binary_indices();
  const std::vector<int> int_idx = pr.integer_indices();
  std::vector<bool> mask(pr.size(), false);
  for (int j : int_idx) mask[j] = true;
  std::vector<LinearRow> cuts;

  for (int idx : order) {
    MilpProblem milp = l1_objective(rel, trace.starts[idx].x);
    for (const LinearRow& cut : cuts) add_cut(milp, cut);
    MilpResult mr = solve_milp(milp, cfg.milp_time,
                               std::numeric_limits<long long>::max(), cfg.milp_log);
    trace.work_units += mr.work_units;

    FeasAttemptRecord att;
    att.start_index = idx;
    att.milp_status = mr.status;
    if (mr.status == MilpStatus::Infeasible && cuts.empty()) {
      // The relaxation holds every feasible point, so the instance has no
      // integral point at all; further starts cannot help.
      trace.attempts.push_back(att);
      break;
    }
    if (mr.status == MilpStatus::Infeasible ||
        mr.status == MilpStatus::LimitNoSolution) {
      trace.attempts.push_back(att);
      continue;
    }

    Point start(mr.point.begin(), mr.point.begin() + pr.size());
    for (int j : int_idx) start[j] = std::round(start[j]);
    Problem fixed = fix_integers(pr, start, cfg.tol);
    NlpTask task{std::move(fixed), start, mask, cfg.nlp};
    NlpResult nr = solve_local(task);
    trace.work_units += nr.work_units;

    Point candidate = nr.point;
    FeasReport feas = is_feasible(pr, candidate, cfg.tol);
    att.candidate_feasible = feas.feasible;
    trace.attempts.push_back(att);
    if (feas.feasible) {
      Solution sol;
      sol.point = candidate;
      sol.objective = evaluate(pr.objective, candidate);
      sol.max_violation = feas.max_violation;
      sol.integral = feas.integral;
      trace.solution = std::move(sol);
      break;
    }
    if (!B.empty()) {
      // Exclude this binary pattern for the remaining attempts.
      cuts.push_back(reverse_cut(candidate, B, cfg.tol.integrality));
    }
  }

  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return trace;
}

}  // namespace minlb
