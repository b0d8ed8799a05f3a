#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <vector>

#include "minlb/model.hpp"

namespace minlb {

struct NlpConfig {
  int outer_iterations = 30;
  int inner_iterations = 200;
  double feasibility_tol = 1e-6;
  double stationarity_tol = 1e-5;
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;     // applied when violation stalls
  double violation_shrink = 4.0;    // required per-outer-iteration factor
  int lbfgs_memory = 5;
};

/// One local solve: minimize problem.objective over the box subject to the
/// problem's "<= 0" constraints, integrality ignored. Variables with
/// fixed[j] set are frozen at their (clamped) start value.
struct NlpTask {
  Problem problem;
  Point start;
  std::vector<bool> fixed;  // empty means none fixed
  NlpConfig config;
};

enum class NlpStatus { LocallyOptimal, FeasiblePoint, Failed };

inline const char* nlp_status_name(NlpStatus s) {
  switch (s) {
    case NlpStatus::LocallyOptimal: return "locally_optimal";
    case NlpStatus::FeasiblePoint: return "feasible_point";
    case NlpStatus::Failed: return "failed";
  }
  return "?";
}

struct NlpResult {
  Point point;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double max_violation = kInf;
  NlpStatus status = NlpStatus::Failed;
  int outer_iterations = 0;
  long long work_units = 0;  // expression-evaluation count (deterministic)
};

namespace detail {

// Augmented Lagrangian (Powell-Hestenes-Rockafellar) over inequality
// constraints, with box bounds handled exactly by projection. Guarantees on
// exit: if the start was feasible, the returned objective never exceeds the
// start objective (the best feasible iterate is remembered and returned).
class AugLagSolver {
 public:
  explicit AugLagSolver(const NlpTask& task)
      : cfg_(task.config), obj_tape_(task.problem.objective) {
    const Problem& pr = task.problem;
    n_ = pr.size();
    lo_.resize(n_);
    hi_.resize(n_);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = pr.variables[j].lb;
      hi_[j] = pr.variables[j].ub;
    }
    x_ = task.start;
    x_.resize(n_, 0.0);
    clamp(x_);
    if (!task.fixed.empty())
      for (int j = 0; j < n_; ++j)
        if (task.fixed[j]) lo_[j] = hi_[j] = x_[j];
    clamp(x_);
    for (const Constraint& c : pr.constraints) con_tapes_.emplace_back(c.expr);
    lambda_.assign(con_tapes_.size(), 0.0);
    gvals_.assign(con_tapes_.size(), 0.0);
  }

  NlpResult run() {
    NlpResult res;
    res.point = x_;
    res.outer_iterations = 0;

    consider_candidate(x_);

    double rho = cfg_.initial_penalty;
    double prev_viol = kInf;
    bool stationary = false;
    const double inner_tol = std::min(1e-6, cfg_.stationarity_tol);

    if (!std::isfinite(merit(x_, rho))) {
      res.work_units = work_;
      return res;  // not even evaluable at the start: Failed
    }

    for (int outer = 0; outer < cfg_.outer_iterations; ++outer) {
      res.outer_iterations = outer + 1;
      const bool converged_inner = minimize_merit(rho, inner_tol);
      const bool evaluable = eval_constraints(x_);
      const double viol = evaluable ? constraint_violation() : kInf;
      consider_candidate(x_);
      // Stationarity of the merit alone is not enough: the multiplier
      // estimates must also satisfy complementarity (min(lambda_j, -g_j)
      // small), otherwise an inactive constraint still carries weight.
      double comp = 0.0;
      if (evaluable)
        for (size_t j = 0; j < lambda_.size(); ++j)
          comp = std::max(comp, std::abs(std::min(lambda_[j], -gvals_[j])));
      if (viol <= cfg_.feasibility_tol && converged_inner &&
          comp <= cfg_.stationarity_tol) {
        stationary = true;
        break;
      }
      if (!evaluable) break;  // every further outer pass would repeat itself
      // Classical multiplier update, penalty growth on stalled violation.
      for (size_t j = 0; j < lambda_.size(); ++j)
        lambda_[j] = std::max(0.0, lambda_[j] + rho * gvals_[j]);
      if (viol > prev_viol / cfg_.violation_shrink) rho *= cfg_.penalty_growth;
      prev_viol = viol;
    }

    res.work_units = work_;
    const double f_final = objective_value(x_);
    const double viol_final = current_violation(x_);
    if (stationary && std::isfinite(f_final)) {
      // Prefer an earlier feasible iterate only if it is strictly better.
      if (best_ && best_->second < f_final - 1e-12) {
        res.point = best_->first;
        res.objective = best_->second;
        res.max_violation = current_violation(res.point);
        res.status = NlpStatus::FeasiblePoint;
      } else {
        res.point = x_;
        res.objective = f_final;
        res.max_violation = viol_final;
        res.status = NlpStatus::LocallyOptimal;
      }
      return res;
    }
    if (best_) {
      res.point = best_->first;
      res.objective = best_->second;
      res.max_violation = current_violation(res.point);
      res.status = NlpStatus::FeasiblePoint;
      return res;
    }
    res.point = x_;
    res.objective = f_final;
    res.max_violation = viol_final;
    res.status = NlpStatus::Failed;
    return res;
  }

 private:
  void clamp(Point& x) const {
    for (int j = 0; j < n_; ++j) x[j] = std::clamp(x[j], lo_[j], hi_[j]);
  }

  double objective_value(const Point& x) {
    ++work_;
    auto v = obj_tape_.value(x, vals_);
    return v ? *v : std::numeric_limits<double>::quiet_NaN();
  }

  /// Evaluates all constraints into gvals_; false if any is not evaluable.
  bool eval_constraints(const Point& x) {
    for (size_t j = 0; j < con_tapes_.size(); ++j) {
      ++work_;
      auto v = con_tapes_[j].value(x, vals_);
      if (!v) return false;
      gvals_[j] = *v;
    }
    return true;
  }

  double constraint_violation() const {
    double viol = 0.0;
    for (double g : gvals_) viol = std::max(viol, g);
    return viol;
  }

  /// max(0, max_j g_j(x)); +inf if some constraint is not evaluable.
  double current_violation(const Point& x) {
    return eval_constraints(x) ? constraint_violation() : kInf;
  }

  /// PHR merit; +inf on any domain failure (callers backtrack).
  double merit(const Point& x, double rho) {
    ++work_;
    auto f = obj_tape_.value(x, vals_);
    if (!f) return kInf;
    double L = *f;
    for (size_t j = 0; j < con_tapes_.size(); ++j) {
      ++work_;
      auto g = con_tapes_[j].value(x, vals_);
      if (!g) return kInf;
      gvals_[j] = *g;
      const double t = std::max(0.0, lambda_[j] + rho * *g);
      L += (t * t - lambda_[j] * lambda_[j]) / (2.0 * rho);
    }
    return std::isnan(L) ? kInf : L;
  }

  bool merit_gradient(const Point& x, double rho, double& out, std::vector<double>& grad) {
    grad.assign(n_, 0.0);
    double f;
    ++work_;
    if (!obj_tape_.value_and_gradient(x, f, grad, 1.0, vals_, adj_)) return false;
    out = f;
    for (size_t j = 0; j < con_tapes_.size(); ++j) {
      ++work_;
      auto g = con_tapes_[j].value(x, vals_);
      if (!g) return false;
      gvals_[j] = *g;
      const double t = std::max(0.0, lambda_[j] + rho * *g);
      out += (t * t - lambda_[j] * lambda_[j]) / (2.0 * rho);
      if (t > 0.0) {
        double gv;
        ++work_;
        if (!con_tapes_[j].value_and_gradient(x, gv, grad, t, vals_, adj_)) return false;
      }
    }
    for (int j = 0; j < n_; ++j)
      if (lo_[j] == hi_[j]) grad[j] = 0.0;  // frozen coordinates
    return std::isfinite(out);
  }

  double projected_gradient_norm(const Point& x, const std::vector<double>& grad) const {
    double norm = 0.0;
    for (int j = 0; j < n_; ++j) {
      const double step = x[j] - std::clamp(x[j] - grad[j], lo_[j], hi_[j]);
      norm = std::max(norm, std::abs(step));
    }
    return norm;
  }

  /// Projected quasi-Newton descent on the merit for fixed multipliers.
  /// Returns true if the projected-gradient tolerance was reached.
  bool minimize_merit(double rho, double tol) {
    std::deque<std::pair<std::vector<double>, std::vector<double>>> mem;  // (s, y)
    std::vector<double> grad, trial_grad, d(n_), trial(n_);
    double fx;
    if (!merit_gradient(x_, rho, fx, grad)) return false;

    for (int it = 0; it < cfg_.inner_iterations; ++it) {
      if (projected_gradient_norm(x_, grad) <= tol) return true;

      lbfgs_direction(mem, grad, d);
      double slope = 0.0;
      for (int j = 0; j < n_; ++j) slope += d[j] * grad[j];
      if (!(slope < 0.0)) {  // not a descent direction: steepest reset
        mem.clear();
        for (int j = 0; j < n_; ++j) d[j] = -grad[j];
      }

      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        double movement = 0.0;
        for (int j = 0; j < n_; ++j) {
          trial[j] = std::clamp(x_[j] + alpha * d[j], lo_[j], hi_[j]);
          movement = std::max(movement, std::abs(trial[j] - x_[j]));
        }
        if (movement == 0.0) break;  // direction fully blocked by the box
        const double ft = merit(trial, rho);
        double decrease = 0.0;
        for (int j = 0; j < n_; ++j) decrease += grad[j] * (trial[j] - x_[j]);
        if (ft <= fx + 1e-4 * decrease && ft < kInf) {
          double f_new;
          if (!merit_gradient(trial, rho, f_new, trial_grad)) {
            // Accept the step but stop: the new point is not differentiable.
            x_ = trial;
            return false;
          }
          // L-BFGS pair update.
          std::vector<double> s(n_), y(n_);
          double sy = 0.0, ss = 0.0, yy = 0.0;
          for (int j = 0; j < n_; ++j) {
            s[j] = trial[j] - x_[j];
            y[j] = trial_grad[j] - grad[j];
            sy += s[j] * y[j];
            ss += s[j] * s[j];
            yy += y[j] * y[j];
          }
          if (sy > 1e-12 * std::sqrt(ss * yy)) {
            mem.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(mem.size()) > cfg_.lbfgs_memory) mem.pop_front();
          }
          x_ = trial;
          fx = f_new;
          grad = trial_grad;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        bool was_steepest = mem.empty();
        if (was_steepest) return false;  // stalled even on steepest descent
        mem.clear();  // retry next iteration with a fresh direction
      }
    }
    return false;
  }

  void lbfgs_direction(
      const std::deque<std::pair<std::vector<double>, std::vector<double>>>& mem,
      const std::vector<double>& grad, std::vector<double>& d) const {
    d.assign(grad.begin(), grad.end());
    if (mem.empty()) {
      for (double& v : d) v = -v;
      return;
    }
    std::vector<double> alpha(mem.size());
    for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
      const auto& [s, y] = mem[i];
      double sy = 0.0, sd = 0.0;
      for (int j = 0; j < n_; ++j) {
        sy += s[j] * y[j];
        sd += s[j] * d[j];
      }
      alpha[i] = sd / sy;
      for (int j = 0; j < n_; ++j) d[j] -= alpha[i] * y[j];
    }
    {  // initial scaling from the most recent pair
      const auto& [s, y] = mem.back();
      double sy = 0.0, yy = 0.0;
      for (int j = 0; j < n_; ++j) {
        sy += s[j] * y[j];
        yy += y[j] * y[j];
      }
      const double gamma = sy / yy;
      for (int j = 0; j < n_; ++j) d[j] *= gamma;
    }
    for (size_t i = 0; i < mem.size(); ++i) {
      const auto& [s, y] = mem[i];
      double sy = 0.0, yd = 0.0;
      for (int j = 0; j < n_; ++j) {
        sy += s[j] * y[j];
        yd += y[j] * d[j];
      }
      const double beta = yd / sy;
      for (int j = 0; j < n_; ++j) d[j] += (alpha[i] - beta) * s[j];
    }
    for (double& v : d) v = -v;
  }

  /// Remember the best feasible iterate (objective must be evaluable).
  void consider_candidate(const Point& x) {
    const double viol = current_violation(x);
    if (viol > cfg_.feasibility_tol) return;
    const double f = objective_value(x);
    if (std::isnan(f)) return;
    if (!best_ || f < best_->second) best_ = {{x, f}};
  }

  NlpConfig cfg_;
  int n_ = 0;
  Tape obj_tape_;
  std::vector<Tape> con_tapes_;
  std::vector<double> lo_, hi_, lambda_, gvals_;
  Point x_;
  std::optional<std::pair<Point, double>> best_;
  std::vector<double> vals_, adj_;
  long long work_ = 0;
};

}  // namespace detail

/// Local solve via augmented Lagrangian + projected L-BFGS. Domain failures
/// during line search read as infinite merit, so the search backtracks
/// instead of aborting. Guarantees, per status:
///   locally_optimal: max_violation <= feasibility tol and the projected
///     gradient of the merit is below the stationarity tol;
///   feasible_point: max_violation <= feasibility tol;
///   failed: no feasible point was found within the budgets.
/// If the start is feasible, the returned objective never exceeds the start's.
inline NlpResult solve_local(const NlpTask& task) {
  if (static_cast<int>(task.start.size()) != task.problem.size())
    throw std::invalid_argument("solve_local: start length mismatch");
  detail::AugLagSolver solver(task);
  NlpResult res = solver.run();
  // Frozen coordinates are reported bit-exactly at their start values.
  if (!task.fixed.empty())
    for (int j = 0; j < task.problem.size(); ++j)
      if (task.fixed[j]) {
        double v = std::clamp(task.start[j], task.problem.variables[j].lb,
                              task.problem.variables[j].ub);
        res.point[j] = v;
      }
  return res;
}

}  // namespace minlb
