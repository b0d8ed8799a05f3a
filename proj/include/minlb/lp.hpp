#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "minlb/linear.hpp"

namespace minlb {

struct LpProblem {
  int n_cols = 0;
  std::vector<double> objective;  // minimize
  std::vector<LinearRow> rows;
  std::vector<double> lower, upper;  // per column, +-inf allowed

  void check_shape() const {
    if (static_cast<int>(objective.size()) != n_cols ||
        static_cast<int>(lower.size()) != n_cols ||
        static_cast<int>(upper.size()) != n_cols)
      throw std::invalid_argument("LpProblem: inconsistent column count");
    for (const LinearRow& r : rows)
      for (auto [j, c] : r.coeffs)
        if (j < 0 || j >= n_cols)
          throw std::invalid_argument("LpProblem: row references column " +
                                      std::to_string(j));
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

inline const char* lp_status_name(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
  }
  return "?";
}

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> point;  // structural columns; empty if none available
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
};

namespace detail {

// Dense two-phase bounded-variable primal simplex. Columns are laid out as
// [structurals | slacks | artificials]; the tableau keeps B^-1 A plus B^-1 b
// as a trailing column, and basic values are recomputed from it every
// iteration, so numerical drift is limited to the pivots themselves.
class SimplexSolver {
 public:
  static constexpr double kPivTol = 1e-9;
  static constexpr double kDjTol = 1e-7;
  static constexpr double kFeasTol = 1e-7;
  static constexpr double kDegenStep = 1e-11;
  static constexpr int kBlandTrigger = 40;

  SimplexSolver(const LpProblem& lp, long long iteration_limit)
      : lp_(lp), limit_(iteration_limit) {}

  LpResult run(long long* pivot_counter = nullptr) {
    lp_.check_shape();
    LpResult res;
    for (int j = 0; j < lp_.n_cols; ++j)
      if (lp_.lower[j] > lp_.upper[j]) return res;  // infeasible by bounds

    build();
    const Phase p1 = iterate_phase(true);
    if (pivot_counter) *pivot_counter += iterations_;
    if (p1 == Phase::Limit) {
      res.status = LpStatus::IterationLimit;
      res.iterations = iterations_;
      return res;
    }
    if (phase1_objective() > kFeasTol) {
      res.status = LpStatus::Infeasible;
      res.iterations = iterations_;
      return res;
    }
    pin_artificials();
    const long long before = iterations_;
    const Phase p2 = iterate_phase(false);
    if (pivot_counter) *pivot_counter += iterations_ - before;
    res.iterations = static_cast<int>(iterations_);
    res.point = structural_point();
    res.objective = 0.0;
    for (int j = 0; j < lp_.n_cols; ++j) res.objective += lp_.objective[j] * res.point[j];
    switch (p2) {
      case Phase::Optimal: res.status = LpStatus::Optimal; break;
      case Phase::Unbounded: res.status = LpStatus::Unbounded; break;
      case Phase::Limit: res.status = LpStatus::IterationLimit; break;
    }
    return res;
  }

 private:
  enum class Phase { Optimal, Unbounded, Limit };

  void build() {
    m_ = static_cast<int>(lp_.rows.size());
    n_struct_ = lp_.n_cols;
    total_ = n_struct_ + 2 * m_;
    lb_.assign(total_, 0.0);
    ub_.assign(total_, 0.0);
    xval_.assign(total_, 0.0);
    at_upper_.assign(total_, false);
    basic_row_.assign(total_, -1);
    for (int j = 0; j < n_struct_; ++j) {
      lb_[j] = lp_.lower[j];
      ub_[j] = lp_.upper[j];
      set_start_status(j);
    }
    for (int i = 0; i < m_; ++i) {
      const int s = n_struct_ + i;
      switch (lp_.rows[i].rel) {
        case Rel::Le: lb_[s] = 0.0; ub_[s] = kInf; break;
        case Rel::Ge: lb_[s] = -kInf; ub_[s] = 0.0; break;
        case Rel::Eq: lb_[s] = 0.0; ub_[s] = 0.0; break;
      }
      set_start_status(s);
    }

    // Tableau: one row per constraint over [structurals|slacks|artificials|b].
    width_ = total_ + 1;
    tab_.assign(static_cast<size_t>(m_) * width_, 0.0);
    basis_.assign(m_, -1);
    for (int i = 0; i < m_; ++i) {
      double* row = tab_row(i);
      for (auto [j, c] : lp_.rows[i].coeffs) row[j] += c;
      row[n_struct_ + i] = 1.0;  // slack
      row[total_] = lp_.rows[i].rhs;
      double resid = row[total_];
      for (int j = 0; j < n_struct_ + m_; ++j)
        if (xval_[j] != 0.0) resid -= row[j] * xval_[j];
      const double sigma = resid >= 0.0 ? 1.0 : -1.0;
      const int a = n_struct_ + m_ + i;
      row[a] = sigma;
      lb_[a] = 0.0;
      ub_[a] = kInf;
      if (sigma < 0.0)
        for (int j = 0; j < width_; ++j) row[j] = -row[j];
      // After scaling, the artificial column is the i-th unit vector.
      basis_[i] = a;
      basic_row_[a] = i;
    }
    xb_.assign(m_, 0.0);
    recompute_basics();
    cost_.assign(total_, 0.0);
  }

  // Nonbasic status: at lower bound, at upper bound, or free (value 0).
  // Tracked explicitly; proximity of the bounds must not matter.
  void set_start_status(int j) {
    if (std::isfinite(lb_[j])) {
      xval_[j] = lb_[j];
      at_upper_[j] = false;
    } else if (std::isfinite(ub_[j])) {
      xval_[j] = ub_[j];
      at_upper_[j] = true;
    } else {
      xval_[j] = 0.0;
      at_upper_[j] = false;
    }
  }

  bool is_free(int j) const { return !std::isfinite(lb_[j]) && !std::isfinite(ub_[j]); }

  double* tab_row(int i) { return tab_.data() + static_cast<size_t>(i) * width_; }

  void recompute_basics() {
    for (int i = 0; i < m_; ++i) {
      const double* row = tab_row(i);
      double v = row[total_];
      for (int j = 0; j < total_; ++j)
        if (basic_row_[j] < 0 && xval_[j] != 0.0) v -= row[j] * xval_[j];
      xb_[i] = v;
    }
  }

  double phase1_objective() const {
    double z = 0.0;
    for (int i = 0; i < m_; ++i)
      if (basis_[i] >= n_struct_ + m_) z += xb_[i];
    return z;
  }

  void pin_artificials() {
    for (int j = n_struct_ + m_; j < total_; ++j) {
      lb_[j] = ub_[j] = 0.0;
      if (basic_row_[j] < 0) {
        xval_[j] = 0.0;
        at_upper_[j] = false;
      }
    }
  }

  void set_phase_costs(bool phase1) {
    std::fill(cost_.begin(), cost_.end(), 0.0);
    if (phase1) {
      for (int j = n_struct_ + m_; j < total_; ++j) cost_[j] = 1.0;
    } else {
      for (int j = 0; j < n_struct_; ++j) cost_[j] = lp_.objective[j];
    }
  }

  Phase iterate_phase(bool phase1) {
    set_phase_costs(phase1);
    int degen_streak = 0;
    bool bland = false;
    std::vector<double> dual(m_), dj(total_);
    for (;;) {
      if (iterations_ >= limit_) return Phase::Limit;

      // Reduced costs d = c - c_B^T B^-1 A via the maintained tableau.
      for (int i = 0; i < m_; ++i) dual[i] = cost_[basis_[i]];
      for (int j = 0; j < total_; ++j) dj[j] = cost_[j];
      for (int i = 0; i < m_; ++i) {
        if (dual[i] == 0.0) continue;
        const double* row = tab_row(i);
        for (int j = 0; j < total_; ++j) dj[j] -= dual[i] * row[j];
      }

      // Entering column.
      int enter = -1;
      double enter_dir = 0.0, best_score = kDjTol;
      for (int j = 0; j < total_; ++j) {
        if (basic_row_[j] >= 0 || lb_[j] == ub_[j]) continue;
        double score = 0.0, dir = 0.0;
        if (is_free(j)) {
          if (std::abs(dj[j]) <= kDjTol) continue;
          score = std::abs(dj[j]);
          dir = dj[j] > 0.0 ? -1.0 : 1.0;
        } else if (!at_upper_[j]) {  // at lower bound: may only increase
          if (dj[j] >= -kDjTol) continue;
          score = -dj[j];
          dir = 1.0;
        } else {  // at upper bound: may only decrease
          if (dj[j] <= kDjTol) continue;
          score = dj[j];
          dir = -1.0;
        }
        if (bland) {  // first eligible index
          enter = j;
          enter_dir = dir;
          break;
        }
        if (score > best_score) {
          best_score = score;
          enter = j;
          enter_dir = dir;
        }
      }
      if (enter < 0) return Phase::Optimal;

      // Ratio test.
      double step = kInf;
      int leave_row = -1;
      bool leave_at_upper = false;
      for (int i = 0; i < m_; ++i) {
        const double delta = enter_dir * tab_row(i)[enter];
        if (std::abs(delta) <= kPivTol) continue;
        const int bj = basis_[i];
        double t;
        bool hits_upper;
        if (delta > 0.0) {
          if (!std::isfinite(lb_[bj])) continue;
          t = (xb_[i] - lb_[bj]) / delta;
          hits_upper = false;
        } else {
          if (!std::isfinite(ub_[bj])) continue;
          t = (ub_[bj] - xb_[i]) / (-delta);
          hits_upper = true;
        }
        t = std::max(t, 0.0);
        if (t < step - 1e-12 ||
            (t < step + 1e-12 && better_leaving(i, leave_row, enter, bland))) {
          step = t;
          leave_row = i;
          leave_at_upper = hits_upper;
        }
      }
      double flip = kInf;
      if (std::isfinite(lb_[enter]) && std::isfinite(ub_[enter]))
        flip = ub_[enter] - lb_[enter];

      if (leave_row < 0 && !std::isfinite(flip)) {
        if (phase1)
          throw std::runtime_error("simplex: unbounded phase-1 step");
        return Phase::Unbounded;
      }

      ++iterations_;
      const double taken = std::min(step, flip);
      degen_streak = taken <= kDegenStep ? degen_streak + 1 : 0;
      if (degen_streak > kBlandTrigger) bland = true;
      if (taken > kDegenStep && bland) {
        bland = false;
        degen_streak = 0;
      }

      if (flip <= step) {  // bound flip, basis unchanged
        at_upper_[enter] = enter_dir > 0.0;
        xval_[enter] = at_upper_[enter] ? ub_[enter] : lb_[enter];
        recompute_basics();
        continue;
      }

      // Pivot enter into row leave_row.
      const int leave = basis_[leave_row];
      at_upper_[leave] = leave_at_upper;
      xval_[leave] = leave_at_upper ? ub_[leave] : lb_[leave];
      double* prow = tab_row(leave_row);
      const double piv = prow[enter];
      for (int j = 0; j < width_; ++j) prow[j] /= piv;
      for (int i = 0; i < m_; ++i) {
        if (i == leave_row) continue;
        double* row = tab_row(i);
        const double f = row[enter];
        if (f == 0.0) continue;
        for (int j = 0; j < width_; ++j) row[j] -= f * prow[j];
      }
      basic_row_[leave] = -1;
      basic_row_[enter] = leave_row;
      basis_[leave_row] = enter;
      recompute_basics();
    }
  }

  // Tie-break for leaving rows: Bland wants the smallest basic variable
  // index; otherwise prefer the larger pivot magnitude for stability.
  bool better_leaving(int cand_row, int incumbent_row, int enter, bool bland) const {
    if (incumbent_row < 0) return true;
    if (bland) return basis_[cand_row] < basis_[incumbent_row];
    const double a = std::abs(tab_.at(static_cast<size_t>(cand_row) * width_ + enter));
    const double b =
        std::abs(tab_.at(static_cast<size_t>(incumbent_row) * width_ + enter));
    if (a != b) return a > b;
    return basis_[cand_row] < basis_[incumbent_row];
  }

  std::vector<double> structural_point() const {
    std::vector<double> x(n_struct_);
    for (int j = 0; j < n_struct_; ++j)
      x[j] = basic_row_[j] >= 0 ? xb_[basic_row_[j]] : xval_[j];
    return x;
  }

  LpProblem lp_;
  long long limit_;
  long long iterations_ = 0;
  int m_ = 0, n_struct_ = 0, total_ = 0, width_ = 0;
  std::vector<double> tab_, xb_, xval_, lb_, ub_, cost_;
  std::vector<bool> at_upper_;
  std::vector<int> basis_, basic_row_;
};

}  // namespace detail

/// Deterministic bounded-variable primal simplex. `pivot_counter`, when
/// given, is incremented by the number of pivots (the deterministic work
/// measure used for time accounting upstream).
inline LpResult solve_lp(const LpProblem& lp, long long iteration_limit = 50000,
                         long long* pivot_counter = nullptr) {
  detail::SimplexSolver s(lp, iteration_limit);
  return s.run(pivot_counter);
}

}  // namespace minlb
