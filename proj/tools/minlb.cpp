// Command-line front end: `improve` runs the local branching improvement
// heuristic on an instance + incumbent, `feasible` searches for a first
// feasible point, `check` validates a point against an instance.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "minlb/heur.hpp"
#include "minlb/instance_io.hpp"
#include "minlb/relax.hpp"
#include "minlb/trace.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNoResult = 1;
constexpr int kExitInputError = 2;
constexpr int kExitSolverFailure = 3;

struct RunReport {
  std::string command;
  std::string instance;
  std::string outcome;
  double initial_objective = std::numeric_limits<double>::quiet_NaN();
  double final_objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double work_seconds = 0.0;
  double wall_seconds = 0.0;
};

void print_report(const RunReport& r) {
  std::printf("command:            %s\n", r.command.c_str());
  std::printf("instance:           %s\n", r.instance.c_str());
  std::printf("outcome:            %s\n", r.outcome.c_str());
  if (!std::isnan(r.initial_objective))
    std::printf("initial objective:  %.10g\n", r.initial_objective);
  if (!std::isnan(r.final_objective))
    std::printf("final objective:    %.10g\n", r.final_objective);
  std::printf("iterations:         %d\n", r.iterations);
  std::printf("work time (s):      %.6f\n", r.work_seconds);
  std::printf("wall time (s):      %.3f\n", r.wall_seconds);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

std::optional<int> parse_k_flag(const std::string& k_flag) {
  if (k_flag == "auto") return std::nullopt;
  try {
    const int k = std::stoi(k_flag);
    if (k < 1) throw std::invalid_argument("k");
    return k;
  } catch (const std::exception&) {
    throw std::runtime_error("--k must be a positive integer or 'auto'");
  }
}

struct CommonFlags {
  std::string instance_path;
  std::string out_path;
  std::string trace_path;
  double tol_feas = 1e-6;
  double tol_int = 1e-6;
  double milp_time = 2.0;
  bool verbose = false;
};

int run_improve(const CommonFlags& common, const std::string& incumbent_path,
                const std::string& k_flag, int max_iter,
                std::optional<double> time_limit, bool force) {
  minlb::Problem pr;
  minlb::Solution incumbent;
  minlb::LbConfig cfg;
  try {
    pr = minlb::load_instance(common.instance_path);
    minlb::build_relaxation(pr);  // surface convexification domain errors at load
    cfg.k = parse_k_flag(k_flag);
    cfg.max_iterations = max_iter;
    cfg.milp_time = common.milp_time;
    cfg.time_limit = time_limit;
    cfg.tol.feasibility = common.tol_feas;
    cfg.tol.integrality = common.tol_int;
    if (common.verbose) cfg.milp_log = &std::cerr;

    minlb::Point p = minlb::load_point(pr, incumbent_path);
    minlb::FeasReport rep = minlb::is_feasible(pr, p, cfg.tol);
    if (!rep.feasible) {
      if (!force) {
        std::fprintf(stderr,
                     "error: incumbent is not feasible (worst: '%s', violation %g); "
                     "use --force to attempt anyway\n",
                     rep.worst.c_str(), rep.max_violation);
        return kExitInputError;
      }
      std::fprintf(stderr, "warning: incumbent infeasible (worst: '%s', violation %g)\n",
                   rep.worst.c_str(), rep.max_violation);
    }
    incumbent = minlb::make_solution(pr, std::move(p), cfg.tol);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  }

  minlb::LbTrace trace;
  try {
    trace = minlb::improve(pr, incumbent, cfg);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolverFailure;
  }

  if (common.verbose) {
    int it = 0;
    for (const minlb::IterationRecord& r : trace.records)
      std::printf("iter %d: milp=%s  f(x*)=%.10g  feasible=%d  cut=%d\n", ++it,
                  minlb::milp_status_name(r.milp_status), r.x_star_objective,
                  r.x_star_feasible, r.cut_added);
  }
  try {
    if (!common.trace_path.empty())
      write_file(common.trace_path, minlb::improve_trace_to_jsonl(pr, trace));
    if (trace.improved && !common.out_path.empty())
      minlb::save_solution(pr, *trace.improved, common.out_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  }

  RunReport rep;
  rep.command = "improve";
  rep.instance = common.instance_path;
  rep.outcome = minlb::lb_outcome_name(trace.outcome);
  rep.initial_objective = incumbent.objective;
  if (trace.improved) rep.final_objective = trace.improved->objective;
  rep.iterations = static_cast<int>(trace.records.size());
  rep.work_seconds = trace.work_seconds();
  rep.wall_seconds = trace.wall_seconds;
  print_report(rep);

  if (trace.outcome == minlb::LbOutcome::Improved) return kExitOk;
  if (trace.outcome == minlb::LbOutcome::SolverFailure) return kExitSolverFailure;
  return kExitNoResult;
}

int run_feasible(const CommonFlags& common, int starts, std::uint64_t seed) {
  minlb::Problem pr;
  minlb::FeasConfig cfg;
  try {
    pr = minlb::load_instance(common.instance_path);
    minlb::build_relaxation(pr);  // surface convexification domain errors at load
    cfg.starts = starts;
    cfg.seed = seed;
    cfg.milp_time = common.milp_time;
    cfg.tol.feasibility = common.tol_feas;
    cfg.tol.integrality = common.tol_int;
    if (common.verbose) cfg.milp_log = &std::cerr;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  }

  minlb::FeasTrace trace;
  try {
    trace = minlb::find_feasible(pr, cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolverFailure;
  }

  if (common.verbose)
    for (size_t i = 0; i < trace.starts.size(); ++i)
      std::printf("start %zu: status=%s  t=%.10g\n", i,
                  minlb::nlp_status_name(trace.starts[i].status), trace.starts[i].t);
  try {
    if (!common.trace_path.empty())
      write_file(common.trace_path, minlb::feasible_trace_to_jsonl(pr, trace, cfg));
    if (trace.solution && !common.out_path.empty())
      minlb::save_solution(pr, *trace.solution, common.out_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  }

  RunReport rep;
  rep.command = "feasible";
  rep.instance = common.instance_path;
  rep.outcome = trace.solution ? "feasible" : "none";
  if (trace.solution) rep.final_objective = trace.solution->objective;
  rep.iterations = static_cast<int>(trace.attempts.size());
  rep.work_seconds = trace.work_seconds();
  rep.wall_seconds = trace.wall_seconds;
  print_report(rep);
  return trace.solution ? kExitOk : kExitNoResult;
}

int run_check(const CommonFlags& common, const std::string& point_path,
              bool dump_relaxation) {
  try {
    minlb::Problem pr = minlb::load_instance(common.instance_path);
    if (dump_relaxation)
      std::printf("%s", minlb::dump_relaxation(minlb::build_relaxation(pr)).c_str());
    if (point_path.empty()) return kExitOk;

    minlb::Point p = minlb::load_point(pr, point_path);
    minlb::Tolerances tol{common.tol_feas, common.tol_int};
    minlb::FeasReport rep = minlb::is_feasible(pr, p, tol);

    auto obj = minlb::evaluate_opt(pr.objective, p);
    if (obj) std::printf("objective:      %.10g\n", *obj);
    else std::printf("objective:      not evaluable\n");
    std::printf("constraints:\n");
    for (const minlb::Constraint& c : pr.constraints) {
      auto v = minlb::evaluate_opt(c.expr, p);
      if (v)
        std::printf("  %-20s g = %.6g  %s\n", c.name.c_str(), *v,
                    *v > tol.feasibility ? "VIOLATED" : "ok");
      else
        std::printf("  %-20s not evaluable (domain violation)\n", c.name.c_str());
    }
    std::printf("integrality:\n");
    for (int j = 0; j < pr.size(); ++j) {
      const minlb::Variable& v = pr.variables[j];
      if (v.kind != minlb::VarKind::Integer) continue;
      const double frac = std::abs(p[j] - std::round(p[j]));
      std::printf("  %-20s value = %.6g  %s\n", v.name.c_str(), p[j],
                  frac > tol.integrality ? "FRACTIONAL" : "ok");
    }
    std::printf("max violation:  %.6g\n", rep.max_violation);
    std::printf("feasible:       %s\n", rep.feasible ? "yes" : "no");
    return rep.feasible ? kExitOk : kExitNoResult;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local branching heuristics for nonconvex MINLPs"};
  app.require_subcommand(1);

  CommonFlags common;
  auto add_common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("instance", common.instance_path, "instance file (JSON)")
        ->required();
    if (with_out) {
      cmd->add_option("--out", common.out_path, "solution output path");
      cmd->add_option("--trace", common.trace_path, "trace output path (JSONL)");
      cmd->add_option("--milp-time", common.milp_time,
                      "MILP limit in deterministic work seconds")
          ->check(CLI::PositiveNumber);
    }
    cmd->add_option("--tol-feas", common.tol_feas, "feasibility tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tol-int", common.tol_int, "integrality tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--verbose", common.verbose, "per-iteration output");
  };

  auto* improve = app.add_subcommand("improve", "improve a feasible incumbent");
  std::string incumbent_path, k_flag = "auto";
  int max_iter = 10;
  double time_limit = 0.0;
  bool force = false;
  add_common(improve, true);
  improve->add_option("incumbent", incumbent_path, "incumbent solution file")->required();
  improve->add_option("--k", k_flag, "local branching rhs (integer or 'auto')");
  improve->add_option("--max-iter", max_iter, "iteration cap")->check(CLI::PositiveNumber);
  auto* tl = improve->add_option("--time-limit", time_limit,
                                 "overall limit in deterministic work seconds")
                 ->check(CLI::PositiveNumber);
  improve->add_flag("--force", force, "run even if the incumbent fails validation");

  auto* feasible = app.add_subcommand("feasible", "search for a first feasible point");
  int starts = 10;
  std::uint64_t seed = 0;
  add_common(feasible, true);
  feasible->add_option("--starts", starts, "multistart count")->check(CLI::PositiveNumber);
  feasible->add_option("--seed", seed, "random seed");

  auto* check = app.add_subcommand("check", "evaluate a point against an instance");
  std::string point_path;
  bool dump_rel = false;
  add_common(check, false);
  check->add_option("point", point_path, "point/solution file");
  check->add_flag("--dump-relaxation", dump_rel, "print the linear relaxation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help/error text
    return code == 0 ? kExitOk : kExitInputError;
  }

  if (improve->parsed())
    return run_improve(common, incumbent_path, k_flag, max_iter,
                       tl->count() ? std::optional<double>(time_limit) : std::nullopt,
                       force);
  if (feasible->parsed()) return run_feasible(common, starts, seed);
  if (check->parsed()) {
    if (point_path.empty() && !dump_rel) {
      std::fprintf(stderr, "error: check needs a point file or --dump-relaxation\n");
      return kExitInputError;
    }
    return run_check(common, point_path, dump_rel);
  }
  return kExitInputError;
}
