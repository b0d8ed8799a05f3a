#pragma once

#include <string>

#include <json.hpp>

#include "minlb/heur.hpp"
#include "minlb/model.hpp"

namespace minlb {

namespace detail {

inline nlohmann::ordered_json point_json(const Point& p) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (double v : p) a.push_back(v);
  return a;
}

}  // namespace detail

/// Line-delimited records mirroring Table-1-style columns (iteration,
/// objective, cumulative time). Times are deterministic work seconds, so
/// identical runs produce byte-identical traces.
inline std::string improve_trace_to_jsonl(const Problem& pr, const LbTrace& t) {
  std::string out;
  nlohmann::ordered_json head;
  head["event"] = "header";
  head["command"] = "improve";
  head["k"] = t.k;
  nlohmann::ordered_json names = nlohmann::ordered_json::array();
  for (const Variable& v : pr.variables) names.push_back(v.name);
  head["variables"] = std::move(names);
  head["x_prime"] = detail::point_json(t.x_prime);
  out += head.dump() + "\n";

  int iter = 0;
  for (const IterationRecord& r : t.records) {
    nlohmann::ordered_json j;
    j["event"] = "iteration";
    j["iter"] = ++iter;
    j["milp_status"] = milp_status_name(r.milp_status);
    j["x_double_prime"] = detail::point_json(r.x_double_prime);
    j["x_star"] = detail::point_json(r.x_star);
    j["x_star_feasible"] = r.x_star_feasible;
    j["objective"] = r.x_star_objective;
    j["cut_added"] = r.cut_added;
    j["time"] = r.cum_work_seconds;
    out += j.dump() + "\n";
  }

  nlohmann::ordered_json tail;
  tail["event"] = "result";
  tail["outcome"] = lb_outcome_name(t.outcome);
  tail["iterations"] = static_cast<int>(t.records.size());
  if (t.improved) tail["objective"] = t.improved->objective;
  tail["time"] = t.work_seconds();
  out += tail.dump() + "\n";
  return out;
}

inline std::string feasible_trace_to_jsonl(const Problem& pr, const FeasTrace& t,
                                           const FeasConfig& cfg) {
  std::string out;
  nlohmann::ordered_json head;
  head["event"] = "header";
  head["command"] = "feasible";
  head["starts"] = cfg.starts;
  head["seed"] = cfg.seed;
  nlohmann::ordered_json names = nlohmann::ordered_json::array();
  for (const Variable& v : pr.variables) names.push_back(v.name);
  head["variables"] = std::move(names);
  out += head.dump() + "\n";

  for (size_t i = 0; i < t.starts.size(); ++i) {
    const FeasStartRecord& r = t.starts[i];
    nlohmann::ordered_json j;
    j["event"] = "start";
    j["index"] = static_cast<int>(i);
    j["status"] = nlp_status_name(r.status);
    j["t"] = r.t;  // +inf serializes as null: solve failed
    if (!r.x.empty()) j["x"] = detail::point_json(r.x);
    out += j.dump() + "\n";
  }
  for (const FeasAttemptRecord& a : t.attempts) {
    nlohmann::ordered_json j;
    j["event"] = "attempt";
    j["start_index"] = a.start_index;
    j["milp_status"] = milp_status_name(a.milp_status);
    j["candidate_feasible"] = a.candidate_feasible;
    out += j.dump() + "\n";
  }

  nlohmann::ordered_json tail;
  tail["event"] = "result";
  tail["outcome"] = t.solution ? "feasible" : "none";
  if (t.solution) tail["objective"] = t.solution->objective;
  tail["time"] = t.work_seconds();
  out += tail.dump() + "\n";
  return out;
}

}  // namespace minlb
