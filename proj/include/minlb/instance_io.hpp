#pragma once

#include <algorithm>
#include <fstream>
#include <string>

#include <json.hpp>

#include "minlb/model.hpp"

namespace minlb {

inline constexpr int kInstanceVersion = 1;
inline constexpr int kSolutionVersion = 1;

namespace detail {

inline double bound_from_json(const nlohmann::json& j, double fallback) {
  if (j.is_null()) return fallback;
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw std::runtime_error("bound must be a number, \"inf\" or \"-inf\"");
}

inline nlohmann::ordered_json bound_to_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

inline Rel rel_from_string(const std::string& s) {
  if (s == "<=") return Rel::Le;
  if (s == ">=") return Rel::Ge;
  if (s == "=" || s == "==") return Rel::Eq;
  throw std::runtime_error("unknown relation '" + s + "' (expected <=, >= or =)");
}

}  // namespace detail

/// Parses the versioned instance schema: variable array (name, lb, ub, kind),
/// objective s-expression, constraint array (name, expr, rel, rhs).
/// Constraints are normalized to "<= 0" form; equalities split in two.
inline Problem instance_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "minlb-instance")
    throw std::runtime_error("not a minlb-instance file (missing format field)");
  if (j.value("version", 0) != kInstanceVersion)
    throw std::runtime_error("unsupported instance version");

  Problem pr;
  for (const auto& vj : j.at("variables")) {
    Variable v;
    v.name = vj.at("name").get<std::string>();
    const std::string kind = vj.value("kind", "continuous");
    try {
      if (kind == "continuous") {
        v.kind = VarKind::Continuous;
        v.lb = detail::bound_from_json(vj.value("lb", nlohmann::json()), -kInf);
        v.ub = detail::bound_from_json(vj.value("ub", nlohmann::json()), kInf);
      } else if (kind == "integer") {
        v.kind = VarKind::Integer;
        v.lb = detail::bound_from_json(vj.value("lb", nlohmann::json()), -kInf);
        v.ub = detail::bound_from_json(vj.value("ub", nlohmann::json()), kInf);
      } else if (kind == "binary") {
        v.kind = VarKind::Integer;
        v.lb = detail::bound_from_json(vj.value("lb", nlohmann::json()), 0.0);
        v.ub = detail::bound_from_json(vj.value("ub", nlohmann::json()), 1.0);
        if (v.lb < 0.0 || v.ub > 1.0)
          throw std::runtime_error("binary bounds must stay within [0, 1]");
      } else {
        throw std::runtime_error("unknown kind '" + kind + "'");
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("variable '" + v.name + "': " + e.what());
    }
    pr.variables.push_back(std::move(v));
  }

  try {
    pr.objective = parse_expr(j.at("objective").get<std::string>());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("objective: ") + e.what());
  }

  int auto_name = 0;
  for (const auto& cj : j.value("constraints", nlohmann::json::array())) {
    std::string name = cj.value("name", "c" + std::to_string(auto_name));
    ++auto_name;
    Expr e = Expr::constant(0.0);
    Rel rel = Rel::Le;
    double rhs = 0.0;
    try {
      e = parse_expr(cj.at("expr").get<std::string>());
      rel = detail::rel_from_string(cj.value("rel", "<="));
      rhs = cj.value("rhs", 0.0);
    } catch (const std::exception& ex) {
      throw std::runtime_error("constraint '" + name + "': " + ex.what());
    }
    std::vector<Expr> forms = normalize(e, rel, rhs);
    if (forms.size() == 1) {
      pr.constraints.push_back({name, std::move(forms[0])});
    } else {
      pr.constraints.push_back({name + ":le", std::move(forms[0])});
      pr.constraints.push_back({name + ":ge", std::move(forms[1])});
    }
  }

  pr.validate();
  return pr;
}

inline nlohmann::ordered_json instance_to_json(const Problem& pr) {
  nlohmann::ordered_json j;
  j["format"] = "minlb-instance";
  j["version"] = kInstanceVersion;
  j["variables"] = nlohmann::ordered_json::array();
  for (const Variable& v : pr.variables) {
    nlohmann::ordered_json vj;
    vj["name"] = v.name;
    vj["lb"] = detail::bound_to_json(v.lb);
    vj["ub"] = detail::bound_to_json(v.ub);
    vj["kind"] = v.kind == VarKind::Continuous ? "continuous"
                 : v.is_binary()               ? "binary"
                                               : "integer";
    j["variables"].push_back(std::move(vj));
  }
  j["objective"] = to_string(pr.objective);
  j["constraints"] = nlohmann::ordered_json::array();
  for (const Constraint& c : pr.constraints) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["expr"] = to_string(c.expr);
    cj["rel"] = "<=";
    cj["rhs"] = 0.0;
    j["constraints"].push_back(std::move(cj));
  }
  return j;
}

inline Problem load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("instance '" + path + "': " + e.what());
  }
  try {
    return instance_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error("instance '" + path + "': " + e.what());
  }
}

inline void save_instance(const Problem& pr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file '" + path + "'");
  out << instance_to_json(pr).dump(2) << '\n';
}

inline nlohmann::ordered_json solution_to_json(const Problem& pr, const Solution& s) {
  nlohmann::ordered_json j;
  j["format"] = "minlb-solution";
  j["version"] = kSolutionVersion;
  j["variables"] = nlohmann::ordered_json::object();
  for (int i = 0; i < pr.size(); ++i) j["variables"][pr.variables[i].name] = s.point[i];
  j["objective"] = s.objective;
  j["max_violation"] = s.max_violation;
  j["feasible"] = s.max_violation <= Tolerances{}.feasibility && s.integral;
  j["integral"] = s.integral;
  return j;
}

inline std::string solution_to_string(const Problem& pr, const Solution& s) {
  return solution_to_json(pr, s).dump(2) + "\n";
}

inline void save_solution(const Problem& pr, const Solution& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write solution file '" + path + "'");
  out << solution_to_string(pr, s);
}

/// Reads a point from a solution-format file: only the "variables" map is
/// required; every problem variable must be present.
inline Point point_from_json(const Problem& pr, const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("variables"))
    throw std::runtime_error("point file needs a \"variables\" object");
  const auto& vars = j.at("variables");
  Point p(pr.size(), 0.0);
  for (int i = 0; i < pr.size(); ++i) {
    const std::string& name = pr.variables[i].name;
    if (!vars.contains(name))
      throw std::runtime_error("point file is missing variable '" + name + "'");
    p[i] = vars.at(name).get<double>();
  }
  if (vars.size() != static_cast<size_t>(pr.size()))
    for (const auto& [k, _] : vars.items())
      if (std::none_of(pr.variables.begin(), pr.variables.end(),
                       [&](const Variable& v) { return v.name == k; }))
        throw std::runtime_error("point file has unknown variable '" + k + "'");
  return p;
}

inline Point load_point(const Problem& pr, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open point file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("point '" + path + "': " + e.what());
  }
  try {
    return point_from_json(pr, j);
  } catch (const std::exception& e) {
    throw std::runtime_error("point '" + path + "': " + e.what());
  }
}

}  // namespace minlb
