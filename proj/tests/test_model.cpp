#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "minlb/instance_io.hpp"
#include "minlb/model.hpp"
#include "oracle.hpp"

using namespace minlb;

TEST_CASE("normalize emits <=0 forms", "[model]") {
  Expr e = parse_expr("(+ x0 x1)");
  auto ge = normalize(e, Rel::Ge, 2.0);
  REQUIRE(ge.size() == 1);
  REQUIRE(ge[0] == Expr::difference(Expr::constant(2.0), e));

  auto eq = normalize(parse_expr("(* x0 x1)"), Rel::Eq, 1.0);
  REQUIRE(eq.size() == 2);
  REQUIRE(evaluate(eq[0], std::vector<double>{2.0, 0.5}) == Catch::Approx(0.0));
  REQUIRE(evaluate(eq[1], std::vector<double>{2.0, 0.5}) == Catch::Approx(0.0));

  auto le = normalize(Expr::variable(0), Rel::Le, 0.0);
  REQUIRE(le.size() == 1);
  REQUIRE(le[0] == Expr::variable(0));  // identity, no -0 wrapper
}

TEST_CASE("normalize is conservative under tolerance", "[model]") {
  std::mt19937_64 rng(99);
  const double tol = 1e-6;
  for (int i = 0; i < 100; ++i) {
    Expr e = testutil::random_tree(rng, 2, 2);
    const double rhs = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    Point p = testutil::random_point(rng, 2);
    auto v = evaluate_opt(e, p);
    if (!v) continue;
    for (Rel rel : {Rel::Le, Rel::Ge, Rel::Eq}) {
      bool raw = false;
      switch (rel) {
        case Rel::Le: raw = *v <= rhs + tol; break;
        case Rel::Ge: raw = *v >= rhs - tol; break;
        case Rel::Eq: raw = std::abs(*v - rhs) <= tol; break;
      }
      bool forms = true;
      for (const Expr& f : normalize(e, rel, rhs))
        forms = forms && evaluate(f, p) <= tol;
      REQUIRE(raw == forms);
    }
  }
}

TEST_CASE("is_feasible on boundary, violation, integrality", "[model]") {
  Problem pr;
  pr.variables.push_back({"x0", -10.0, 10.0, VarKind::Continuous});
  pr.objective = Expr::constant(0.0);
  pr.constraints.push_back({"g", parse_expr("(- (^ x0 2) 4)")});

  auto at2 = is_feasible(pr, {2.0});
  REQUIRE(at2.feasible);
  REQUIRE(at2.max_violation == 0.0);

  auto at3 = is_feasible(pr, {3.0});
  REQUIRE_FALSE(at3.feasible);
  REQUIRE(at3.max_violation == Catch::Approx(5.0));
  REQUIRE(at3.worst == "g");

  Problem pi = pr;
  pi.variables[0].kind = VarKind::Integer;
  auto frac = is_feasible(pi, {0.4});
  REQUIRE_FALSE(frac.feasible);
  REQUIRE_FALSE(frac.integral);
}

TEST_CASE("is_feasible reports evaluation failures", "[model]") {
  Problem pr;
  pr.variables.push_back({"x0", -10.0, 10.0, VarKind::Continuous});
  pr.objective = Expr::constant(0.0);
  pr.constraints.push_back({"bad", parse_expr("(log x0)")});
  auto rep = is_feasible(pr, {-1.0});
  REQUIRE_FALSE(rep.feasible);
  REQUIRE(rep.eval_failure);
  REQUIRE(rep.worst == "bad");
}

TEST_CASE("relax_integrality drops integrality and keeps bounds", "[model]") {
  Problem pr = testutil::make_t1();
  Problem q = relax_integrality(pr);
  REQUIRE(q.integer_indices().empty());
  REQUIRE(q.variables[0].lb == 0.0);
  REQUIRE(q.variables[0].ub == 1.0);
  // identity on already-continuous problems
  Problem qq = relax_integrality(q);
  REQUIRE(qq.variables.size() == q.variables.size());

  // monotone: sampled points feasible for pr stay feasible for the relaxation
  std::mt19937_64 rng(808);
  int found = 0;
  for (int s = 0; s < 4000 && found < 50; ++s) {
    Point p = testutil::sample_in_box(rng, pr.box());
    for (int j : pr.integer_indices()) p[j] = std::round(p[j]);
    if (!is_feasible(pr, p).feasible) continue;
    REQUIRE(is_feasible(q, p).feasible);
    ++found;
  }
  REQUIRE(found == 50);
}

TEST_CASE("fix_integers", "[model]") {
  Problem pr = testutil::make_t1();
  Problem f = fix_integers(pr, {1.0000001, 0.0, 0.3});
  REQUIRE(f.variables[0].lb == 1.0);
  REQUIRE(f.variables[0].ub == 1.0);
  REQUIRE(f.variables[2].lb == 0.0);  // continuous untouched
  REQUIRE(f.variables[2].ub == 4.0);
  REQUIRE_THROWS_AS(fix_integers(pr, {0.4, 0.0, 0.0}), std::invalid_argument);

  // after fixing, integrality can never be violated
  auto rep = is_feasible(f, {1.0, 0.0, 1.0});
  REQUIRE(rep.integral);

  Problem nothing;
  nothing.variables.push_back({"x", 0.0, 1.0, VarKind::Continuous});
  nothing.objective = Expr::variable(0);
  Problem same = fix_integers(nothing, {0.5});
  REQUIRE(same.variables[0].ub == 1.0);
}

TEST_CASE("validate names the offending variable", "[model]") {
  Problem pr;
  pr.variables.push_back({"free", -kInf, kInf, VarKind::Continuous});
  pr.objective = parse_expr("(^ x0 2)");
  try {
    pr.validate();
    FAIL("expected validation error");
  } catch (const std::invalid_argument& e) {
    REQUIRE(std::string(e.what()).find("free") != std::string::npos);
  }

  Problem ok;
  ok.variables.push_back({"lin", -kInf, kInf, VarKind::Continuous});
  ok.objective = parse_expr("(* 2 x0)");
  ok.validate();  // linear occurrences may be unbounded
}

TEST_CASE("instance files round-trip and validate", "[model]") {
  namespace fs = std::filesystem;
  Problem pr = testutil::make_t1();
  const auto dir = fs::temp_directory_path() / "minlb_model_test";
  fs::create_directories(dir);
  const std::string path = (dir / "t1_copy.json").string();
  save_instance(pr, path);
  Problem back = load_instance(path);
  REQUIRE(back.size() == pr.size());
  REQUIRE(back.variables[1].is_binary());
  REQUIRE(to_string(back.objective) == to_string(pr.objective));
  REQUIRE(back.constraints.size() == pr.constraints.size());

  // solution round trip
  Solution s = make_solution(pr, {1.0, 1.0, 2.0});
  const std::string spath = (dir / "t1_sol.json").string();
  save_solution(pr, s, spath);
  Point p = load_point(pr, spath);
  REQUIRE(p == Point{1.0, 1.0, 2.0});
  REQUIRE(s.objective == Catch::Approx(-7.0));
}

TEST_CASE("instance loader rejects malformed input", "[model]") {
  auto parse = [](const char* text) {
    return instance_from_json(nlohmann::json::parse(text));
  };
  REQUIRE_THROWS(parse(R"({"format":"other"})"));
  REQUIRE_THROWS(parse(R"({"format":"minlb-instance","version":99})"));
  // equality constraints split into two rows
  Problem pr = parse(R"({
    "format": "minlb-instance", "version": 1,
    "variables": [{"name": "a", "lb": 0, "ub": 2}],
    "objective": "x0",
    "constraints": [{"name": "fix", "expr": "x0", "rel": "=", "rhs": 1}]
  })");
  REQUIRE(pr.constraints.size() == 2);
  REQUIRE(pr.constraints[0].name == "fix:le");
  // integer variable with infinite bounds is rejected with its name
  REQUIRE_THROWS_WITH(parse(R"({
    "format": "minlb-instance", "version": 1,
    "variables": [{"name": "n", "kind": "integer"}],
    "objective": "x0",
    "constraints": []
  })"), Catch::Matchers::ContainsSubstring("n"));
}
