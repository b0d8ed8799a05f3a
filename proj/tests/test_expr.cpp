#include <catch2/catch_amalgamated.hpp>

#include "minlb/expr.hpp"
#include "oracle.hpp"

using namespace minlb;

TEST_CASE("parse builds the expected structures", "[expr]") {
  Expr e = parse_expr("(+ x0 1)");
  REQUIRE(e == Expr::sum({Expr::variable(0), Expr::constant(1.0)}));

  Expr p = parse_expr("(^ x0 2)");
  REQUIRE(p == Expr::power(Expr::variable(0), 2));

  Expr m = parse_expr("(* x0 x1 x2)");
  REQUIRE(m == Expr::product({Expr::variable(0), Expr::variable(1), Expr::variable(2)}));

  Expr nested = parse_expr("(+ (* x0 x1) (^ x2 2) -1.5)");
  REQUIRE(nested.kind == ExprKind::Sum);
  REQUIRE(nested.children.size() == 3);
  REQUIRE(nested.children[2] == Expr::constant(-1.5));
}

TEST_CASE("parse errors carry positions and reasons", "[expr]") {
  REQUIRE_THROWS_AS(parse_expr("(sin x0)"), ParseError);
  REQUIRE_THROWS_AS(parse_expr("(+ x0"), ParseError);
  REQUIRE_THROWS_AS(parse_expr("(+ xa 1)"), ParseError);
  REQUIRE_THROWS_AS(parse_expr("(^ x0 2.5)"), ParseError);
  REQUIRE_THROWS_AS(parse_expr("(- x0)"), ParseError);
  REQUIRE_THROWS_AS(parse_expr("(+ x0 1) junk"), ParseError);
  try {
    parse_expr("(+ x0 (sin x1))");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(e.position == 7);
    REQUIRE(std::string(e.what()).find("sin") != std::string::npos);
  }
}

TEST_CASE("evaluate matches hand arithmetic", "[expr]") {
  REQUIRE(evaluate(parse_expr("(+ (* x0 x1) 1)"), std::vector<double>{2.0, 3.0}) == 7.0);
  REQUIRE(evaluate(parse_expr("(exp x0)"), std::vector<double>{0.0}) == 1.0);
  REQUIRE_THROWS_AS(evaluate(parse_expr("(log x0)"), std::vector<double>{-1.0}), EvalError);
  REQUIRE_FALSE(evaluate_opt(parse_expr("(/ 1 x0)"), std::vector<double>{0.0}).has_value());
  REQUIRE_FALSE(evaluate_opt(parse_expr("(sqrt x0)"), std::vector<double>{-4.0}).has_value());
}

TEST_CASE("gradient on closed forms", "[expr]") {
  auto g1 = gradient(parse_expr("(^ x0 2)"), std::vector<double>{3.0});
  REQUIRE(g1.size() == 1);
  REQUIRE(g1[0] == Catch::Approx(6.0));

  auto g2 = gradient(parse_expr("(* x0 x1)"), std::vector<double>{2.0, 5.0});
  REQUIRE(g2[0] == Catch::Approx(5.0));
  REQUIRE(g2[1] == Catch::Approx(2.0));

  // quotient rule, log, sqrt chain
  auto g3 = gradient(parse_expr("(/ x0 x1)"), std::vector<double>{1.0, 2.0});
  REQUIRE(g3[0] == Catch::Approx(0.5));
  REQUIRE(g3[1] == Catch::Approx(-0.25));
}

TEST_CASE("gradient matches central differences on random trees", "[expr]") {
  std::mt19937_64 rng(20240501);
  int checked = 0;
  while (checked < 300) {
    Expr e = testutil::random_tree(rng, 3, 3);
    Point p = testutil::random_point(rng, 3);
    auto g = gradient_opt(e, p);
    auto fd = testutil::fd_gradient(e, p);
    if (!g || !fd) continue;
    double scale = 1.0;
    for (double v : *g) scale = std::max(scale, std::abs(v));
    if (scale > 1e3) continue;  // ill-conditioned for finite differences
    for (size_t j = 0; j < g->size(); ++j)
      REQUIRE((*g)[j] == Catch::Approx((*fd)[j]).margin(1e-5 * scale));
    ++checked;
  }
}

TEST_CASE("interval examples", "[expr]") {
  std::vector<Interval> unit = {{0.0, 1.0}, {0.0, 1.0}};
  Interval r = interval_eval(parse_expr("(* x0 x1)"), unit);
  REQUIRE(r.lo <= 0.0);
  REQUIRE(r.hi >= 1.0);
  REQUIRE(r.hi <= 1.0 + 1e-12);

  std::vector<Interval> sym = {{-1.0, 2.0}};
  Interval s = interval_eval(parse_expr("(^ x0 2)"), sym);
  REQUIRE(s.lo <= 0.0);
  REQUIRE(s.hi >= 4.0);
  REQUIRE(s.hi <= 4.0 + 1e-12);

  // dependency effect: x0 - x0 over [0,1] widens to [-1,1]
  std::vector<Interval> dep = {{0.0, 1.0}};
  Interval d = interval_eval(parse_expr("(- x0 x0)"), dep);
  REQUIRE(d.lo <= -1.0 + 1e-12);
  REQUIRE(d.hi >= 1.0 - 1e-12);
}

TEST_CASE("interval evaluation is sound on random trees", "[expr]") {
  std::mt19937_64 rng(77);
  int trees = 0;
  while (trees < 1000) {
    Expr e = testutil::random_tree(rng, 3, 3);
    auto box = testutil::random_box(rng, 3);
    Interval range;
    try {
      range = interval_eval(e, box);
    } catch (const std::domain_error&) {
      continue;  // log/sqrt/division domain not satisfied over this box
    }
    bool ok = true;
    for (int s = 0; s < 100 && ok; ++s) {
      Point p = testutil::sample_in_box(rng, box);
      auto v = evaluate_opt(e, p);
      if (!v) continue;
      ok = range.contains(*v);
    }
    REQUIRE(ok);
    ++trees;
  }
}

TEST_CASE("print/parse round trip is structurally exact", "[expr]") {
  std::mt19937_64 rng(4242);
  for (int i = 0; i < 200; ++i) {
    Expr e = testutil::random_tree(rng, 4, 4);
    Expr back = parse_expr(to_string(e));
    REQUIRE(back == e);
  }
  // printer is bit-exact on awkward literals
  Expr c = Expr::constant(0.1234567890123456789);
  REQUIRE(parse_expr(to_string(c)) == c);
  Expr tiny = Expr::constant(5e-324);
  REQUIRE(parse_expr(to_string(tiny)) == tiny);
}

TEST_CASE("nonlinear variable detection", "[expr]") {
  std::set<int> nl;
  collect_nonlinear_vars(parse_expr("(+ (* 2 x0) x1)"), nl);
  REQUIRE(nl.empty());
  collect_nonlinear_vars(parse_expr("(+ (* x0 x1) x2)"), nl);
  REQUIRE(nl == std::set<int>{0, 1});
  nl.clear();
  collect_nonlinear_vars(parse_expr("(* 3 (exp x2))"), nl);
  REQUIRE(nl == std::set<int>{2});
  nl.clear();
  collect_nonlinear_vars(parse_expr("(* x0 (+ x1 x2))"), nl);
  REQUIRE(nl == std::set<int>{0, 1, 2});
}
