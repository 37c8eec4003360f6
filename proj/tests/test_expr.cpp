#include <doctest.h>

#include <cmath>

#include "fbllab/error.hpp"
#include "fbllab/expr.hpp"
#include "fbllab/rng.hpp"

using namespace fbllab;

namespace {

Vector gaussian(Rng& rng, std::size_t d) {
  std::normal_distribution<double> normal;
  Vector v(d);
  for (double& c : v) c = normal(rng);
  return v;
}

const GeneratorTable kGens{{"x", {1, 0}}, {"y", {0, 1}}, {"z", {0.5, -2}}};

}  // namespace

TEST_CASE("parsing builds the expected trees") {
  const auto a = parse_expr("x \\/ y", kGens);
  CHECK(a.kind() == LatticeExpr::Kind::Sup);
  const auto b = parse_expr("abs(x) - 2*y", kGens);
  REQUIRE(b.kind() == LatticeExpr::Kind::Add);
  CHECK(b.children()[0].kind() == LatticeExpr::Kind::Abs);
  REQUIRE(b.children()[1].kind() == LatticeExpr::Kind::Scale);
  CHECK(b.children()[1].scalar() == -2);
  const auto c = parse_expr("powsum(2; x, y)", kGens);
  CHECK(c.kind() == LatticeExpr::Kind::PowSum);
  CHECK(c.scalar() == 2);
  CHECK(c.children().size() == 2);
  CHECK(parse_expr("powsum(inf; x, y)", kGens).scalar() == kInf);
}

TEST_CASE("precedence: sup loosest, then inf, then sums") {
  const Functional s{3, 4};
  // x \/ (y /\ (x + y)) = max(3, min(4, 7)) = 4
  CHECK(evaluate(parse_expr("x \\/ y /\\ x + y", kGens), s) == 4);
  CHECK(evaluate(parse_expr("-x + y", kGens), s) == 1);
  CHECK(evaluate(parse_expr("x * 2 - |z|", kGens), s) == doctest::Approx(6 - 6.5));
  CHECK(evaluate(parse_expr("2 * -x", kGens), s) == -6);
}

TEST_CASE("evaluation examples") {
  CHECK(evaluate(LatticeExpr::abs(LatticeExpr::gen({1, 0})), Functional{-2, 5}) == 2);
  CHECK(evaluate(LatticeExpr::sup(LatticeExpr::gen({1, 0}), LatticeExpr::gen({0, 1})), Functional{3, 4}) == 4);
  CHECK(evaluate(apply_calculus(2, {LatticeExpr::gen({1, 0}), LatticeExpr::gen({0, 1})}), Functional{3, 4}) == 5);
  CHECK(evaluate(LatticeExpr::zero(2), Functional{3, 4}) == 0);
}

TEST_CASE("positive homogeneity and print/parse round trip") {
  Rng rng = make_rng(1, 0);
  for (int t = 0; t < 50; ++t) {
    const auto e = random_lattice_expr(3, 3, 3, rng);
    const auto y = gaussian(rng, 3);
    const double lambda = uniform(rng, 0, 5);
    Functional ly = y;
    for (double& c : ly) c *= lambda;
    CHECK(evaluate(e, ly) == doctest::Approx(lambda * evaluate(e, y)).epsilon(1e-12));
  }
  const auto e = parse_expr("|x| \\/ (y - 0.5*z) /\\ 2*|y| + powsum(3; x, z)", kGens);
  const auto again = parse_expr(e.to_string(), kGens);
  for (int t = 0; t < 20; ++t) {
    const auto y = gaussian(rng, 2);
    CHECK(evaluate(again, y) == evaluate(e, y));
  }
}

TEST_CASE("canonical form") {
  Rng rng = make_rng(2, 0);
  const auto gx = LatticeExpr::gen({1, 2});
  auto cf = canonical_form(gx);
  CHECK(cf.plus.size() == 1);
  CHECK(cf.minus.size() == 1);
  cf = canonical_form(LatticeExpr::abs(gx));
  CHECK(cf.plus.size() == 2);
  for (int t = 0; t < 50; ++t) {
    const auto e = random_lattice_expr(2, 3, 4, rng);
    const auto c = canonical_form(e);
    const auto back = c.to_expr();
    for (int k = 0; k < 10; ++k) {
      const auto y = gaussian(rng, 2);
      CHECK(c.evaluate(y) == doctest::Approx(evaluate(e, y)).epsilon(1e-10));
      CHECK(evaluate(back, y) == doctest::Approx(evaluate(e, y)).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(canonical_form(parse_expr("powsum(2; x, y)", kGens)), PowSumNotLatticeLinear);
}

TEST_CASE("calculus identities") {
  Rng rng = make_rng(3, 0);
  const auto a = LatticeExpr::abs(LatticeExpr::gen({1, 2}));
  const auto b = LatticeExpr::abs(LatticeExpr::gen({-1, 0.5}));
  for (int t = 0; t < 20; ++t) {
    const auto y = gaussian(rng, 2);
    CHECK(evaluate(apply_calculus(kInf, {a, b}), y) == doctest::Approx(evaluate(LatticeExpr::sup(a, b), y)));
    CHECK(evaluate(apply_calculus(1, {a, b}), y) == doctest::Approx(evaluate(a + b, y)));
  }
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_expr("x \\/", kGens), ParseError);
  CHECK_THROWS_AS(parse_expr("(x + y", kGens), ParseError);
  CHECK_THROWS_AS(parse_expr("powsum(0.5; x)", kGens), Error);
  try {
    parse_expr("x + w", kGens);
    FAIL("expected UnboundIdentifier");
  } catch (const UnboundIdentifier& e) {
    CHECK(e.name() == "w");
  }
  CHECK_THROWS_AS(LatticeExpr::add(LatticeExpr::gen({1, 2}), LatticeExpr::gen({1, 2, 3})), DimensionMismatch);
}
