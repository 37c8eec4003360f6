#include <doctest.h>

#include <array>
#include <cmath>

#include "fbllab/error.hpp"
#include "fbllab/rng.hpp"
#include "fbllab/summing.hpp"

using namespace fbllab;

namespace {

LatticeExpr sup_abs_basis() {
  return LatticeExpr::sup(LatticeExpr::abs(LatticeExpr::gen({1, 0})), LatticeExpr::abs(LatticeExpr::gen({0, 1})));
}

SearchConfig quick(std::uint64_t seed) {
  SearchConfig c;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("generator norms are the space norm") {
  const auto l2 = SpaceModel::lp(2, 2);
  for (double p : {1.0, 2.0, 3.0}) {
    const auto est = pq_norm_lower(l2, LatticeExpr::gen({3, 4}), p, p, quick(1));
    CHECK(est.lower == doctest::Approx(5).epsilon(1e-6));
    CHECK(est.lower <= 5 + 1e-9);
    CHECK_FALSE(est.upper);
  }
  CHECK(pq_norm_lower(l2, LatticeExpr::zero(2), 2, 2).lower == 0);
}

TEST_CASE("sup of |e_1|, |e_2| on l_1^2 with p = q = 1") {
  const auto l1 = SpaceModel::lp(2, 1);
  const auto est = pq_norm_lower(l1, sup_abs_basis(), 1, 1, quick(2));
  CHECK(est.lower == doctest::Approx(2).epsilon(1e-9));
  CHECK(pq_norm_bruteforce(l1, sup_abs_basis(), 1, 1, 0.01, 2) == doctest::Approx(2).epsilon(1e-9));
  CHECK(sup_norm(l1, sup_abs_basis(), quick(2)).value == doctest::Approx(1).epsilon(1e-9));
}

TEST_CASE("witness scores its lower bound and is normalized") {
  const auto sp = SpaceModel::lp(2, 3);
  Rng rng = make_rng(3, 0);
  const auto e = random_lattice_expr(2, 3, 3, rng);
  const auto est = pq_norm_lower(sp, e, 2, 1, quick(3));
  CHECK(tuple_score(sp, e, est.witness.functionals, 2, 1) == doctest::Approx(est.lower).epsilon(1e-9));
  CHECK(weak_q_norm(sp, est.witness, 1).value == doctest::Approx(1).epsilon(1e-9));
  CHECK(est.in_pool(sp, est.witness));
  CHECK(est.method.schedule.front() == 1);
  // The score is invariant under scaling of the tuple.
  const auto scaled = est.witness.scaled(3.0);
  CHECK(tuple_score(sp, e, scaled.functionals, 2, 1) == doctest::Approx(est.lower).epsilon(1e-9));
}

TEST_CASE("pooled tuples bound the estimate from below") {
  const auto sp = SpaceModel::lp(2, 2);
  Rng rng = make_rng(4, 0);
  const auto e = random_lattice_expr(2, 3, 3, rng);
  FunctionalTuple t({{1, 0.2}, {-0.3, 1}, {0.7, 0.7}});
  auto c = quick(4);
  c.pool = {t};
  const auto est = pq_norm_lower(sp, e, 2, 2, c);
  CHECK(est.lower >= tuple_score(sp, e, t.functionals, 2, 2) - 1e-12);
  CHECK(est.in_pool(sp, normalize_tuple(sp, t, 2)));
}

TEST_CASE("estimator against the grid oracle on dim-2 spaces") {
  Rng rng = make_rng(5, 0);
  for (int i = 0; i < 3; ++i) {
    const auto sp = std::array{SpaceModel::lp(2, 1), SpaceModel::lp(2, kInf), SpaceModel::lp(2, 2)}[i];
    const auto e = random_lattice_expr(2, 3, 3, rng);
    const double lower = pq_norm_lower(sp, e, 2, 1, quick(i)).lower;
    const double oracle = pq_norm_bruteforce(sp, e, 2, 1, 0.02, 2);
    CHECK(lower >= oracle - 1e-8);
    CHECK(lower <= oracle * 1.05);
  }
}

TEST_CASE("deterministic for a fixed seed") {
  const auto sp = SpaceModel::lp(3, 2);
  Rng rng = make_rng(6, 0);
  const auto e = random_lattice_expr(3, 3, 3, rng);
  const auto a = pq_norm_lower(sp, e, 2, 2, quick(9));
  const auto b = pq_norm_lower(sp, e, 2, 2, quick(9));
  CHECK(a.lower == b.lower);
  CHECK(a.witness.functionals == b.witness.functionals);
}

TEST_CASE("inclusion and shared pools") {
  const auto sp = SpaceModel::lp(2, 2);
  Rng rng = make_rng(7, 0);
  const auto e = random_lattice_expr(2, 3, 3, rng);
  const auto r = inclusion_check(sp, e, {2, 2}, {4, 2}, quick(7));
  CHECK(r.ok);
  CHECK(r.second_estimate.lower <= r.first_estimate.lower + 1e-8);
  const auto g = inclusion_check(sp, LatticeExpr::gen({1, 1}), {1, 1}, {2, 2}, quick(7));
  CHECK(g.first_estimate.lower == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  CHECK(g.second_estimate.lower == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  // Hypotheses are enforced.
  CHECK_THROWS_AS(inclusion_check(sp, e, {2, 2}, {1, 1}, quick(7)), InvalidArgument);
}

TEST_CASE("p < q is rejected; its divergence rate is measured instead") {
  const auto sp = SpaceModel::lp(2, 2);
  CHECK_THROWS_AS(pq_norm_lower(sp, LatticeExpr::gen({1, 0}), 1, 2), InvalidArgument);
  const auto d = divergence_exponent(sp, LatticeExpr::gen({3, 4}), 1, 2, 64, quick(8));
  CHECK(d.slope == doctest::Approx(0.5).epsilon(1e-9));
  const auto d2 = divergence_exponent(sp, LatticeExpr::gen({3, 4}), 2, 4, 64, quick(8));
  CHECK(std::abs(d2.slope - 0.25) <= 1e-6);
  CHECK_THROWS_AS(divergence_exponent(sp, LatticeExpr::gen({3, 4}), 2, 2, 64), InvalidArgument);
}

TEST_CASE("inclusion transform") {
  const auto e = LatticeExpr::abs(LatticeExpr::gen({1, 2}));
  const FunctionalTuple t({{1, 0}, {0, 1}});
  const auto tr = inclusion_transform(e, t, 1, 2);
  // lambda_k = |f(x_k*)|^((2 - 1)/1)
  CHECK(tr.functionals[0] == Vector{1, 0});
  CHECK(tr.functionals[1] == Vector{0, 2});
}

TEST_CASE("cotype experiment on generators gives ratio 1") {
  const std::vector<std::size_t> dims{2, 3};
  auto c = quick(9);
  c.max_length = 4;
  const auto t = cotype_ratio_experiment(2, 1, dims, 2, c);
  REQUIRE(t.rows.size() == 2);
  for (const auto& r : t.rows) CHECK(r.max_ratio >= 1 - 1e-9);
  CHECK_THROWS_AS(cotype_ratio_experiment(2, 2, dims, 2), InvalidArgument);
}

TEST_CASE("oracle guard") {
  CHECK_THROWS_AS(pq_norm_bruteforce(SpaceModel::lp(3, 2), LatticeExpr::gen({1, 0, 0}), 1, 1, 0.1, 2), InvalidArgument);
  CHECK_THROWS_AS(pq_norm_bruteforce(SpaceModel::lp(2, 2), LatticeExpr::gen({1, 0}), 1, 1, 0.1, 4), InvalidArgument);
  CHECK(pq_norm_bruteforce(SpaceModel::lp(2, 2), LatticeExpr::zero(2), 1, 1, 0.1, 2) == 0);
  CHECK(pq_norm_bruteforce(SpaceModel::lp(2, 2), LatticeExpr::gen({3, 4}), 2, 2, 0.01, 2) == doctest::Approx(5).epsilon(0.01));
}
