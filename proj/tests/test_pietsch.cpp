#include <doctest.h>

#include <cmath>

#include "fbllab/error.hpp"
#include "fbllab/pietsch.hpp"
#include "fbllab/rng.hpp"

using namespace fbllab;

TEST_CASE("point mass for a generator") {
  for (const auto& sp : {SpaceModel::lp(2, 1), SpaceModel::lp(2, 2), SpaceModel::lp(3, kInf)}) {
    Vector x(sp.dim());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.4 + 0.3 * static_cast<double>(i);
    const auto e = LatticeExpr::gen(x);
    const auto cert = pietsch_certificate(sp, e, 2.0);
    CHECK(std::abs(cert.C - sp.norm(x)) <= 1e-9);
    // f = C f_mu on the generator's norming functional.
    const auto y = sp.dual().linear_maximizer(x);
    CHECK(cert.C * f_mu(cert, y) == doctest::Approx(evaluate(e, y)).epsilon(1e-8));
    const auto rep = verify_certificate(sp, e, cert, 2000, 1);
    CHECK(rep.ok());
  }
}

TEST_CASE("zero expression") {
  const auto cert = pietsch_certificate(SpaceModel::lp(2, 2), LatticeExpr::zero(2), 2.0);
  CHECK(cert.C == 0);
}

TEST_CASE("random nonnegative expressions") {
  const auto sp = SpaceModel::lp(2, 1);
  for (int i = 0; i < 4; ++i) {
    Rng rng = make_rng(2, static_cast<std::uint64_t>(i));
    const auto e = LatticeExpr::abs(random_lattice_expr(2, 3, 3, rng));
    const double p = i % 2 ? 2.0 : 1.5;
    SearchConfig c;
    c.seed = static_cast<std::uint64_t>(i);
    const auto est = pq_norm_lower(sp, e, p, p, c);
    PietschConfig pc;
    pc.witness_tuples = {est.witness};
    const auto cert = pietsch_certificate(sp, e, p, pc);
    CHECK(cert.C >= est.lower - 1e-6);
    CHECK(cert.grid == cert.atoms.size());
    const auto rep = verify_certificate(sp, e, cert, 2000, 3);
    CHECK(rep.ok());
    CHECK(rep.fmu_norm <= 1.02);

    // Domination is one-sided, so a larger C still passes.
    auto doubled = cert;
    doubled.C *= 2;
    CHECK(verify_certificate(sp, e, doubled, 500, 4).domination_ok);
    // Atoms outside the ball are reported.
    auto outside = cert;
    for (auto& z : outside.atoms)
      for (double& v : z) v *= 1.5;
    CHECK_FALSE(verify_certificate(sp, e, outside, 10, 5).atoms_ok);

    const Functional y{0.3, -0.9};
    CHECK(evaluate(f_mu_expr(cert), y) == doctest::Approx(f_mu(cert, y)).epsilon(1e-12));
    auto withup = est;
    attach_upper(withup, cert);
    CHECK(*withup.upper == cert.C);
  }
}

TEST_CASE("attach_upper needs matching exponents") {
  const auto sp = SpaceModel::lp(2, 2);
  const auto e = LatticeExpr::gen({1, 1});
  auto est = pq_norm_lower(sp, e, 2, 1);
  const auto cert = pietsch_certificate(sp, e, 2.0);
  CHECK_THROWS_AS(attach_upper(est, cert), InvalidArgument);
}
