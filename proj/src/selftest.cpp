#include <algorithm>
#include <cmath>

#include "fbllab/homs.hpp"
#include "fbllab/job.hpp"
#include "fbllab/lp.hpp"
#include "fbllab/pietsch.hpp"
#include "fbllab/rng.hpp"
#include "fbllab/summing.hpp"

namespace fbllab {

namespace {

class Suite {
 public:
  Json& check(const std::string& name, bool ok) {
    Json c;
    c["name"] = name;
    c["ok"] = ok;
    if (!ok) failed_ = true;
    checks_.push_back(std::move(c));
    return checks_.back();
  }
  TaskOutcome finish() {
    TaskOutcome out;
    std::size_t passed = 0;
    for (const auto& c : checks_) passed += c["ok"].get<bool>() ? 1 : 0;
    out.report["checks"] = std::move(checks_);
    out.report["passed"] = passed;
    out.report["failed"] = out.report["checks"].size() - passed;
    out.ok = !failed_;
    return out;
  }

 private:
  Json checks_ = Json::array();
  bool failed_ = false;
};

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * (1.0 + std::abs(b)); }

Vector gaussian(Rng& rng, std::size_t d) {
  std::normal_distribution<double> normal;
  Vector v(d);
  for (double& c : v) c = normal(rng);
  return v;
}

void space_checks(Suite& s, Rng& rng) {
  const std::vector<SpaceModel> spaces{SpaceModel::lp(3, 1), SpaceModel::lp(3, 2), SpaceModel::lp(3, kInf),
                                       SpaceModel::weighted_lp(2, 3, {1, 0.5}),
                                       SpaceModel::polytope({{1, 0}, {-1, 0}, {0.5, 0.8}, {-0.5, -0.8}, {-0.5, 0.8}, {0.5, -0.8}})};
  for (const auto& sp : spaces) {
    const Vector x = gaussian(rng, sp.dim());
    const Functional y = gaussian(rng, sp.dim());
    const Vector m = sp.linear_maximizer(y);
    const bool ok = dot(x, y) <= sp.norm(x) * sp.dual_norm(y) * (1 + 1e-12) && close(sp.norm(m), 1.0, 1e-9) &&
                    close(dot(m, y), sp.dual_norm(y), 1e-9) && close(sp.dual().norm(y), sp.dual_norm(y), 1e-9);
    auto& c = s.check("space.duality " + sp.describe(), ok);
    c["norm"] = number(sp.norm(x));
    c["dual_norm"] = number(sp.dual_norm(y));

    const auto ext = ball_extreme_points(sp, 64, 1);
    const auto sph = sphere_sample(sp, 32, 2);
    const auto dsph = dual_sphere_sample(sp, 32, 3);
    bool on = true;
    for (const auto& z : ext.points) on = on && sp.norm(z) <= 1 + 1e-9;
    for (const auto& z : sph) on = on && close(sp.norm(z), 1.0, 1e-9);
    for (const auto& z : dsph) on = on && close(sp.dual_norm(z), 1.0, 1e-9);
    auto& c2 = s.check("space.samples " + sp.describe(), on);
    c2["extreme_points"] = ext.points.size();
    c2["exact"] = ext.exact;
  }

  // l_1 domain: weak_q is the largest l_q norm of a column (x = +-e_i).
  const auto l1 = SpaceModel::lp(3, 1);
  std::vector<Functional> tuple;
  for (int k = 0; k < 4; ++k) tuple.push_back(gaussian(rng, 3));
  double column = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    double acc = 0.0;
    for (const auto& f : tuple) acc += f[i] * f[i];
    column = std::max(column, std::sqrt(acc));
  }
  const auto w1 = weak_q_norm(l1, tuple, 2.0);
  auto& c = s.check("weak_q_norm.l1_columns", w1.exact && close(w1.value, column, 1e-12));
  c["value"] = number(w1.value);
  c["expected"] = number(column);

  // l_2^2 domain, q = 2: the largest singular value, in closed form for 2 x 2 Gram matrices.
  const auto l2 = SpaceModel::lp(2, 2);
  std::vector<Functional> t2{gaussian(rng, 2), gaussian(rng, 2), gaussian(rng, 2)};
  double a = 0, b = 0, d = 0;
  for (const auto& f : t2) {
    a += f[0] * f[0];
    b += f[0] * f[1];
    d += f[1] * f[1];
  }
  const double top = std::sqrt(0.5 * (a + d) + std::sqrt(0.25 * (a - d) * (a - d) + b * b));
  const auto w2 = weak_q_norm(l2, t2, 2.0);
  auto& c3 = s.check("weak_q_norm.l2_spectral", close(w2.value, top, 1e-10));
  c3["value"] = number(w2.value);
  c3["expected"] = number(top);
  FunctionalTuple ft(t2);
  s.check("ensure_weak_norm.cache", close(ensure_weak_norm(l2, ft, 2.0), top, 1e-10) && ft.cached_weak.has_value());
  s.check("lq_of_pairings", close(lq_of_pairings(t2, w2.witness, 2.0), w2.value, 1e-12));
}

void lp_checks(Suite& s) {
  LpProblem lp;
  lp.objective = {1, 1};
  lp.constraints = {{1, 2}, {2, 1}};
  lp.rhs = {2, 2};
  const auto sol = lp_solve(lp);
  auto& c = s.check("lp_solve.small", close(sol.value, 4.0 / 3.0, 1e-12) && close(sol.duals[0] + sol.duals[1] * 2, 1.0, 1e-12));
  c["value"] = number(sol.value);
  LpProblem bad;
  bad.objective = {1};
  bad.constraints = {{-1}};
  bad.rhs = {1};
  bool infeasible = false;
  try {
    lp_solve(bad);
  } catch (const Infeasible&) {
    infeasible = true;
  }
  s.check("lp_solve.infeasible", infeasible);
}

void expr_checks(Suite& s, Rng& rng) {
  GeneratorTable g{{"x", {1.0, 2.0}}, {"y", {-0.5, 1.0}}};
  const auto e = parse_expr("|x| \\/ (y - 0.5*x) /\\ 2*|y|", g);
  const auto again = parse_expr(e.to_string(), g);
  const auto cf = canonical_form(e);
  const auto back = cf.to_expr();
  bool same = true;
  for (int i = 0; i < 50; ++i) {
    const auto y = gaussian(rng, 2);
    const double v = evaluate(e, y);
    same = same && close(evaluate(again, y), v, 1e-12) && close(cf.evaluate(y), v, 1e-12) && close(evaluate(back, y), v, 1e-12);
  }
  auto& c = s.check("expr.parse_print_canonical", same);
  c["expr"] = e.to_string();
  c["nodes"] = e.node_count();

  bool unbound = false;
  try {
    parse_expr("x + z", g);
  } catch (const UnboundIdentifier& err) {
    unbound = err.name() == "z";
  }
  s.check("expr.unbound_identifier", unbound);

  const auto ps = apply_calculus(2.0, {LatticeExpr::gen(g["x"]), LatticeExpr::gen(g["y"])});
  bool pointwise = true;
  for (int i = 0; i < 20; ++i) {
    const auto y = gaussian(rng, 2);
    pointwise = pointwise && close(evaluate(ps, y), std::hypot(dot(g["x"], y), dot(g["y"], y)), 1e-12);
  }
  s.check("expr.calculus_pointwise", pointwise);
  bool refused = false;
  try {
    canonical_form(ps);
  } catch (const PowSumNotLatticeLinear&) {
    refused = true;
  }
  s.check("expr.canonical_refuses_powsum", refused);
  const auto r = random_lattice_expr(3, 3, 3, rng);
  s.check("expr.random", r.dim() == 3 && !r.contains_powsum() && generators_of(r).size() <= 3);
}

void summing_checks(Suite& s, std::uint64_t seed) {
  const auto l2 = SpaceModel::lp(2, 2);
  const Vector x{0.6, -1.2};
  const auto gx = LatticeExpr::gen(x);
  SearchConfig sc;
  sc.seed = derive_seed(seed, 1);
  sc.max_length = 4;
  const auto est = pq_norm_lower(l2, gx, 2.0, 2.0, sc);
  auto& c = s.check("pq_norm_lower.isometry", std::abs(est.lower - l2.norm(x)) <= 0.005 * l2.norm(x));
  c["lower"] = number(est.lower);
  c["norm"] = number(l2.norm(x));
  s.check("tuple_score.witness",
          close(tuple_score(l2, gx, est.witness.functionals, 2.0, 2.0), est.lower, 1e-9));
  const auto nt = normalize_tuple(l2, FunctionalTuple({{1.0, 2.0}, {0.5, -1.0}}), 2.0);
  s.check("normalize_tuple.unit", close(weak_q_norm(l2, nt, 2.0).value, 1.0, 1e-10));

  const auto l1 = SpaceModel::lp(2, 1);
  GeneratorTable g{{"x", {1.0, 0.5}}, {"y", {-0.3, 1.0}}};
  const auto f = parse_expr("|x| \\/ |y| - |x - y| /\\ |x|", g);
  SearchConfig so = sc;
  const auto lo = pq_norm_lower(l1, f, 2.0, 1.0, so);
  const double oracle = pq_norm_bruteforce(l1, f, 2.0, 1.0, 0.05, 2);
  auto& c2 = s.check("pq_norm_bruteforce.agreement", lo.lower >= oracle - 1e-8 && lo.lower <= 1.05 * oracle + 1e-12);
  c2["lower"] = number(lo.lower);
  c2["oracle"] = number(oracle);

  const auto sup = sup_norm(l2, gx, sc);
  auto& c3 = s.check("sup_norm.generator", close(sup.value, l2.norm(x), 1e-6) && !sup.exact);
  c3["value"] = number(sup.value);

  const auto inc = inclusion_check(l2, f, {2, 2}, {4, 2}, sc);
  auto& c4 = s.check("inclusion_check.(2,2)->(4,2)", inc.ok);
  c4["first"] = number(inc.first_estimate.lower);
  c4["second"] = number(inc.second_estimate.lower);
  const std::vector<IndexPair> pairs{{1, 1}, {2, 1}};
  const auto shared = shared_pool_estimates(l2, f, pairs, sc);
  s.check("shared_pool_estimates", shared.size() == 2 && shared[1].lower <= shared[0].lower + 1e-8);
  const auto tr = inclusion_transform(f, est.witness, 1.0, 2.0);
  s.check("inclusion_transform.length", tr.size() == est.witness.size());

  const auto div = divergence_exponent(l2, gx, 1.0, 2.0, 32, sc);
  auto& c5 = s.check("divergence_exponent.(1,2)", std::abs(div.slope - div.expected) <= 1e-6);
  c5["slope"] = number(div.slope);
  const std::vector<std::size_t> dims{2};
  SearchConfig cs = sc;
  cs.max_length = 2;
  cs.restarts = 2;
  const auto cot = cotype_ratio_experiment(2.0, 1.0, dims, 2, cs);
  auto& c6 = s.check("cotype_ratio_experiment", cot.rows.size() == 1 && cot.rows[0].max_ratio >= 1.0 - 1e-9);
  c6["max_ratio"] = number(cot.rows[0].max_ratio);
}

void homs_checks(Suite& s, std::uint64_t seed, Rng& rng) {
  const auto l2 = SpaceModel::lp(2, 2);
  GeneratorTable g{{"x", {1.0, 0.5}}, {"y", {-0.3, 1.0}}};
  const auto f = parse_expr("|x| \\/ |y| - 0.5*|x - y|", g);
  const FunctionalTuple t({gaussian(rng, 2), gaussian(rng, 2), gaussian(rng, 2)});
  const auto ext = extend_to_lp(l2, generators_of(f), t, 2.0);
  SearchConfig sc;
  sc.seed = derive_seed(seed, 2);
  sc.max_length = 4;
  sc.pool = {t};
  const auto est = pq_norm_lower(l2, f, 2.0, 2.0, sc);
  const auto rep = verify_extension_bound(l2, f, ext, est);
  auto& c = s.check("extend_to_lp.bound", rep.ok() && rep.in_pool);
  c["rho"] = number(rep.rho);
  c["lower"] = number(rep.lower);

  // Evaluating then applying the homomorphism is the homomorphism of the expression.
  const auto image = apply_hom(ext, f);
  bool commute = image.size() == t.size();
  for (std::size_t k = 0; k < t.size(); ++k) commute = commute && image[k] == evaluate(f, t.functionals[k]);
  s.check("apply_hom.commutes", commute);
  s.check("lp_vector_norm.inf", lp_vector_norm(Vector{1, -3, 2}, kInf) == 3.0);

  std::vector<Vector> ys(3, Vector(6));
  for (auto& y : ys)
    for (double& v : y) v = uniform01(rng);
  const auto xs = disjointify(ys);
  bool disjoint = true;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j)
      for (std::size_t k = 0; k < 6; ++k) disjoint = disjoint && std::min(xs[i][k], xs[j][k]) == 0.0;
  s.check("disjointify", disjoint && disjointify(xs) == xs);

  const auto pass = dconvexity_check(2.0, 1, 1.0, SpaceModel::lp(4, 2), 500, 3, derive_seed(seed, 3));
  s.check("dconvexity_check.l2", pass.violations == 0);
  const auto fail = dconvexity_check(2.0, 1, 1.0, SpaceModel::lp(4, 1), 100, 2, derive_seed(seed, 4));
  auto& c2 = s.check("dconvexity_check.l1_vs_l2_counterexample", fail.violations > 0);
  c2["worst_ratio"] = number(fail.worst_ratio);

  PietschConfig pc;
  pc.seed = derive_seed(seed, 5);
  pc.witness_tuples = {est.witness};
  auto cert = pietsch_certificate(l2, f, 2.0, pc);
  const auto vr = verify_certificate(l2, f, cert, 1000, derive_seed(seed, 6), 0.02, sc);
  auto& c3 = s.check("pietsch_certificate", vr.ok() && cert.C >= est.lower - 1e-6);
  c3["C"] = number(cert.C);
  c3["lower"] = number(est.lower);
  const Functional y{0.3, -0.7};
  s.check("f_mu_expr", close(evaluate(f_mu_expr(cert), y), f_mu(cert, y), 1e-12));
  auto with_upper = est;
  attach_upper(with_upper, cert);
  s.check("attach_upper", with_upper.upper && *with_upper.upper == cert.C);

  const auto gx = LatticeExpr::gen({0.6, -1.2});
  const auto point = pietsch_certificate(l2, gx, 2.0, pc);
  auto& c4 = s.check("pietsch_certificate.point_mass", std::abs(point.C - l2.norm(Vector{0.6, -1.2})) <= 1e-9);
  c4["C"] = number(point.C);
}

}  // namespace

TaskOutcome selftest(std::uint64_t seed) {
  Suite s;
  Rng rng = make_rng(seed, 0x5e1f);
  space_checks(s, rng);
  lp_checks(s);
  expr_checks(s, rng);
  summing_checks(s, seed);
  homs_checks(s, seed, rng);
  return s.finish();
}

}  // namespace fbllab
