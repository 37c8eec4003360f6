#include "fbllab/pietsch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbllab/error.hpp"
#include "fbllab/lp.hpp"
#include "fbllab/rng.hpp"

namespace fbllab {

namespace {

double abs_pow(double v, double p) {
  const double a = std::abs(v);
  return p == 1.0 ? a : p == 2.0 ? a * a : std::pow(a, p);
}

double fmu_pow(const std::vector<Vector>& atoms, const std::vector<double>& weights, std::span<const double> y,
               double p) {
  double s = 0.0;
  for (std::size_t j = 0; j < atoms.size(); ++j)
    if (weights[j] > 0.0) s += weights[j] * abs_pow(dot(y, atoms[j]), p);
  return s;
}

// Atoms are identified up to sign since only |x*(z)| enters. Returns the atom's index.
std::size_t add_atom(std::vector<Vector>& atoms, Vector z, const SpaceModel& space) {
  const double n = space.norm(z);
  if (!(n > 0.0)) return atoms.size();
  for (double& c : z) c /= n;
  for (double c : z) {
    if (c == 0.0) continue;
    if (c < 0.0)
      for (double& x : z) x = -x;
    break;
  }
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    double diff = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) diff = std::max(diff, std::abs(atoms[j][i] - z[i]));
    if (diff < 1e-12) return j;
  }
  atoms.push_back(std::move(z));
  return atoms.size() - 1;
}

// Pattern search for a local maximum of f / f_mu on the dual sphere, from y.
Functional ascend_ratio(const SpaceModel& space, const LatticeExpr& e, const std::vector<Vector>& atoms,
                        const std::vector<double>& weights, double p, double floor, Functional y, double& ratio) {
  auto value = [&](const Functional& z) {
    const double fm = fmu_pow(atoms, weights, z, p);
    const double fz = std::abs(evaluate(e, z));
    if (fz <= floor * space.dual_norm(z)) return 0.0;
    if (fm <= 0.0) return std::numeric_limits<double>::infinity();
    return fz / std::pow(fm, 1.0 / p);
  };
  ratio = value(y);
  for (double step = 0.1; step > 1e-9 && std::isfinite(ratio); step *= 0.5) {
    bool improved = true;
    for (int sweep = 0; improved && sweep < 50; ++sweep) {
      improved = false;
      for (std::size_t i = 0; i < y.size(); ++i)
        for (double sgn : {1.0, -1.0}) {
          Functional z = y;
          z[i] += sgn * step;
          const double r = value(z);
          if (r > ratio) {
            ratio = r;
            y = std::move(z);
            improved = true;
          }
        }
    }
  }
  const double n = space.dual_norm(y);
  if (n > 0.0)
    for (double& c : y) c /= n;
  return y;
}

}  // namespace

DominationCertificate pietsch_certificate(const SpaceModel& space, const LatticeExpr& e, double p,
                                          const PietschConfig& config) {
  if (e.dim() != space.dim()) throw DimensionMismatch(space.dim(), e.dim());
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("pietsch_certificate: need finite p >= 1");

  DominationCertificate cert;
  cert.p = p;

  // Atoms: extreme points (or a sphere sample), generator directions, more sphere
  // samples, and the weak-norm witnesses of the supplied tuples.
  std::vector<Vector> atoms;
  if (const auto* pts = space.exact_extreme_points(4096))
    for (const auto& z : *pts) add_atom(atoms, z, space);
  std::vector<std::size_t> generator_atoms;
  for (const auto& x : generators_of(e)) generator_atoms.push_back(add_atom(atoms, x, space));
  for (const auto& z : sphere_sample(space, config.atom_grid, derive_seed(config.seed, 2))) add_atom(atoms, z, space);

  // Constraint functionals.
  std::vector<Functional> cons;
  for (const auto& t : config.witness_tuples) {
    for (const auto& f : t.functionals) {
      if (f.size() != space.dim()) throw DimensionMismatch(space.dim(), f.size());
      cons.push_back(f);
    }
    if (!t.empty()) add_atom(atoms, weak_q_norm(space, t, p, config.weak).witness, space);
  }
  for (const auto& f : config.extra_constraints) {
    if (f.size() != space.dim()) throw DimensionMismatch(space.dim(), f.size());
    cons.push_back(f);
  }
  const SpaceModel dual = space.dual();
  for (const auto& x : generators_of(e)) {
    if (std::all_of(x.begin(), x.end(), [](double c) { return c == 0.0; })) continue;
    auto f = dual.linear_maximizer(x);
    cons.push_back(f);
    for (double& c : f) c = -c;
    cons.push_back(std::move(f));
  }
  if (const auto* pts = dual.exact_extreme_points(4096))
    for (const auto& f : *pts) cons.push_back(f);
  for (const auto& f : dual_sphere_sample(space, config.constraint_samples, derive_seed(config.seed, 3)))
    cons.push_back(f);

  // Domination of |f| implies domination of f, and the two have the same norm.
  double scale = 0.0;
  for (const auto& f : cons) scale = std::max(scale, std::abs(evaluate(e, f)));
  // Below this f / f_mu is rounding noise (0 / 0 near the null directions).
  const double floor = 1e-6 * scale;

  cert.atoms = atoms;
  cert.grid = atoms.size();
  const std::size_t J = atoms.size();
  if (std::all_of(cons.begin(), cons.end(), [&](const Functional& f) { return evaluate(e, f) == 0.0; })) {
    cert.C = 0.0;
    cert.weights.assign(J, 1.0 / static_cast<double>(J));
    cert.constraints_used = cons.size();
    return cert;
  }

  std::vector<double> nu;
  double mass = 0.0;
  auto solve = [&] {
    // Dual of  min sum(nu)  s.t.  sum_j nu_j |x_i*(z_j)|^p >= f(x_i*)^p,  nu >= 0:
    //   max sum_i b_i y_i  s.t.  sum_i |x_i*(z_j)|^p y_i <= 1.
    // Its right-hand sides are all nonpositive after negation, so no phase 1 is needed,
    // and nu is read off as the multipliers of its constraints.
    LpProblem lp;
    const std::size_t I = cons.size();
    lp.objective.resize(I);
    for (std::size_t i = 0; i < I; ++i) lp.objective[i] = -abs_pow(evaluate(e, cons[i]), p);
    lp.constraints.assign(J, std::vector<double>(I));
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t i = 0; i < I; ++i) lp.constraints[j][i] = -abs_pow(dot(cons[i], atoms[j]), p);
    // Ties between equally cheap measures go to the generator directions, so a single
    // generator gets its exact point mass instead of a mixture with the same barycenter.
    lp.rhs.assign(J, -(1.0 + 1e-10));
    for (std::size_t j : generator_atoms)
      if (j < J) lp.rhs[j] = -1.0;
    LpSolution sol;
    try {
      sol = lp_solve(lp);
    } catch (const Unbounded&) {
      throw DegenerateGrid();
    }
    nu = sol.duals;
    mass = 0.0;
    for (double v : nu) mass += v;
  };
  solve();

  // Cutting planes: locally maximize f / f_mu from the worst sampled functionals and add
  // them as constraints until no ratio exceeds the LP constant.
  Rng rng = make_rng(config.seed, 4);
  auto weights_of = [&] {
    std::vector<double> w(nu);
    for (double& v : w) v /= mass;
    return w;
  };
  auto ratio_of = [&](const std::vector<double>& w, const Functional& y) {
    const double fy = std::abs(evaluate(e, y));
    if (fy <= floor) return 0.0;
    const double fm = fmu_pow(atoms, w, y, p);
    if (fm <= 0.0) return std::numeric_limits<double>::infinity();
    return fy / std::pow(fm, 1.0 / p);
  };
  double worst_ratio = 0.0;
  for (std::size_t round = 0; round <= config.cut_rounds; ++round) {
    if (!(mass > 0.0)) throw DegenerateGrid();
    const double C = std::pow(mass, 1.0 / p);
    const auto w = weights_of();
    std::vector<std::pair<double, Functional>> probes;
    for (const auto& y : cons) probes.emplace_back(ratio_of(w, y), y);
    for (auto& y : dual_sphere_sample(space, config.cut_samples, rng())) {
      const double r = ratio_of(w, y);
      if (r > 0.0) probes.emplace_back(r, std::move(y));
    }
    std::stable_sort(probes.begin(), probes.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    if (probes.size() > config.cuts_per_round) probes.resize(config.cuts_per_round);
    worst_ratio = 0.0;
    std::vector<Functional> cuts;
    for (auto& [r0, y] : probes) {
      if (!std::isfinite(r0)) throw DegenerateGrid();
      double r = 0.0;
      auto z = ascend_ratio(space, e, atoms, w, p, floor, y, r);
      if (!std::isfinite(r)) throw DegenerateGrid();
      worst_ratio = std::max({worst_ratio, r0, r});
      if (r > C * (1.0 + 1e-9)) cuts.push_back(std::move(z));
    }
    if (cuts.empty() || round == config.cut_rounds) break;
    for (auto& z : cuts) cons.push_back(std::move(z));
    solve();
  }

  cert.constraints_used = cons.size();
  cert.weights = weights_of();
  cert.C = std::max(std::pow(mass, 1.0 / p), worst_ratio);
  return cert;
}

double f_mu(const DominationCertificate& cert, std::span<const double> xstar) {
  return std::pow(fmu_pow(cert.atoms, cert.weights, xstar, cert.p), 1.0 / cert.p);
}

LatticeExpr f_mu_expr(const DominationCertificate& cert) {
  if (cert.atoms.empty()) throw InvalidArgument("f_mu_expr: certificate has no atoms");
  std::vector<LatticeExpr> children;
  for (std::size_t j = 0; j < cert.atoms.size(); ++j)
    if (cert.weights[j] > 0.0)
      children.push_back(LatticeExpr::scale(std::pow(cert.weights[j], 1.0 / cert.p), LatticeExpr::gen(cert.atoms[j])));
  if (children.empty()) return LatticeExpr::zero(cert.atoms[0].size());
  return LatticeExpr::powsum(cert.p, std::move(children));
}

CertificateReport verify_certificate(const SpaceModel& space, const LatticeExpr& e, const DominationCertificate& cert,
                                     std::size_t fresh_samples, std::uint64_t seed, double fmu_tolerance,
                                     const SearchConfig& search) {
  if (cert.atoms.size() != cert.weights.size()) throw InvalidArgument("verify_certificate: atoms/weights differ");
  CertificateReport rep;
  rep.samples = fresh_samples;
  rep.fmu_tolerance = fmu_tolerance;

  for (double w : cert.weights) rep.weight_sum += w;
  rep.weights_ok = std::abs(rep.weight_sum - 1.0) <= 1e-10 &&
                   std::all_of(cert.weights.begin(), cert.weights.end(), [](double w) { return w >= 0.0; });
  for (const auto& z : cert.atoms) {
    if (z.size() != space.dim()) throw DimensionMismatch(space.dim(), z.size());
    rep.max_atom_norm = std::max(rep.max_atom_norm, space.norm(z));
  }
  rep.atoms_ok = rep.max_atom_norm <= 1.0 + 1e-10;

  // Fresh functionals: random Gaussian directions scaled to the dual sphere.
  Rng rng = make_rng(seed, 0xf7e5);
  std::normal_distribution<double> normal;
  rep.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < fresh_samples; ++s) {
    Functional y(space.dim());
    for (double& c : y) c = normal(rng);
    const double n = space.dual_norm(y);
    if (n == 0.0) continue;
    for (double& c : y) c /= n;
    rep.max_excess = std::max(rep.max_excess, std::abs(evaluate(e, y)) - cert.C * f_mu(cert, y));
  }
  if (fresh_samples == 0) rep.max_excess = 0.0;
  rep.domination_ok = rep.max_excess <= 1e-6;

  if (cert.atoms.empty()) {
    rep.fmu_norm = 0.0;
  } else {
    const auto fm = f_mu_expr(cert);
    SearchConfig c = search;
    c.seed = derive_seed(seed, 0xf00);
    rep.fmu_norm = pq_norm_lower(space, fm, cert.p, cert.p, c).lower;
  }
  rep.fmu_ok = rep.fmu_norm <= 1.0 + fmu_tolerance;
  return rep;
}

void attach_upper(NormEstimate& estimate, const DominationCertificate& cert) {
  if (cert.p != estimate.p || estimate.q != estimate.p)
    throw InvalidArgument("attach_upper: certificate exponent differs from the estimate's (p, p)");
  estimate.upper = cert.C;
}

}  // namespace fbllab
