#include "fbllab/homs.hpp"

#include <algorithm>
#include <cmath>

#include "fbllab/error.hpp"
#include "fbllab/rng.hpp"

namespace fbllab {

LpExtension extend_to_lp(const SpaceModel& space, std::span<const Vector> generators, const FunctionalTuple& tuple,
                         double p, const WeakNormOptions& weak) {
  if (!(p >= 1.0)) throw InvalidArgument("extend_to_lp: need p >= 1");
  for (const auto& f : tuple.functionals)
    if (f.size() != space.dim()) throw DimensionMismatch(space.dim(), f.size());
  LpExtension ext;
  ext.p = p;
  ext.dim = space.dim();
  ext.tuple = FunctionalTuple(tuple.functionals);
  if (std::isinf(p)) {
    for (const auto& f : tuple.functionals) ext.operator_norm = std::max(ext.operator_norm, space.dual_norm(f));
  } else {
    ext.operator_norm = ensure_weak_norm(space, ext.tuple, p, weak);
  }
  for (const auto& x : generators) {
    if (x.size() != space.dim()) throw DimensionMismatch(space.dim(), x.size());
    Vector img;
    img.reserve(tuple.size());
    for (const auto& f : tuple.functionals) img.push_back(dot(f, x));
    ext.generator_images.push_back(std::move(img));
  }
  return ext;
}

Vector apply_hom(const LpExtension& ext, const LatticeExpr& e) {
  if (e.dim() != ext.dim) throw DimensionMismatch(ext.dim, e.dim());
  Vector out;
  out.reserve(ext.tuple.size());
  for (const auto& f : ext.tuple.functionals) out.push_back(evaluate(e, f));
  return out;
}

double lp_vector_norm(std::span<const double> v, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double c : v) m = std::max(m, std::abs(c));
    return m;
  }
  return powsum_value(p, v);
}

ExtensionReport verify_extension_bound(const SpaceModel& space, const LatticeExpr& e, const LpExtension& ext,
                                       const NormEstimate& estimate) {
  ExtensionReport rep;
  const Vector image = apply_hom(ext, e);
  rep.image_norm = lp_vector_norm(image, ext.p);
  rep.operator_norm = ext.operator_norm;
  rep.rho = ext.operator_norm > 0.0 ? rep.image_norm / ext.operator_norm : 0.0;
  rep.lower = estimate.lower;
  rep.upper = estimate.upper;
  rep.in_pool = !ext.tuple.empty() && ext.operator_norm > 0.0 && estimate.in_pool(space, ext.tuple);
  if (rep.in_pool) rep.lower_ok = rep.rho <= estimate.lower + 1e-8;
  if (rep.upper) rep.upper_ok = rep.rho <= *rep.upper + 1e-6;
  rep.updated_lower = std::max(estimate.lower, rep.rho);
  return rep;
}

std::vector<Vector> disjointify(std::span<const Vector> vectors) {
  for (const auto& v : vectors) {
    if (v.size() != vectors[0].size()) throw DimensionMismatch(vectors[0].size(), v.size());
    for (double c : v)
      if (!(c >= 0.0)) throw InvalidArgument("disjointify: vectors must be componentwise nonnegative");
  }
  std::vector<Vector> out(vectors.begin(), vectors.end());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = 0; j < vectors.size(); ++j) {
      if (j == i) continue;
      for (std::size_t c = 0; c < out[i].size(); ++c)
        out[i][c] = std::min(out[i][c], vectors[i][c] - std::min(vectors[i][c], vectors[j][c]));
    }
  }
  return out;
}

DConvexityReport dconvexity_check(double s, int theta, double M, const SpaceModel& lattice, std::size_t samples,
                                  std::size_t arity, std::uint64_t seed) {
  if (!(s >= 1.0)) throw InvalidArgument("dconvexity_check: g must be an l_s-sum with s >= 1");
  if (theta != 0 && theta != 1) throw InvalidArgument("dconvexity_check: theta must be 0 or 1");
  if (!(M >= 1.0)) throw InvalidArgument("dconvexity_check: M must be >= 1");
  if (arity == 0) throw InvalidArgument("dconvexity_check: arity must be positive");
  if (lattice.kind() != SpaceKind::WeightedLp)
    throw InvalidArgument("dconvexity_check: the lattice must be a weighted l_r model");
  DConvexityReport rep;
  rep.s = s;
  rep.theta = theta;
  rep.M = M;
  rep.samples = samples;
  const std::size_t d = lattice.dim();
  for (std::size_t t = 0; t < samples; ++t) {
    Rng rng = make_rng(seed, t);
    std::vector<Vector> xs(arity, Vector(d));
    for (auto& x : xs)
      for (double& c : x) c = uniform01(rng) < 0.3 ? 0.0 : uniform01(rng);
    if (theta == 0) xs = disjointify(xs);

    Vector combined(d);
    std::vector<double> column(arity);
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t k = 0; k < arity; ++k) column[k] = xs[k][c];
      combined[c] = powsum_value(s, column);
    }
    std::vector<double> norms(arity);
    for (std::size_t k = 0; k < arity; ++k) norms[k] = lattice.norm(xs[k]);
    const double lhs = lattice.norm(combined);
    const double rhs = M * powsum_value(s, norms);
    if (rhs > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, lhs / rhs);
    // Relative slack for rounding in the equality cases.
    if (lhs > rhs * (1.0 + 1e-12) + 1e-300) {
      ++rep.violations;
      if (!rep.first_violation) {
        rep.first_violation = t;
        rep.violation_inputs = xs;
        rep.violation_lhs = lhs;
        rep.violation_rhs = rhs;
      }
    }
  }
  return rep;
}

}  // namespace fbllab
