#pragma once

// Lattice homomorphisms into l_p^n induced by functional tuples, the bound they satisfy
// against the free norm, disjointification, and D-convexity checks in concrete lattices.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fbllab/expr.hpp"
#include "fbllab/space.hpp"
#include "fbllab/summing.hpp"

namespace fbllab {

// T: E -> l_p^n, x -> (x_k*(x))_k, and its extension f -> (f(x_k*))_k.
struct LpExtension {
  double p = 2.0;
  FunctionalTuple tuple;
  std::size_t dim = 0;
  // ||T||: the weak p-norm of the tuple, or max_k ||x_k*|| when p = inf.
  double operator_norm = 0.0;
  // T applied to the generators handed to extend_to_lp, in order.
  std::vector<Vector> generator_images;
};

LpExtension extend_to_lp(const SpaceModel& space, std::span<const Vector> generators, const FunctionalTuple& tuple,
                         double p, const WeakNormOptions& weak = {});

// (f(x_1*), ..., f(x_n*)).
Vector apply_hom(const LpExtension& ext, const LatticeExpr& e);

// ||v||_p with p = inf allowed.
double lp_vector_norm(std::span<const double> v, double p);

struct ExtensionReport {
  double image_norm = 0.0;
  double operator_norm = 0.0;
  // ||T^ f|| / ||T|| (0 when ||T|| = 0).
  double rho = 0.0;
  double lower = 0.0;
  std::optional<double> upper;
  bool in_pool = false;
  // rho <= lower + 1e-8, checked only when in_pool.
  bool lower_ok = true;
  // rho <= upper + 1e-6, checked only when an upper estimate exists.
  bool upper_ok = true;
  // max(lower, rho): rho is itself a lower bound for ||f||_p.
  double updated_lower = 0.0;
  bool ok() const { return lower_ok && upper_ok; }
};

ExtensionReport verify_extension_bound(const SpaceModel& space, const LatticeExpr& e, const LpExtension& ext,
                                       const NormEstimate& estimate);

// x^i = /\_{j != i} (y^i - y^i /\ y^j), componentwise in R^d. Throws on negative entries.
std::vector<Vector> disjointify(std::span<const Vector> vectors);

struct DConvexityReport {
  double s = 2.0;  // g = l_s-sum
  int theta = 1;
  double M = 1.0;
  std::size_t samples = 0;
  std::size_t violations = 0;
  // Largest ||g(x_1..x_m)|| / g(||x_1||..||x_m||) seen.
  double worst_ratio = 0.0;
  // Sample index and inputs of the first violation.
  std::optional<std::size_t> first_violation;
  std::vector<Vector> violation_inputs;
  double violation_lhs = 0.0;
  double violation_rhs = 0.0;
};

// Samples m-tuples of nonnegative vectors of the lattice R^d normed by `lattice`
// (disjointified first when theta = 0) and tests
//   ||g(x_1, ..., x_m)|| <= M g(||x_1||, ..., ||x_m||),  g(t) = ||t||_s.
DConvexityReport dconvexity_check(double s, int theta, double M, const SpaceModel& lattice, std::size_t samples,
                                  std::size_t arity, std::uint64_t seed);

}  // namespace fbllab
