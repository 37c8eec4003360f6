#pragma once

// Finite-dimensional normed spaces E with their duals. Vectors of E and functionals
// on E are both plain coordinate arrays; the pairing is the coordinate dot product.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace fbllab {

using Vector = std::vector<double>;
using Functional = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);

enum class SpaceKind { WeightedLp, Polytope };

// Exponent value standing for r = infinity.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Conjugate exponent with 1/inf = 0.
double conjugate_exponent(double r);

class SpaceModel {
 public:
  // ||x|| = (sum_i |w_i x_i|^r)^(1/r), or max_i w_i |x_i| when r = inf.
  static SpaceModel weighted_lp(std::size_t dim, double r, std::vector<double> weights = {});
  static SpaceModel lp(std::size_t dim, double r) { return weighted_lp(dim, r); }
  // Unit ball = conv(vertices). The vertex set must be symmetric and span R^dim.
  static SpaceModel polytope(std::vector<Vector> vertices);

  static SpaceModel from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;

  std::size_t dim() const { return dim_; }
  SpaceKind kind() const { return kind_; }
  double r() const { return r_; }
  const std::vector<double>& weights() const { return weights_; }
  // Polytope only: the given vertices, and the vertices of the dual ball.
  const std::vector<Vector>& vertices() const { return vertices_; }
  const std::vector<Vector>& dual_vertices() const { return dual_vertices_; }

  double norm(std::span<const double> x) const;
  double dual_norm(std::span<const double> xstar) const;

  // The model of E*. Dual of weighted l_r is weighted l_r' with reciprocal weights;
  // dual of a polytope ball is the polytope on its dual vertices.
  SpaceModel dual() const;

  // A point of B_E maximizing <y, x>. Deterministic; ties resolve to the first maximizer.
  Vector linear_maximizer(std::span<const double> y) const;

  // Exact vertex list of B_E when the ball is a polytope with at most `budget` vertices,
  // else nullptr. The list is computed once at construction.
  const std::vector<Vector>* exact_extreme_points(std::size_t budget) const;

  std::string describe() const;

 private:
  SpaceModel() = default;
  void check_dim(std::size_t n) const;

  std::size_t dim_ = 0;
  SpaceKind kind_ = SpaceKind::WeightedLp;
  double r_ = 2.0;
  std::vector<double> weights_;
  std::vector<Vector> vertices_;
  std::vector<Vector> dual_vertices_;
  std::vector<Vector> extreme_points_;  // empty when not enumerable
};

double norm(const SpaceModel& space, std::span<const double> x);
double dual_norm(const SpaceModel& space, std::span<const double> xstar);

struct ExtremePoints {
  std::vector<Vector> points;
  bool exact = false;
};

// Exact extreme points for polytope, l_1 and l_inf (the latter only when 2^dim <= budget);
// otherwise `budget` quasi-uniform points of the unit sphere.
ExtremePoints ball_extreme_points(const SpaceModel& space, std::size_t budget,
                                  std::uint64_t seed = 0);

// `count` directions from a shifted Halton sequence (equispaced angles when dim = 2),
// scaled onto the unit sphere of `space`.
std::vector<Vector> sphere_sample(const SpaceModel& space, std::size_t count, std::uint64_t seed);

// Same directions scaled to unit dual norm.
std::vector<Functional> dual_sphere_sample(const SpaceModel& space, std::size_t count,
                                           std::uint64_t seed);

struct CachedWeakNorm {
  double q = 0.0;
  double value = 0.0;
  Vector witness;
};

struct FunctionalTuple {
  std::vector<Functional> functionals;
  std::optional<CachedWeakNorm> cached_weak;

  FunctionalTuple() = default;
  explicit FunctionalTuple(std::vector<Functional> fs) : functionals(std::move(fs)) {}

  std::size_t size() const { return functionals.size(); }
  bool empty() const { return functionals.empty(); }
  FunctionalTuple scaled(double lambda) const;
};

struct WeakNormOptions {
  std::size_t restarts = 32;
  double rel_tol = 1e-13;
  std::size_t max_iterations = 2000;
  std::uint64_t seed = 0x5eed;
  std::size_t extreme_budget = 4096;
  // Extra starting points for the ascent (ignored when the ball is handled exactly).
  std::vector<Vector> warm_starts;
  // Also start from the linear maximizer of every functional in the tuple.
  bool functional_starts = true;
};

struct WeakNorm {
  double value = 0.0;
  Vector witness;
  bool exact = false;
};

// sup over x in B_E of (sum_k |x_k*(x)|^q)^(1/q). The objective is convex in x, so the
// maximum sits at an extreme point: enumerated when the ball is a small polytope,
// otherwise found by multi-start linear-maximizer ascent.
WeakNorm weak_q_norm(const SpaceModel& space, std::span<const Functional> tuple, double q,
                     const WeakNormOptions& options = {});
WeakNorm weak_q_norm(const SpaceModel& space, const FunctionalTuple& tuple, double q,
                     const WeakNormOptions& options = {});

// Fills tuple.cached_weak (recomputing if q differs) and returns the value.
double ensure_weak_norm(const SpaceModel& space, FunctionalTuple& tuple, double q,
                        const WeakNormOptions& options = {});

// Evaluates (sum_k |x_k*(x)|^q)^(1/q).
double lq_of_pairings(std::span<const Functional> tuple, std::span<const double> x, double q);

}  // namespace fbllab
