#pragma once

// Estimators for the (p,q)-summing norm of a positively homogeneous f on E*,
//
//   ||f||_{p,q} = sup { (sum_k |f(x_k*)|^p)^(1/p) : weak_q(x_1*,...,x_n*) <= 1 },
//
// its diagonal ||f||_p = ||f||_{p,p}, the sup-norm over B_{E*}, and checks of the
// comparison results between them.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fbllab/expr.hpp"
#include "fbllab/space.hpp"

namespace fbllab {

struct SearchConfig {
  std::uint64_t seed = 0;
  // Local searches per tuple length.
  std::size_t restarts = 8;
  // Largest tuple length of the doubling schedule 1, 2, 4, ...
  std::size_t max_length = 16;
  // Doubling stops once it improves the estimate by less than this factor.
  double rel_tol = 1e-3;
  // Dual-sphere directions scored when seeding singletons.
  std::size_t candidates = 256;
  // Best singleton candidates refined by local search.
  std::size_t local_starts = 6;
  double min_step = 1e-9;
  std::size_t max_evaluations = 40000;
  // Externally supplied tuples, rescored and competing for the witness.
  std::vector<FunctionalTuple> pool;
  // Weak-norm settings for the final (reported) scores.
  WeakNormOptions weak;
};

struct SearchMetadata {
  std::uint64_t seed = 0;
  std::size_t restarts = 0;
  std::vector<std::size_t> schedule;
  std::vector<double> stage_values;
  std::size_t evaluations = 0;
};

struct NormEstimate {
  double p = 1.0;
  double q = 1.0;
  // Certified lower bound: the score of `witness`.
  double lower = 0.0;
  // Tuple normalized to weak q-norm 1 attaining `lower`.
  FunctionalTuple witness;
  // Set only by an explicit attach of an upper estimate (Pietsch certificate).
  std::optional<double> upper;
  SearchMetadata method;
  // Normalized tuples whose scores entered `lower`, external pool first.
  std::vector<FunctionalTuple> pool;

  // True when `tuple` is a positive multiple of a pooled tuple (relative tol).
  bool in_pool(const SpaceModel& space, const FunctionalTuple& tuple, double tol = 1e-12) const;
};

// (sum_k |f(x_k*)|^p)^(1/p) / weak_q(x_1*,...,x_n*); 0 for a tuple of weak norm 0.
double tuple_score(const SpaceModel& space, const LatticeExpr& e, std::span<const Functional> tuple,
                   double p, double q, const WeakNormOptions& weak = {});

// The tuple divided by its weak q-norm.
FunctionalTuple normalize_tuple(const SpaceModel& space, const FunctionalTuple& tuple, double q,
                                const WeakNormOptions& weak = {});

NormEstimate pq_norm_lower(const SpaceModel& space, const LatticeExpr& e, double p, double q,
                           const SearchConfig& config = {});

// Exhaustive grid oracle: max score over every tuple of length <= max_len whose
// functionals lie on the grid of step grid_step in [-R, R]^dim, R = max_i ||e_i||.
// Guard: dim <= 2, max_len <= 3.
double pq_norm_bruteforce(const SpaceModel& space, const LatticeExpr& e, double p, double q,
                          double grid_step, std::size_t max_len);

struct SupNorm {
  double value = 0.0;
  Functional witness;
  // Always false: f is only piecewise smooth, so the search is a lower estimate.
  bool exact = false;
};

SupNorm sup_norm(const SpaceModel& space, const LatticeExpr& e, const SearchConfig& config = {});

struct IndexPair {
  double p;
  double q;
};

// Independent searches for every index pair, then every estimate rescored on the union
// of all witnesses (plus their inclusion transforms toward smaller p).
std::vector<NormEstimate> shared_pool_estimates(const SpaceModel& space, const LatticeExpr& e,
                                                std::span<const IndexPair> pairs, const SearchConfig& config = {});

// x_k* -> |f(x_k*)|^((p_from - p_to)/p_to) x_k*: carries a (p_from, q_from) tuple to a
// (p_to, q_to) tuple scoring at least as high when the inclusion hypotheses hold.
FunctionalTuple inclusion_transform(const LatticeExpr& e, const FunctionalTuple& tuple, double p_to,
                                    double p_from);

struct InclusionReport {
  IndexPair first;   // (p1, q1)
  IndexPair second;  // (p2, q2)
  NormEstimate first_estimate;
  NormEstimate second_estimate;
  double tolerance = 1e-8;
  // estimate(p2, q2) <= estimate(p1, q1) + tolerance
  bool ok = false;
};

// Requires q_j <= p_j, p1 <= p2, q1 <= q2 and 1/q1 - 1/p1 <= 1/q2 - 1/p2.
InclusionReport inclusion_check(const SpaceModel& space, const LatticeExpr& e, IndexPair first,
                                IndexPair second, const SearchConfig& config = {}, double tolerance = 1e-8);

struct DivergenceReport {
  double p = 1.0;
  double q = 1.0;
  double slope = 0.0;
  double expected = 0.0;
  Functional probe;
  std::vector<std::size_t> lengths;
  std::vector<double> scores;
};

// Scores the n-fold repetition (x*,...,x*) for n = 1, 2, 4, ..., n_max and fits the
// slope of log score against log n. Requires p < q.
DivergenceReport divergence_exponent(const SpaceModel& space, const LatticeExpr& e, double p, double q,
                                     std::size_t n_max, const SearchConfig& config = {});

struct CotypeRow {
  std::size_t dim = 0;
  double max_ratio = 0.0;
  std::vector<double> ratios;
};

struct CotypeTable {
  double p = 1.0;
  double q = 1.0;
  std::vector<CotypeRow> rows;
};

// For E = l_inf^d: max over random lattice-linear f of pq_norm_lower(f) / sup_norm(f).
// Requires p >= q and 1/q - 1/p >= 1/2.
CotypeTable cotype_ratio_experiment(double p, double q, std::span<const std::size_t> dims, std::size_t trials,
                                    const SearchConfig& config = {});

}  // namespace fbllab
