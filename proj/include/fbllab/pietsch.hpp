#pragma once

// Pietsch domination f <= C f_mu, f_mu(x*) = (sum_j mu_j |x*(z_j)|^p)^(1/p), with the
// probability measure mu on B_E found by linear programming.

#include <cstdint>
#include <span>
#include <vector>

#include "fbllab/expr.hpp"
#include "fbllab/space.hpp"
#include "fbllab/summing.hpp"

namespace fbllab {

struct DominationCertificate {
  double p = 2.0;
  double C = 0.0;
  std::vector<Vector> atoms;
  std::vector<double> weights;
  // Constraint functionals in the final LP, and grid size (number of atoms).
  std::size_t constraints_used = 0;
  std::size_t grid = 0;
};

struct PietschConfig {
  // Sphere samples added to the exact extreme points and generator directions.
  std::size_t atom_grid = 64;
  std::size_t constraint_samples = 256;
  // Always constrained, with the weak-norm witness of each tuple added as an atom.
  std::vector<FunctionalTuple> witness_tuples;
  std::vector<Functional> extra_constraints;
  // Rounds of adding the worst sampled functionals back into the LP.
  std::size_t cut_rounds = 20;
  std::size_t cut_samples = 2048;
  std::size_t cuts_per_round = 24;
  std::uint64_t seed = 0;
  WeakNormOptions weak;
};

// Dominates |f|, which also dominates f. The LP value after discretization is an
// estimate of ||f||_p, not a bound in either direction; C is additionally raised to the
// largest ratio f / f_mu seen while checking the certificate.
DominationCertificate pietsch_certificate(const SpaceModel& space, const LatticeExpr& e, double p,
                                          const PietschConfig& config = {});

double f_mu(const DominationCertificate& cert, std::span<const double> xstar);

// f_mu as an expression: powsum(p; mu_1^(1/p) z_1, ..., mu_J^(1/p) z_J).
LatticeExpr f_mu_expr(const DominationCertificate& cert);

struct CertificateReport {
  std::size_t samples = 0;
  // max over samples of |f(x*)| - C f_mu(x*).
  double max_excess = 0.0;
  bool domination_ok = false;
  double weight_sum = 0.0;
  bool weights_ok = false;
  double max_atom_norm = 0.0;
  bool atoms_ok = false;
  // Lower estimate of ||f_mu||_p, which is at most 1 in exact arithmetic.
  double fmu_norm = 0.0;
  double fmu_tolerance = 0.02;
  bool fmu_ok = false;
  bool ok() const { return domination_ok && weights_ok && atoms_ok && fmu_ok; }
};

CertificateReport verify_certificate(const SpaceModel& space, const LatticeExpr& e, const DominationCertificate& cert,
                                     std::size_t fresh_samples, std::uint64_t seed, double fmu_tolerance = 0.02,
                                     const SearchConfig& search = {});

// Records cert.C as the estimate's upper value.
void attach_upper(NormEstimate& estimate, const DominationCertificate& cert);

}  // namespace fbllab
