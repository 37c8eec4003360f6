#pragma once

#include <vector>

namespace fbllab {

// minimize objective . x  subject to  constraints * x >= rhs,  x >= 0.
struct LpProblem {
  std::vector<double> objective;
  std::vector<std::vector<double>> constraints;
  std::vector<double> rhs;

  std::size_t variables() const { return objective.size(); }
  std::size_t rows() const { return rhs.size(); }
  void validate() const;
};

struct LpSolution {
  double value = 0.0;
  std::vector<double> x;
  // Multipliers y >= 0 of the >= constraints (optimal for the dual
  // max rhs . y s.t. constraints^T y <= objective).
  std::vector<double> duals;
  std::size_t pivots = 0;
};

// Dense two-phase tableau simplex with Bland's rule. Throws Infeasible or Unbounded.
LpSolution lp_solve(const LpProblem& problem);

}  // namespace fbllab
