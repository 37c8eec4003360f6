#include "fbllab/lp.hpp"

#include <cmath>
#include <limits>

#include "fbllab/error.hpp"

namespace fbllab {

void LpProblem::validate() const {
  if (constraints.size() != rhs.size()) throw InvalidArgument("lp: constraint/rhs row count differ");
  for (const auto& row : constraints) {
    if (row.size() != objective.size()) throw InvalidArgument("lp: ragged constraint row");
    for (double a : row)
      if (!std::isfinite(a)) throw InvalidArgument("lp: non-finite constraint coefficient");
  }
  for (double b : rhs)
    if (!std::isfinite(b)) throw InvalidArgument("lp: non-finite right-hand side");
  for (double c : objective)
    if (!std::isfinite(c)) throw InvalidArgument("lp: non-finite objective coefficient");
}

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-11;

// Row-major tableau. Columns: [original | slack/surplus | artificial | rhs].
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * (cols + 1), 0.0) {}

  double& at(std::size_t i, std::size_t j) { return a_[i * (cols_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * (cols_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, cols_); }
  double rhs(std::size_t i) const { return at(i, cols_); }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t r, std::size_t s, std::vector<double>& cost, double& cost_value) {
    const double inv = 1.0 / at(r, s);
    for (std::size_t j = 0; j <= cols_; ++j) at(r, j) *= inv;
    at(r, s) = 1.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (i == r) continue;
      const double factor = at(i, s);
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(i, j) -= factor * at(r, j);
      at(i, s) = 0.0;
    }
    const double factor = cost[s];
    if (factor != 0.0) {
      for (std::size_t j = 0; j < cols_; ++j) cost[j] -= factor * at(r, j);
      cost_value -= factor * rhs(r);
      cost[s] = 0.0;
    }
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> a_;
};

enum class PhaseResult { Optimal, Unbounded };

// Minimizes the reduced-cost row `cost` (cost_value holds -objective). Columns with
// allowed[j] == false never enter.
PhaseResult run_phase(Tableau& t, std::vector<std::size_t>& basis, std::vector<double>& cost,
                      double& cost_value, const std::vector<bool>& allowed, std::size_t& pivots) {
  for (;;) {
    // Bland: lowest-index improving column.
    std::size_t enter = t.cols();
    for (std::size_t j = 0; j < t.cols(); ++j) {
      if (allowed[j] && cost[j] < -kCostEps) {
        enter = j;
        break;
      }
    }
    if (enter == t.cols()) return PhaseResult::Optimal;

    std::size_t leave = t.rows();
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.rows(); ++i) {
      const double a = t.at(i, enter);
      if (a <= kPivotEps) continue;
      const double ratio = t.rhs(i) / a;
      if (leave == t.rows() || ratio < best_ratio - 1e-12 * (1.0 + std::abs(best_ratio))) {
        best_ratio = ratio;
        leave = i;
      } else if (ratio <= best_ratio + 1e-12 * (1.0 + std::abs(best_ratio)) && basis[i] < basis[leave]) {
        leave = i;
      }
    }
    if (leave == t.rows()) return PhaseResult::Unbounded;
    t.pivot(leave, enter, cost, cost_value);
    basis[leave] = enter;
    ++pivots;
  }
}

}  // namespace

LpSolution lp_solve(const LpProblem& problem) {
  problem.validate();
  const std::size_t n = problem.variables();
  const std::size_t m = problem.rows();

  // Rows with b > 0 get a surplus and an artificial; rows with b <= 0 are negated and
  // start basic on their slack.
  std::vector<std::size_t> artificial_rows;
  for (std::size_t i = 0; i < m; ++i)
    if (problem.rhs[i] > 0.0) artificial_rows.push_back(i);
  const std::size_t n_art = artificial_rows.size();
  const std::size_t cols = n + m + n_art;

  Tableau t(m, cols);
  std::vector<std::size_t> basis(m);
  std::vector<bool> negated(m, false);
  std::size_t next_art = n + m;
  for (std::size_t i = 0; i < m; ++i) {
    const bool positive = problem.rhs[i] > 0.0;
    const double sign = positive ? 1.0 : -1.0;
    negated[i] = !positive;
    for (std::size_t j = 0; j < n; ++j) t.at(i, j) = sign * problem.constraints[i][j];
    t.rhs(i) = sign * problem.rhs[i];
    if (positive) {
      t.at(i, n + i) = -1.0;
      t.at(i, next_art) = 1.0;
      basis[i] = next_art++;
    } else {
      t.at(i, n + i) = 1.0;
      basis[i] = n + i;
    }
  }

  LpSolution solution;
  std::vector<double> cost(cols, 0.0);
  double cost_value = 0.0;

  if (n_art > 0) {
    // Phase 1: minimize the sum of artificials, priced out against the initial basis.
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < n + m) continue;
      for (std::size_t j = 0; j < n + m; ++j) cost[j] -= t.at(i, j);
      cost_value -= t.rhs(i);
    }
    std::vector<bool> allowed(cols, true);
    run_phase(t, basis, cost, cost_value, allowed, solution.pivots);
    double scale = 1.0;
    for (double b : problem.rhs) scale = std::max(scale, std::abs(b));
    if (-cost_value > 1e-9 * scale) throw Infeasible();
    // Drive zero-level artificials out where a structural column can replace them.
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < n + m) continue;
      for (std::size_t j = 0; j < n + m; ++j) {
        if (std::abs(t.at(i, j)) > 1e-9) {
          t.pivot(i, j, cost, cost_value);
          basis[i] = j;
          ++solution.pivots;
          break;
        }
      }
    }
  }

  // Phase 2.
  std::fill(cost.begin(), cost.end(), 0.0);
  for (std::size_t j = 0; j < n; ++j) cost[j] = problem.objective[j];
  cost_value = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t b = basis[i];
    const double cb = b < n ? problem.objective[b] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j < cols; ++j) cost[j] -= cb * t.at(i, j);
    cost_value -= cb * t.rhs(i);
  }
  std::vector<bool> allowed(cols, true);
  for (std::size_t j = n + m; j < cols; ++j) allowed[j] = false;
  if (run_phase(t, basis, cost, cost_value, allowed, solution.pivots) == PhaseResult::Unbounded)
    throw Unbounded();

  solution.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < n) solution.x[basis[i]] = std::max(0.0, t.rhs(i));
  solution.value = 0.0;
  for (std::size_t j = 0; j < n; ++j) solution.value += problem.objective[j] * solution.x[j];
  // Reduced cost of row i's slack/surplus column is the multiplier of constraint i.
  solution.duals.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) solution.duals[i] = std::max(0.0, cost[n + i]);
  return solution;
}

}  // namespace fbllab
