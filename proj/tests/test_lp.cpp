#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "fbllab/error.hpp"
#include "fbllab/lp.hpp"
#include "fbllab/rng.hpp"

using namespace fbllab;

namespace {

// Solves the square system a x = b by Gaussian elimination; false when singular.
bool solve_square(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (std::abs(a[piv][c]) < 1e-12) return false;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  x.resize(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return true;
}

// Vertex enumeration: every choice of n tight rows among constraints and x >= 0.
double brute_min(const LpProblem& lp) {
  const std::size_t n = lp.variables();
  std::vector<std::vector<double>> rows = lp.constraints;
  std::vector<double> rhs = lp.rhs;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1;
    rows.push_back(e);
    rhs.push_back(0);
  }
  const std::size_t m = rows.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> pick(n);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
    if (depth == n) {
      std::vector<std::vector<double>> a;
      std::vector<double> b;
      for (auto i : pick) {
        a.push_back(rows[i]);
        b.push_back(rhs[i]);
      }
      std::vector<double> x;
      if (!solve_square(a, b, x)) return;
      for (std::size_t i = 0; i < m; ++i) {
        double s = 0;
        for (std::size_t k = 0; k < n; ++k) s += rows[i][k] * x[k];
        if (s < rhs[i] - 1e-9) return;
      }
      double v = 0;
      for (std::size_t k = 0; k < n; ++k) v += lp.objective[k] * x[k];
      best = std::min(best, v);
      return;
    }
    for (std::size_t i = start; i < m; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_CASE("small LP by hand") {
  LpProblem lp;
  lp.objective = {1, 1};
  lp.constraints = {{1, 2}, {2, 1}};
  lp.rhs = {2, 2};
  const auto s = lp_solve(lp);
  CHECK(s.value == doctest::Approx(4.0 / 3));
  CHECK(s.x[0] == doctest::Approx(2.0 / 3));
  CHECK(s.duals[0] + s.duals[1] == doctest::Approx(2.0 / 3));
}

TEST_CASE("random LPs against vertex enumeration, with strong duality") {
  Rng rng = make_rng(1, 0);
  int solved = 0;
  for (int t = 0; t < 200; ++t) {
    LpProblem lp;
    const std::size_t n = 2 + t % 2, m = 2 + t % 4;
    for (std::size_t k = 0; k < n; ++k) lp.objective.push_back(uniform(rng, 0.1, 2));
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> row;
      for (std::size_t k = 0; k < n; ++k) row.push_back(uniform(rng, -1, 2));
      lp.constraints.push_back(row);
      lp.rhs.push_back(uniform(rng, -1, 2));
    }
    const double brute = brute_min(lp);
    if (std::isinf(brute)) {
      CHECK_THROWS_AS(lp_solve(lp), Infeasible);
      continue;
    }
    const auto s = lp_solve(lp);
    ++solved;
    CHECK(s.value == doctest::Approx(brute).epsilon(1e-9));
    double dual = 0;
    for (std::size_t i = 0; i < m; ++i) {
      CHECK(s.duals[i] >= -1e-12);
      dual += s.duals[i] * lp.rhs[i];
    }
    CHECK(dual == doctest::Approx(s.value).epsilon(1e-9));
    for (std::size_t k = 0; k < n; ++k) {
      double col = 0;
      for (std::size_t i = 0; i < m; ++i) col += s.duals[i] * lp.constraints[i][k];
      CHECK(col <= lp.objective[k] + 1e-9);
    }
  }
  CHECK(solved > 100);
}

TEST_CASE("infeasible and unbounded") {
  LpProblem inf;
  inf.objective = {1};
  inf.constraints = {{-1}};
  inf.rhs = {1};
  CHECK_THROWS_AS(lp_solve(inf), Infeasible);
  LpProblem unb;
  unb.objective = {-1, 0};
  unb.constraints = {{1, -1}};
  unb.rhs = {0};
  CHECK_THROWS_AS(lp_solve(unb), Unbounded);
}

TEST_CASE("degenerate LP terminates") {
  // Many tied ratios; Bland's rule must not cycle.
  LpProblem lp;
  lp.objective = {1, 1, 1};
  for (int i = 0; i < 12; ++i) {
    lp.constraints.push_back({1, 1, 0});
    lp.rhs.push_back(1);
  }
  lp.constraints.push_back({0, 1, 1});
  lp.rhs.push_back(1);
  CHECK(lp_solve(lp).value == doctest::Approx(1));
}
