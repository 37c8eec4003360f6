// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero only for
// failures outside kKnownFailures (criteria whose literal statement cannot hold; see README).

#include <Eigen/Dense>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "fbllab/homs.hpp"
#include "fbllab/pietsch.hpp"
#include "fbllab/rng.hpp"
#include "fbllab/summing.hpp"

using namespace fbllab;

namespace {

const std::set<int> kKnownFailures{4};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Vector gaussian(Rng& rng, std::size_t d) {
  std::normal_distribution<double> normal;
  Vector v(d);
  for (double& c : v) c = normal(rng);
  return v;
}

SpaceModel hexagon() { return SpaceModel::polytope({{1, 0}, {-1, 0}, {0.5, 0.8}, {-0.5, -0.8}, {-0.5, 0.8}, {0.5, -0.8}}); }

Outcome isometry() {
  int bad = 0, runs = 0;
  double worst = 0.0;
  for (double r : {1.0, 2.0, kInf}) {
    const auto sp = SpaceModel::lp(3, r);
    Rng rng = make_rng(1, static_cast<std::uint64_t>(std::isinf(r) ? 99 : r));
    for (int i = 0; i < 50; ++i) {
      Vector x(3);
      for (double& c : x) c = uniform(rng, -1, 1);
      for (double p : {1.0, 1.5, 2.0, 3.0}) {
        SearchConfig c;
        c.seed = static_cast<std::uint64_t>(i);
        const double lower = pq_norm_lower(sp, LatticeExpr::gen(x), p, p, c).lower;
        const double n = sp.norm(x);
        const double rel = std::abs(lower - n) / n;
        worst = std::max(worst, rel);
        ++runs;
        if (rel > 0.005) ++bad;
      }
    }
  }
  return {bad == 0, fmt("%.0f/%.0f runs within 0.5%% of ||x||, worst relative gap %.3g", runs - bad, runs, worst)};
}

Outcome oracle_agreement() {
  const std::vector<SpaceModel> spaces{SpaceModel::lp(2, 1), SpaceModel::lp(2, 2), SpaceModel::lp(2, kInf), hexagon(),
                                       SpaceModel::weighted_lp(2, 2, {1, 0.5})};
  const double pq[5][2] = {{1, 1}, {2, 2}, {2, 1}, {3, 2}, {1.5, 1}};
  int bad = 0;
  double min_gap = 1e300, max_ratio = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto& sp = spaces[i % 5];
    const double p = pq[(i / 5 + i) % 5][0], q = pq[(i / 5 + i) % 5][1];
    Rng rng = make_rng(42, static_cast<std::uint64_t>(i));
    const auto e = random_lattice_expr(2, 3, 3, rng);
    SearchConfig c;
    c.seed = static_cast<std::uint64_t>(i);
    const double lower = pq_norm_lower(sp, e, p, q, c).lower;
    const double oracle = pq_norm_bruteforce(sp, e, p, q, 0.01, 2);
    min_gap = std::min(min_gap, lower - oracle);
    if (oracle > 0) max_ratio = std::max(max_ratio, lower / oracle);
    if (!(lower >= oracle - 1e-8 && lower <= oracle * 1.05)) {
      ++bad;
      std::printf("    case %d (%s, p=%g, q=%g): lower %.12g oracle %.12g\n", i, sp.describe().c_str(), p, q, lower,
                  oracle);
    }
  }
  return {bad == 0, fmt("%.0f/20 expressions: min(lower - oracle) = %.3g, max lower/oracle = %.6f", 20 - bad, min_gap,
                        max_ratio)};
}

Outcome extension_bound() {
  const std::vector<SpaceModel> spaces{SpaceModel::lp(2, 1), SpaceModel::lp(2, 2), SpaceModel::lp(3, kInf), hexagon(),
                                       SpaceModel::weighted_lp(3, 1.5, {1, 2, 0.5})};
  int pooled = 0, lower_bad = 0, uppers = 0, upper_bad = 0;
  double worst_lower = -1e300, worst_upper = -1e300;
  for (int i = 0; i < 100; ++i) {
    const auto& sp = spaces[i % 5];
    const double p = std::array{1.0, 2.0, 3.0, 1.5}[i % 4];
    Rng rng = make_rng(3, static_cast<std::uint64_t>(i));
    const auto e = random_lattice_expr(sp.dim(), 3, 3, rng);
    std::vector<Functional> fs;
    const std::size_t len = 1 + i % 4;
    for (std::size_t k = 0; k < len; ++k) fs.push_back(gaussian(rng, sp.dim()));
    const FunctionalTuple t(fs);
    const auto ext = extend_to_lp(sp, generators_of(e), t, p);
    SearchConfig c;
    c.seed = static_cast<std::uint64_t>(i);
    c.pool = {t};
    auto est = pq_norm_lower(sp, e, p, p, c);
    if (i % 5 == 0) {
      PietschConfig pc;
      pc.seed = static_cast<std::uint64_t>(i);
      pc.witness_tuples = {est.witness, t};
      attach_upper(est, pietsch_certificate(sp, e, p, pc));
    }
    const auto rep = verify_extension_bound(sp, e, ext, est);
    if (rep.in_pool) {
      ++pooled;
      worst_lower = std::max(worst_lower, rep.rho - rep.lower);
      if (!rep.lower_ok) ++lower_bad;
    }
    if (rep.upper) {
      ++uppers;
      worst_upper = std::max(worst_upper, rep.rho - *rep.upper);
      if (!rep.upper_ok) ++upper_bad;
    }
  }
  return {pooled == 100 && lower_bad == 0 && upper_bad == 0,
          fmt("%.0f pooled pairs, max(rho - lower) = %.3g; %.0f Pietsch uppers, max(rho - C) = %.3g", pooled,
              worst_lower, uppers, worst_upper)};
}

Outcome inclusion_ordering(std::string& info) {
  const std::vector<SpaceModel> spaces{SpaceModel::lp(2, 1), SpaceModel::lp(2, 2), SpaceModel::lp(2, kInf), hexagon()};
  const std::vector<IndexPair> pairs{{4, 2}, {2, 2}, {2, 1}};
  int a_bad = 0, b_bad = 0, rev_bad = 0;
  double worst_a = -1e300, worst_b = -1e300;
  for (int i = 0; i < 20; ++i) {
    const auto& sp = spaces[i % 4];
    Rng rng = make_rng(4, static_cast<std::uint64_t>(i));
    const auto e = random_lattice_expr(2, 3, 3, rng);
    SearchConfig c;
    c.seed = static_cast<std::uint64_t>(i);
    const auto est = shared_pool_estimates(sp, e, pairs, c);
    const double n42 = est[0].lower, n22 = est[1].lower, n21 = est[2].lower;
    worst_a = std::max(worst_a, n42 - n22);
    worst_b = std::max(worst_b, n22 - n21);
    if (n42 > n22 + 1e-8) ++a_bad;
    if (n22 > n21 + 1e-8) ++b_bad;
    if (n21 > n22 + 1e-8) ++rev_bad;
  }
  info = fmt("reverse direction ||f||_{2,1} <= ||f||_{2,2}: %.0f/20 hold", 20 - rev_bad);
  return {a_bad == 0 && b_bad == 0,
          fmt("||f||_{4,2} <= ||f||_{2,2}: %.0f/20 (max excess %.3g); ||f||_{2,2} <= ||f||_{2,1}: %.0f/20 (max excess %.3g)",
              20 - a_bad, worst_a, 20 - b_bad, worst_b)};
}

Outcome divergence() {
  const auto sp = SpaceModel::lp(2, 2);
  Rng rng = make_rng(5, 0);
  const auto e = random_lattice_expr(2, 3, 3, rng);
  double worst = 0.0;
  std::string slopes;
  for (const auto& [p, q] : {std::pair{1.0, 2.0}, std::pair{2.0, 4.0}}) {
    SearchConfig c;
    c.seed = 5;
    const auto rep = divergence_exponent(sp, e, p, q, 256, c);
    worst = std::max(worst, std::abs(rep.slope - (1 / p - 1 / q)));
    slopes += fmt("(%g,%g) slope %.12g; ", p, q, rep.slope);
  }
  return {worst <= 1e-6, slopes + fmt("max |slope - (1/p - 1/q)| = %.3g", worst)};
}

Outcome pietsch() {
  const std::vector<SpaceModel> spaces{SpaceModel::lp(2, 1),  SpaceModel::lp(2, 2), SpaceModel::lp(3, kInf),
                                       SpaceModel::lp(3, 2),  hexagon(),           SpaceModel::weighted_lp(3, 1.5, {1, 2, 0.5})};
  const double ps[] = {1, 1.5, 2, 3};
  int bad = 0;
  double worst_excess = -1e300, worst_fmu = 0.0, worst_gap = -1e300;
  for (int i = 0; i < 20; ++i) {
    const auto& sp = spaces[i % 6];
    const double p = ps[i % 4];
    Rng rng = make_rng(9, static_cast<std::uint64_t>(i));
    const auto e = LatticeExpr::abs(random_lattice_expr(sp.dim(), 3, 3, rng));
    SearchConfig c;
    c.seed = static_cast<std::uint64_t>(i);
    const auto est = pq_norm_lower(sp, e, p, p, c);
    PietschConfig pc;
    pc.seed = static_cast<std::uint64_t>(i);
    pc.witness_tuples = {est.witness};
    const auto cert = pietsch_certificate(sp, e, p, pc);
    const auto rep = verify_certificate(sp, e, cert, 10000, static_cast<std::uint64_t>(i) + 100);
    worst_excess = std::max(worst_excess, rep.max_excess);
    worst_fmu = std::max(worst_fmu, rep.fmu_norm);
    worst_gap = std::max(worst_gap, est.lower - cert.C);
    if (!(rep.ok() && rep.fmu_norm <= 1.02 && cert.C >= est.lower - 1e-6)) ++bad;
  }
  double worst_point = 0.0;
  for (const auto& sp : spaces) {
    Rng rng = make_rng(10, sp.dim());
    Vector x(sp.dim());
    for (double& v : x) v = uniform(rng, 0.1, 1.0);
    const auto cert = pietsch_certificate(sp, LatticeExpr::gen(x), 2.0);
    worst_point = std::max(worst_point, std::abs(cert.C - sp.norm(x)));
  }
  return {bad == 0 && worst_point <= 1e-9,
          fmt("%.0f/20 certificates verified (max excess %.3g, max f_mu norm %.6f, max(lower - C) %.3g); ", 20 - bad,
              worst_excess, worst_fmu, worst_gap) +
              fmt("point masses |C - ||x||| <= %.3g", worst_point)};
}

Outcome disjointification() {
  Rng rng = make_rng(7, 0);
  int bad = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t m = 2 + t % 4;
    std::vector<Vector> ys(m, Vector(6));
    for (auto& y : ys)
      for (double& v : y) v = uniform01(rng) < 0.3 ? 0.0 : uniform01(rng);
    const auto xs = disjointify(ys);
    bool ok = true;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < 6; ++k) ok = ok && xs[i][k] >= 0.0 && xs[i][k] <= ys[i][k];
      for (std::size_t j = i + 1; j < m; ++j)
        for (std::size_t k = 0; k < 6; ++k) ok = ok && std::min(xs[i][k], xs[j][k]) == 0.0;
    }
    ok = ok && disjointify(xs) == xs;
    if (!ok) ++bad;
  }
  return {bad == 0, fmt("%.0f/500 tuples disjoint, dominated and fixed by a second pass", 500 - bad)};
}

Outcome commutation() {
  int bad = 0;
  for (int t = 0; t < 200; ++t) {
    Rng rng = make_rng(8, static_cast<std::uint64_t>(t));
    const std::size_t d = 2 + t % 3;
    const auto sp = SpaceModel::lp(d, 2);
    const double r = std::array{1.0, 1.5, 2.0, 3.0, kInf}[t % 5];
    std::vector<LatticeExpr> es;
    for (int k = 0; k < 3; ++k) es.push_back(random_lattice_expr(d, 3, 2, rng));
    const auto h = apply_calculus(r, es);
    std::vector<Functional> fs;
    for (int k = 0; k < 4; ++k) fs.push_back(gaussian(rng, d));
    std::vector<Vector> gens;
    for (const auto& e : es)
      for (const auto& g : generators_of(e)) gens.push_back(g);
    const auto ext = extend_to_lp(sp, gens, FunctionalTuple(fs), 2.0);
    const auto lhs = apply_hom(ext, h);
    std::vector<Vector> images;
    for (const auto& e : es) images.push_back(apply_hom(ext, e));
    bool same = lhs.size() == fs.size();
    for (std::size_t k = 0; k < fs.size() && same; ++k) {
      std::vector<double> column;
      for (const auto& im : images) column.push_back(im[k]);
      same = lhs[k] == powsum_value(r, column);
    }
    if (!same) ++bad;
  }
  return {bad == 0, fmt("%.0f/200 pairs bit-identical", 200 - bad)};
}

Outcome dconvexity() {
  std::size_t violations = 0;
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    const auto rep = dconvexity_check(p, 1, 1.0, SpaceModel::lp(4, p), 10000, 3, static_cast<std::uint64_t>(p * 10));
    violations += rep.violations;
  }
  const auto ce = dconvexity_check(2.0, 1, 1.0, SpaceModel::lp(4, 1), 100, 2, 11);
  const bool found = ce.first_violation.has_value();
  return {violations == 0 && found,
          fmt("l_p^4 with g = l_p-sum: %.0f violations in 4 x 10^4 samples; l_1 lattice with g = l_2-sum: ", violations) +
              (found ? fmt("violation at sample %.0f (ratio %.4f)", *ce.first_violation, ce.worst_ratio)
                     : std::string("no violation in 100 samples"))};
}

Outcome weak_exactness() {
  Rng rng = make_rng(10, 0);
  int col_bad = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 2 + t % 4;
    const double q = std::array{1.0, 1.5, 2.0, 3.0}[t % 4];
    std::vector<Functional> fs;
    for (int k = 0; k < 1 + t % 5; ++k) fs.push_back(gaussian(rng, d));
    double best = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      std::vector<double> col;
      for (const auto& f : fs) col.push_back(f[i]);
      best = std::max(best, powsum_value(q, col));
    }
    if (weak_q_norm(SpaceModel::lp(d, 1), fs, q).value != best) ++col_bad;
  }
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 2 + t % 3;
    const std::size_t n = 1 + t % 6;
    std::vector<Functional> fs;
    Eigen::MatrixXd m(n, d);
    for (std::size_t k = 0; k < n; ++k) {
      fs.push_back(gaussian(rng, d));
      for (std::size_t i = 0; i < d; ++i) m(k, i) = fs[k][i];
    }
    const double sigma = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
    worst = std::max(worst, std::abs(weak_q_norm(SpaceModel::lp(d, 2), fs, 2.0).value - sigma));
  }
  return {col_bad == 0 && worst <= 1e-8,
          fmt("l_1 columns: %.0f/100 bit-exact; l_2, q = 2: max |weak - sigma_max| = %.3g over 100 tuples", 100 - col_bad,
              worst)};
}

std::string read_command(const std::string& cmd, int& status) {
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    status = -1;
    return out;
  }
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  status = pclose(pipe);
  return out;
}

Outcome determinism() {
  const std::string cmd = std::string(FBLLAB_CLI) + " selftest --seed 7";
  int s1 = 0, s2 = 0;
  const auto a = read_command(cmd, s1);
  const auto b = read_command(cmd, s2);
  return {s1 == 0 && s2 == 0 && !a.empty() && a == b,
          fmt("two runs: %.0f and %.0f bytes, exit %.0f/%.0f, ", a.size(), b.size(), s1, s2) +
              (a == b ? "identical" : "different")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome(std::string&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "isometry identity", [](std::string&) { return isometry(); }},
      {2, "oracle agreement", [](std::string&) { return oracle_agreement(); }},
      {3, "extension bound", [](std::string&) { return extension_bound(); }},
      {4, "inclusion ordering", [](std::string& info) { return inclusion_ordering(info); }},
      {5, "divergence exponent", [](std::string&) { return divergence(); }},
      {6, "Pietsch certificates", [](std::string&) { return pietsch(); }},
      {7, "disjointification", [](std::string&) { return disjointification(); }},
      {8, "homomorphism commutation", [](std::string&) { return commutation(); }},
      {9, "D-convexity fuzz", [](std::string&) { return dconvexity(); }},
      {10, "weak-norm exactness", [](std::string&) { return weak_exactness(); }},
      {11, "determinism", [](std::string&) { return determinism(); }},
  };
  int unexpected = 0;
  std::vector<int> known;
  for (const auto& c : criteria) {
    std::string info;
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = c.run(info);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s  %s: %s [%.1f s]\n", c.id, out.pass ? "PASS" : "FAIL", c.name, out.detail.c_str(), secs);
    if (!info.empty()) std::printf("             info  %s\n", info.c_str());
    std::fflush(stdout);
    if (!out.pass) {
      if (kKnownFailures.count(c.id))
        known.push_back(c.id);
      else
        ++unexpected;
    }
  }
  for (int id : known) std::printf("criterion %d fails as documented (known defect in its statement)\n", id);
  return unexpected == 0 ? 0 : 1;
}
