// Exhaustive grid oracle for the (p,q)-summing norm in dimension <= 2. It deliberately
// shares no weak-norm code with the estimator: the weak norm of a grid tuple comes from
// its own vertex table, a closed form, or an angular scan of the unit circle of E.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "fbllab/error.hpp"
#include "fbllab/summing.hpp"

namespace fbllab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::size_t kProbeDirections = 16;

class OracleBall {
 public:
  OracleBall(const SpaceModel& space, double q) : space_(space), q_(q), dim_(space.dim()) {
    if (space.kind() == SpaceKind::Polytope) {
      table_ = space.vertices();
    } else if (space.r() == 1.0) {
      for (std::size_t i = 0; i < dim_; ++i) {
        Vector v(dim_, 0.0);
        v[i] = 1.0 / space.weights()[i];
        table_.push_back(v);
      }
    } else if (std::isinf(space.r())) {
      for (std::size_t mask = 0; mask < (std::size_t{1} << dim_); ++mask) {
        Vector v(dim_);
        for (std::size_t i = 0; i < dim_; ++i) v[i] = ((mask >> i) & 1 ? -1.0 : 1.0) / space.weights()[i];
        table_.push_back(v);
      }
    } else if (space.r() == 2.0 && q == 2.0) {
      spectral_ = true;
    }
    if (table_.empty()) {
      if (dim_ == 1) {
        table_.push_back({1.0 / space.weights()[0]});
      } else {
        for (std::size_t k = 0; k < kProbeDirections; ++k) probes_.push_back(boundary(kPi * k / kProbeDirections));
      }
    }
  }

  bool exact_table() const { return !table_.empty(); }
  // Boundary points used for cheap lower bounds of the weak norm.
  const std::vector<Vector>& probes() const { return table_.empty() ? probes_ : table_; }

  double dual_norm(const Functional& y) const {
    if (!table_.empty()) {
      double m = 0.0;
      for (const auto& v : table_) m = std::max(m, std::abs(dot(y, v)));
      return m;
    }
    // Weighted l_r with 1 < r < inf: conjugate norm of y / w.
    if (space_.r() == 2.0) {
      double s = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) s += (y[i] / space_.weights()[i]) * (y[i] / space_.weights()[i]);
      return std::sqrt(s);
    }
    const double rc = space_.r() / (space_.r() - 1.0);
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += std::pow(std::abs(y[i] / space_.weights()[i]), rc);
    return std::pow(s, 1.0 / rc);
  }

  // (sum_k |y_k(x)|^q)^(1/q) maximized over the unit ball.
  double weak(std::span<const Functional* const> tuple) const {
    if (!table_.empty()) {
      double m = 0.0;
      for (const auto& v : table_) m = std::max(m, objective(tuple, v));
      return std::pow(m, 1.0 / q_);
    }
    if (q_ == 1.0) {
      // sup_x sum_k |y_k(x)| = max over sign patterns of the dual norm of sum_k eps_k y_k.
      double m = 0.0;
      const std::size_t n = tuple.size();
      for (std::size_t mask = 0; mask < (std::size_t{1} << (n - 1)); ++mask) {
        Functional z(*tuple[0]);
        for (std::size_t k = 1; k < n; ++k) {
          const double sgn = (mask >> (k - 1)) & 1 ? -1.0 : 1.0;
          for (std::size_t i = 0; i < z.size(); ++i) z[i] += sgn * (*tuple[k])[i];
        }
        m = std::max(m, dual_norm(z));
      }
      return m;
    }
    if (spectral_) {
      // Largest eigenvalue of sum_k z_k z_k^T with z_k = y_k / w.
      double a = 0.0, b = 0.0, c = 0.0;
      for (const auto* y : tuple) {
        const double z0 = (*y)[0] / space_.weights()[0];
        const double z1 = (*y)[1] / space_.weights()[1];
        a += z0 * z0;
        b += z0 * z1;
        c += z1 * z1;
      }
      const double h = 0.5 * (a - c);
      return std::sqrt(0.5 * (a + c) + std::hypot(h, b));
    }
    constexpr std::size_t kScan = 180;
    std::array<double, kScan> values{};
    for (std::size_t k = 0; k < kScan; ++k) values[k] = objective(tuple, boundary(kPi * k / kScan));
    double best = *std::max_element(values.begin(), values.end());
    // Golden-section refinement around every local maximum of the scan.
    const double h = kPi / kScan;
    for (std::size_t k = 0; k < kScan; ++k) {
      const double prev = values[(k + kScan - 1) % kScan];
      const double next = values[(k + 1) % kScan];
      if (values[k] < prev || values[k] < next) continue;
      double lo = kPi * k / kScan - h, hi = kPi * k / kScan + h;
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
      double f1 = objective(tuple, boundary(x1)), f2 = objective(tuple, boundary(x2));
      for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
        if (f1 < f2) {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + g * (hi - lo);
          f2 = objective(tuple, boundary(x2));
        } else {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - g * (hi - lo);
          f1 = objective(tuple, boundary(x1));
        }
      }
      best = std::max({best, f1, f2});
    }
    return std::pow(best, 1.0 / q_);
  }

 private:
  Vector boundary(double theta) const {
    Vector u{std::cos(theta), std::sin(theta)};
    double s = 0.0;
    for (std::size_t i = 0; i < 2; ++i) s += std::pow(std::abs(space_.weights()[i] * u[i]), space_.r());
    const double n = std::pow(s, 1.0 / space_.r());
    return {u[0] / n, u[1] / n};
  }

  double objective(std::span<const Functional* const> tuple, const Vector& x) const {
    double s = 0.0;
    for (const auto* y : tuple) s += std::pow(std::abs(dot(*y, x)), q_);
    return s;
  }

  const SpaceModel& space_;
  double q_;
  std::size_t dim_;
  bool spectral_ = false;
  std::vector<Vector> table_;
  std::vector<Vector> probes_;
};

}  // namespace

double pq_norm_bruteforce(const SpaceModel& space, const LatticeExpr& e, double p, double q, double grid_step,
                          std::size_t max_len) {
  if (space.dim() > 2 || max_len < 1 || max_len > 3)
    throw InvalidArgument("pq_norm_bruteforce guard: requires dim <= 2 and 1 <= max_len <= 3");
  if (!(grid_step > 0.0)) throw InvalidArgument("pq_norm_bruteforce: grid_step must be positive");
  if (!(q >= 1.0) || !(p >= q) || !std::isfinite(p))
    throw InvalidArgument("pq_norm_bruteforce: requires finite p >= q >= 1");
  if (e.dim() != space.dim()) throw DimensionMismatch(space.dim(), e.dim());

  const std::size_t d = space.dim();
  // The dual ball lies in the box [-R, R]^d with R = max_i ||e_i||.
  double R = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    Vector ei(d, 0.0);
    ei[i] = 1.0;
    R = std::max(R, space.norm(ei));
  }
  const auto m = static_cast<long>(std::floor(R / grid_step + 1e-9));
  if (std::pow(2.0 * m + 1.0, static_cast<double>(d)) > 4e6)
    throw InvalidArgument("pq_norm_bruteforce guard: grid too fine");

  const OracleBall ball(space, q);
  struct Point {
    Functional y;
    double F;  // |f(y)|^p
    double W;  // dual norm
    double s;  // F / W^p, the singleton score^p
    std::vector<double> probe;  // |<y, u>|^q for the probe directions
  };
  // Points are bucketed into square blocks of the grid so that whole blocks of pairs
  // can be discarded by one bound.
  constexpr long kBlock = 5;
  const long blocks = (2 * m) / kBlock + 1;
  struct Cell {
    std::vector<Point> pts;
    double smax = 0.0, Fmax = 0.0, Wmin = 0.0;
    std::vector<double> amin;
  };
  std::vector<Cell> cells(static_cast<std::size_t>(d == 1 ? blocks : blocks * blocks));
  const std::size_t n_probe = ball.probes().size();
  auto add_point = [&](Functional y, std::size_t cell) {
    if (std::all_of(y.begin(), y.end(), [](double c) { return c == 0.0; })) return;
    Point pt;
    // The weak norm ignores the signs of the functionals, so y and -y are scored together.
    Functional neg(y);
    for (double& c : neg) c = -c;
    pt.F = std::pow(std::max(std::abs(evaluate(e, y)), std::abs(evaluate(e, neg))), p);
    if (pt.F == 0.0) return;
    pt.W = ball.dual_norm(y);
    pt.s = pt.F / std::pow(pt.W, p);
    for (const auto& u : ball.probes()) pt.probe.push_back(std::pow(std::abs(dot(y, u)), q));
    pt.y = std::move(y);
    cells[cell].pts.push_back(std::move(pt));
  };
  for (long a = 0; a <= m; ++a) {
    if (d == 1) {
      add_point({a * grid_step}, static_cast<std::size_t>((a + m) / kBlock));
      continue;
    }
    for (long b = a == 0 ? 1 : -m; b <= m; ++b)
      add_point({a * grid_step, b * grid_step}, static_cast<std::size_t>((a + m) / kBlock * blocks + (b + m) / kBlock));
  }
  std::erase_if(cells, [](const Cell& c) { return c.pts.empty(); });
  if (cells.empty()) return 0.0;
  for (auto& c : cells) {
    std::sort(c.pts.begin(), c.pts.end(), [](const Point& a, const Point& b) { return a.s > b.s; });
    c.smax = c.pts[0].s;
    c.Wmin = c.pts[0].W;
    c.amin = c.pts[0].probe;
    for (const auto& pt : c.pts) {
      c.Fmax = std::max(c.Fmax, pt.F);
      c.Wmin = std::min(c.Wmin, pt.W);
      for (std::size_t k = 0; k < n_probe; ++k) c.amin[k] = std::min(c.amin[k], pt.probe[k]);
    }
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.smax > b.smax; });

  // best holds score^p. A weak norm is at least every dual norm in its tuple and at least
  // the l_q sum of pairings with any probe point of the ball; either gives an upper bound
  // on the score, first per block tuple, then per point tuple.
  double best = cells[0].smax;
  // True when the tuple with summed |f|^p equal to F, largest dual norm W and probe
  // sums probe_sum(k) cannot beat best.
  auto pruned = [&](double F, double W, auto&& probe_sum) {
    if (F <= best * std::pow(W, p)) return true;
    double lb = 0.0;
    for (std::size_t k = 0; k < n_probe; ++k) lb = std::max(lb, probe_sum(k));
    return F <= best * std::pow(lb, p / q);
  };
  auto score = [&](std::initializer_list<const Point*> tuple) {
    std::vector<const Functional*> ys;
    double F = 0.0;
    for (const auto* pt : tuple) {
      ys.push_back(&pt->y);
      F += pt->F;
    }
    return F / std::pow(ball.weak(ys), p);
  };

  const std::size_t nc = cells.size();
  if (max_len >= 2) {
    for (std::size_t A = 0; A < nc && 2.0 * cells[A].smax > best; ++A) {
      const Cell& ca = cells[A];
      for (std::size_t B = A; B < nc && ca.smax + cells[B].smax > best; ++B) {
        const Cell& cb = cells[B];
        if (pruned(ca.Fmax + cb.Fmax, std::max(ca.Wmin, cb.Wmin),
                  [&](std::size_t k) { return ca.amin[k] + cb.amin[k]; }))
          continue;
        for (std::size_t i = 0; i < ca.pts.size(); ++i) {
          const Point& pi = ca.pts[i];
          for (std::size_t j = A == B ? i : 0; j < cb.pts.size() && pi.s + cb.pts[j].s > best; ++j) {
            const Point& pj = cb.pts[j];
            if (pruned(pi.F + pj.F, std::max(pi.W, pj.W),
                      [&](std::size_t k) { return pi.probe[k] + pj.probe[k]; }))
              continue;
            best = std::max(best, score({&pi, &pj}));
          }
        }
      }
    }
  }
  if (max_len >= 3) {
    for (std::size_t A = 0; A < nc && 3.0 * cells[A].smax > best; ++A)
      for (std::size_t B = A; B < nc && cells[A].smax + 2.0 * cells[B].smax > best; ++B)
        for (std::size_t C = B; C < nc && cells[A].smax + cells[B].smax + cells[C].smax > best; ++C) {
          const Cell &ca = cells[A], &cb = cells[B], &cc = cells[C];
          if (pruned(ca.Fmax + cb.Fmax + cc.Fmax, std::max({ca.Wmin, cb.Wmin, cc.Wmin}),
                    [&](std::size_t k) { return ca.amin[k] + cb.amin[k] + cc.amin[k]; }))
            continue;
          for (std::size_t i = 0; i < ca.pts.size(); ++i)
            for (std::size_t j = A == B ? i : 0; j < cb.pts.size(); ++j)
              for (std::size_t k = B == C ? j : 0; k < cc.pts.size(); ++k) {
                const Point &pi = ca.pts[i], &pj = cb.pts[j], &pk = cc.pts[k];
                if (pi.s + pj.s + pk.s <= best) continue;
                if (pruned(pi.F + pj.F + pk.F, std::max({pi.W, pj.W, pk.W}),
                          [&](std::size_t t) { return pi.probe[t] + pj.probe[t] + pk.probe[t]; }))
                  continue;
                best = std::max(best, score({&pi, &pj, &pk}));
              }
        }
  }
  return std::pow(best, 1.0 / p);
}

}  // namespace fbllab
