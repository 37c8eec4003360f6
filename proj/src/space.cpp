#include "fbllab/space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fbllab/error.hpp"
#include "fbllab/lp.hpp"
#include "fbllab/rng.hpp"

namespace fbllab {

namespace {

constexpr std::size_t kExtremeCacheLimit = 4096;

double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

// Rank of a row set by Gaussian elimination with partial pivoting.
std::size_t rank_of(std::vector<Vector> rows, std::size_t dim) {
  std::size_t rank = 0;
  for (std::size_t col = 0; col < dim && rank < rows.size(); ++col) {
    std::size_t piv = rank;
    for (std::size_t i = rank; i < rows.size(); ++i)
      if (std::abs(rows[i][col]) > std::abs(rows[piv][col])) piv = i;
    if (std::abs(rows[piv][col]) < 1e-12) continue;
    std::swap(rows[piv], rows[rank]);
    for (std::size_t i = rank + 1; i < rows.size(); ++i) {
      const double f = rows[i][col] / rows[rank][col];
      for (std::size_t j = col; j < dim; ++j) rows[i][j] -= f * rows[rank][j];
    }
    ++rank;
  }
  return rank;
}

// Solves the square system A y = b; returns false when (numerically) singular.
bool solve_square(std::vector<Vector> a, Vector b, Vector& y) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col; i < n; ++i)
      if (std::abs(a[i][col]) > std::abs(a[piv][col])) piv = i;
    if (std::abs(a[piv][col]) < 1e-10) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t i = col + 1; i < n; ++i) {
      const double f = a[i][col] / a[col][col];
      for (std::size_t j = col; j < n; ++j) a[i][j] -= f * a[col][j];
      b[i] -= f * b[col];
    }
  }
  y.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * y[j];
    y[i] = s / a[i][i];
  }
  return true;
}

bool near(const Vector& a, const Vector& b, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol * (1.0 + std::abs(a[i]))) return false;
  return true;
}

bool first_nonzero_positive(const Vector& v) {
  for (double c : v)
    if (c != 0.0) return c > 0.0;
  return false;
}

// Vertices of {y : |<y, v>| <= 1 for all v in V}, by solving every d-subset of
// active constraints with every sign pattern.
std::vector<Vector> enumerate_dual_vertices(const std::vector<Vector>& vertices, std::size_t dim) {
  std::vector<Vector> half;
  for (const auto& v : vertices)
    if (first_nonzero_positive(v)) half.push_back(v);
  std::vector<Vector> out;
  std::vector<std::size_t> pick(dim);
  for (std::size_t i = 0; i < dim; ++i) pick[i] = i;
  if (half.size() < dim) return out;
  for (;;) {
    std::vector<Vector> a(dim);
    for (std::size_t i = 0; i < dim; ++i) a[i] = half[pick[i]];
    for (std::size_t mask = 0; mask < (std::size_t{1} << dim); ++mask) {
      Vector b(dim);
      for (std::size_t i = 0; i < dim; ++i) b[i] = (mask >> i) & 1U ? -1.0 : 1.0;
      Vector y;
      if (!solve_square(a, b, y)) break;
      bool feasible = true;
      for (const auto& v : half)
        if (std::abs(dot(y, v)) > 1.0 + 1e-9) {
          feasible = false;
          break;
        }
      if (!feasible) continue;
      const bool seen = std::any_of(out.begin(), out.end(), [&](const Vector& u) { return near(u, y, 1e-9); });
      if (!seen) out.push_back(y);
    }
    // Next combination in lexicographic order.
    std::size_t i = dim;
    while (i > 0 && pick[i - 1] == half.size() - dim + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < dim; ++j) pick[j] = pick[j - 1] + 1;
  }
  return out;
}

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double result = 0.0;
  double f = 1.0 / static_cast<double>(base);
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= static_cast<double>(base);
  }
  return result;
}

constexpr std::uint64_t kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43,
                                     47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107};

// Quasi-uniform directions on the Euclidean sphere.
std::vector<Vector> euclidean_directions(std::size_t dim, std::size_t count, std::uint64_t seed) {
  std::vector<Vector> out;
  out.reserve(count);
  Rng rng = make_rng(seed, 0xd1ec);
  if (dim == 1) {
    for (std::size_t k = 0; k < count; ++k) out.push_back({k % 2 == 0 ? 1.0 : -1.0});
    return out;
  }
  if (dim == 2) {
    const double shift = uniform01(rng);
    for (std::size_t k = 0; k < count; ++k) {
      const double theta = 2.0 * std::numbers::pi * (static_cast<double>(k) + shift) / static_cast<double>(count);
      out.push_back({std::cos(theta), std::sin(theta)});
    }
    return out;
  }
  const std::size_t pairs = (dim + 1) / 2;
  if (2 * pairs > std::size(kPrimes)) throw InvalidArgument("sphere sampling supports dim <= 28");
  std::vector<double> shift(2 * pairs);
  for (auto& s : shift) s = uniform01(rng);
  for (std::size_t k = 0; k < count; ++k) {
    Vector g(2 * pairs);
    for (std::size_t j = 0; j < pairs; ++j) {
      double u1 = radical_inverse(k + 1, kPrimes[2 * j]) + shift[2 * j];
      double u2 = radical_inverse(k + 1, kPrimes[2 * j + 1]) + shift[2 * j + 1];
      u1 -= std::floor(u1);
      u2 -= std::floor(u2);
      if (u1 <= 0.0) u1 = 0x1.0p-53;
      const double radius = std::sqrt(-2.0 * std::log(u1));
      g[2 * j] = radius * std::cos(2.0 * std::numbers::pi * u2);
      g[2 * j + 1] = radius * std::sin(2.0 * std::numbers::pi * u2);
    }
    g.resize(dim);
    double n2 = 0.0;
    for (double c : g) n2 += c * c;
    if (n2 == 0.0) g[0] = n2 = 1.0;
    const double inv = 1.0 / std::sqrt(n2);
    for (double& c : g) c *= inv;
    out.push_back(std::move(g));
  }
  return out;
}

double lr_norm(std::span<const double> x, std::span<const double> scale, double r, bool divide) {
  auto coord = [&](std::size_t i) { return std::abs(divide ? x[i] / scale[i] : x[i] * scale[i]); };
  if (std::isinf(r)) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, coord(i));
    return m;
  }
  if (r == 1.0) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += coord(i);
    return s;
  }
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, coord(i));
  if (m == 0.0) return 0.0;
  double s = 0.0;
  if (r == 2.0) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = coord(i) / m;
      s += t * t;
    }
    return m * std::sqrt(s);
  }
  for (std::size_t i = 0; i < x.size(); ++i) s += std::pow(coord(i) / m, r);
  return m * std::pow(s, 1.0 / r);
}


// Largest eigenvalue and a unit eigenvector of the symmetric d x d matrix a (row-major),
// by cyclic Jacobi rotations.
double top_eigenpair(std::vector<double> a, std::size_t d, Vector& vec) {
  std::vector<double> v(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      diag += a[i * d + i] * a[i * d + i];
      for (std::size_t j = i + 1; j < d; ++j) off += a[i * d + j] * a[i * d + j];
    }
    if (off <= 1e-32 * diag) break;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a[p * d + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a[k * d + p], akq = a[k * d + q];
          a[k * d + p] = c * akp - s * akq;
          a[k * d + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a[p * d + k], aqk = a[q * d + k];
          a[p * d + k] = c * apk - s * aqk;
          a[q * d + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v[k * d + p], vkq = v[k * d + q];
          v[k * d + p] = c * vkp - s * vkq;
          v[k * d + q] = s * vkp + c * vkq;
        }
      }
  }
  std::size_t top = 0;
  for (std::size_t i = 1; i < d; ++i)
    if (a[i * d + i] > a[top * d + top]) top = i;
  vec.assign(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) vec[k] = v[k * d + top];
  return std::max(0.0, a[top * d + top]);
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double conjugate_exponent(double r) {
  if (std::isinf(r)) return 1.0;
  if (r == 1.0) return kInf;
  return r / (r - 1.0);
}

SpaceModel SpaceModel::weighted_lp(std::size_t dim, double r, std::vector<double> weights) {
  if (dim == 0) throw InvalidArgument("space dimension must be positive");
  if (!(r >= 1.0)) throw InvalidArgument("l_r exponent must satisfy r >= 1 or r = inf");
  if (weights.empty()) weights.assign(dim, 1.0);
  if (weights.size() != dim) throw DimensionMismatch(dim, weights.size());
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("l_r weights must be positive and finite");
  SpaceModel s;
  s.dim_ = dim;
  s.kind_ = SpaceKind::WeightedLp;
  s.r_ = r;
  s.weights_ = std::move(weights);
  if (r == 1.0) {
    for (std::size_t i = 0; i < dim; ++i)
      for (double sg : {1.0, -1.0}) {
        Vector v(dim, 0.0);
        v[i] = sg / s.weights_[i];
        s.extreme_points_.push_back(std::move(v));
      }
  } else if (std::isinf(r) && dim < 63 && (std::size_t{1} << dim) <= kExtremeCacheLimit) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << dim); ++mask) {
      Vector v(dim);
      for (std::size_t i = 0; i < dim; ++i) v[i] = ((mask >> i) & 1U ? -1.0 : 1.0) / s.weights_[i];
      s.extreme_points_.push_back(std::move(v));
    }
  }
  return s;
}

SpaceModel SpaceModel::polytope(std::vector<Vector> vertices) {
  if (vertices.empty()) throw InvalidArgument("polytope needs at least one vertex");
  const std::size_t dim = vertices.front().size();
  if (dim == 0) throw InvalidArgument("space dimension must be positive");
  std::vector<Vector> unique;
  for (auto& v : vertices) {
    if (v.size() != dim) throw DimensionMismatch(dim, v.size());
    for (double c : v)
      if (!std::isfinite(c)) throw InvalidArgument("polytope vertex has a non-finite coordinate");
    if (std::none_of(unique.begin(), unique.end(), [&](const Vector& u) { return u == v; }))
      unique.push_back(std::move(v));
  }
  for (const auto& v : unique) {
    Vector neg(v);
    for (double& c : neg) c = -c;
    if (std::none_of(unique.begin(), unique.end(), [&](const Vector& u) { return near(u, neg, 1e-12); }))
      throw InvalidArgument("polytope vertex set is not symmetric");
  }
  if (rank_of(unique, dim) < dim) throw InvalidArgument("polytope vertices do not span the space");
  SpaceModel s;
  s.dim_ = dim;
  s.kind_ = SpaceKind::Polytope;
  s.r_ = 0.0;
  s.vertices_ = std::move(unique);
  s.dual_vertices_ = enumerate_dual_vertices(s.vertices_, dim);
  s.extreme_points_ = s.vertices_;
  return s;
}

SpaceModel SpaceModel::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("space description must be a JSON object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw InvalidArgument("space: missing \"kind\"");
  const std::string kind = j["kind"];
  std::size_t dim = 0;
  if (j.contains("dim")) {
    if (!j["dim"].is_number_unsigned() || j["dim"].get<std::size_t>() == 0)
      throw InvalidArgument("space: \"dim\" must be a positive integer");
    dim = j["dim"].get<std::size_t>();
  }
  if (kind == "lp") {
    if (dim == 0) throw InvalidArgument("space: missing \"dim\"");
    double r = 2.0;
    if (j.contains("r")) {
      if (j["r"].is_string()) {
        if (j["r"] != "inf") throw InvalidArgument("space: \"r\" must be a number or \"inf\"");
        r = kInf;
      } else if (j["r"].is_number()) {
        r = j["r"].get<double>();
      } else {
        throw InvalidArgument("space: \"r\" must be a number or \"inf\"");
      }
    }
    std::vector<double> weights;
    if (j.contains("weights")) weights = j["weights"].get<std::vector<double>>();
    return weighted_lp(dim, r, std::move(weights));
  }
  if (kind == "polytope") {
    if (!j.contains("vertices")) throw InvalidArgument("space: polytope needs \"vertices\"");
    auto vertices = j["vertices"].get<std::vector<Vector>>();
    auto s = polytope(std::move(vertices));
    if (dim != 0 && dim != s.dim()) throw DimensionMismatch(dim, s.dim());
    return s;
  }
  throw InvalidArgument("space: unknown kind '" + kind + "'");
}

nlohmann::ordered_json SpaceModel::to_json() const {
  nlohmann::ordered_json j;
  j["dim"] = dim_;
  if (kind_ == SpaceKind::WeightedLp) {
    j["kind"] = "lp";
    if (std::isinf(r_))
      j["r"] = "inf";
    else
      j["r"] = r_;
    j["weights"] = weights_;
  } else {
    j["kind"] = "polytope";
    j["vertices"] = vertices_;
  }
  return j;
}

void SpaceModel::check_dim(std::size_t n) const {
  if (n != dim_) throw DimensionMismatch(dim_, n);
}

double SpaceModel::norm(std::span<const double> x) const {
  check_dim(x.size());
  if (kind_ == SpaceKind::WeightedLp) return lr_norm(x, weights_, r_, false);
  if (std::all_of(x.begin(), x.end(), [](double c) { return c == 0.0; })) return 0.0;
  // Minkowski gauge: min sum(lambda) s.t. sum_j lambda_j v_j = x, lambda >= 0.
  LpProblem lp;
  lp.objective.assign(vertices_.size(), 1.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    std::vector<double> row(vertices_.size()), neg(vertices_.size());
    for (std::size_t j = 0; j < vertices_.size(); ++j) {
      row[j] = vertices_[j][i];
      neg[j] = -vertices_[j][i];
    }
    lp.constraints.push_back(std::move(row));
    lp.rhs.push_back(x[i]);
    lp.constraints.push_back(std::move(neg));
    lp.rhs.push_back(-x[i]);
  }
  return lp_solve(lp).value;
}

double SpaceModel::dual_norm(std::span<const double> xstar) const {
  check_dim(xstar.size());
  if (kind_ == SpaceKind::WeightedLp) return lr_norm(xstar, weights_, conjugate_exponent(r_), true);
  double m = 0.0;
  for (const auto& v : vertices_) m = std::max(m, std::abs(dot(xstar, v)));
  return m;
}

SpaceModel SpaceModel::dual() const {
  if (kind_ == SpaceKind::WeightedLp) {
    std::vector<double> inv(weights_.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / weights_[i];
    return weighted_lp(dim_, conjugate_exponent(r_), std::move(inv));
  }
  SpaceModel s;
  s.dim_ = dim_;
  s.kind_ = SpaceKind::Polytope;
  s.r_ = 0.0;
  s.vertices_ = dual_vertices_;
  s.dual_vertices_ = vertices_;
  s.extreme_points_ = dual_vertices_;
  return s;
}

Vector SpaceModel::linear_maximizer(std::span<const double> y) const {
  check_dim(y.size());
  Vector x(dim_, 0.0);
  if (kind_ == SpaceKind::Polytope) {
    std::size_t best = 0;
    double best_val = -kInf;
    for (std::size_t j = 0; j < vertices_.size(); ++j) {
      const double v = dot(y, vertices_[j]);
      if (v > best_val) {
        best_val = v;
        best = j;
      }
    }
    return vertices_[best];
  }
  // Substituting u_i = w_i x_i turns the problem into max <z, u> over the l_r ball, z_i = y_i / w_i.
  Vector z(dim_);
  double zmax = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    z[i] = y[i] / weights_[i];
    zmax = std::max(zmax, std::abs(z[i]));
  }
  if (zmax == 0.0) {
    x[0] = 1.0 / weights_[0];
    return x;
  }
  if (r_ == 1.0) {
    std::size_t j = 0;
    for (std::size_t i = 1; i < dim_; ++i)
      if (std::abs(z[i]) > std::abs(z[j])) j = i;
    x[j] = sign_of(z[j]) / weights_[j];
    return x;
  }
  if (std::isinf(r_)) {
    for (std::size_t i = 0; i < dim_; ++i) x[i] = sign_of(z[i]) / weights_[i];
    return x;
  }
  const double rc = conjugate_exponent(r_);
  double s = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double t = std::pow(std::abs(z[i]) / zmax, rc - 1.0);
    x[i] = (z[i] < 0.0 ? -t : t);
    s += std::pow(std::abs(z[i]) / zmax, rc);
  }
  // ||(|z_i/zmax|^{rc-1})||_r = s^{1/r}.
  const double unorm = std::pow(s, 1.0 / r_);
  for (std::size_t i = 0; i < dim_; ++i) x[i] /= unorm * weights_[i];
  return x;
}

const std::vector<Vector>* SpaceModel::exact_extreme_points(std::size_t budget) const {
  if (extreme_points_.empty()) return nullptr;
  if (kind_ == SpaceKind::WeightedLp && std::isinf(r_) && extreme_points_.size() > budget) return nullptr;
  return &extreme_points_;
}

std::string SpaceModel::describe() const {
  std::ostringstream os;
  if (kind_ == SpaceKind::Polytope) {
    os << "polytope(" << vertices_.size() << " vertices) in R^" << dim_;
    return os.str();
  }
  const bool weighted = std::any_of(weights_.begin(), weights_.end(), [](double w) { return w != 1.0; });
  os << (weighted ? "weighted l_" : "l_");
  if (std::isinf(r_))
    os << "inf";
  else
    os << r_;
  os << "^" << dim_;
  return os.str();
}

double norm(const SpaceModel& space, std::span<const double> x) { return space.norm(x); }

double dual_norm(const SpaceModel& space, std::span<const double> xstar) { return space.dual_norm(xstar); }

ExtremePoints ball_extreme_points(const SpaceModel& space, std::size_t budget, std::uint64_t seed) {
  if (const auto* pts = space.exact_extreme_points(budget)) return {*pts, true};
  return {sphere_sample(space, budget, seed), false};
}

std::vector<Vector> sphere_sample(const SpaceModel& space, std::size_t count, std::uint64_t seed) {
  auto dirs = euclidean_directions(space.dim(), count, seed);
  for (auto& d : dirs) {
    const double n = space.norm(d);
    for (double& c : d) c /= n;
  }
  return dirs;
}

std::vector<Functional> dual_sphere_sample(const SpaceModel& space, std::size_t count, std::uint64_t seed) {
  auto dirs = euclidean_directions(space.dim(), count, seed);
  for (auto& d : dirs) {
    const double n = space.dual_norm(d);
    for (double& c : d) c /= n;
  }
  return dirs;
}

FunctionalTuple FunctionalTuple::scaled(double lambda) const {
  FunctionalTuple out;
  out.functionals = functionals;
  for (auto& f : out.functionals)
    for (double& c : f) c *= lambda;
  if (cached_weak) {
    out.cached_weak = *cached_weak;
    out.cached_weak->value *= std::abs(lambda);
  }
  return out;
}

double lq_of_pairings(std::span<const Functional> tuple, std::span<const double> x, double q) {
  double s = 0.0;
  if (q == 1.0) {
    for (const auto& f : tuple) s += std::abs(dot(f, x));
    return s;
  }
  if (q == 2.0) {
    for (const auto& f : tuple) {
      const double a = dot(f, x);
      s += a * a;
    }
    return std::sqrt(s);
  }
  for (const auto& f : tuple) s += std::pow(std::abs(dot(f, x)), q);
  return std::pow(s, 1.0 / q);
}

WeakNorm weak_q_norm(const SpaceModel& space, std::span<const Functional> tuple, double q,
                     const WeakNormOptions& options) {
  if (!(q >= 1.0) || std::isinf(q)) throw InvalidArgument("weak q-norm needs finite q >= 1");
  for (const auto& f : tuple)
    if (f.size() != space.dim()) throw DimensionMismatch(space.dim(), f.size());
  WeakNorm result;
  result.witness.assign(space.dim(), 0.0);
  if (tuple.empty()) {
    result.exact = true;
    return result;
  }
  if (const auto* pts = space.exact_extreme_points(options.extreme_budget)) {
    result.exact = true;
    result.value = -1.0;
    for (const auto& v : *pts) {
      const double g = lq_of_pairings(tuple, v, q);
      if (g > result.value) {
        result.value = g;
        result.witness = v;
      }
    }
    return result;
  }

  if (space.kind() == SpaceKind::WeightedLp && space.r() == 2.0 && q == 2.0) {
    // Spectral case: the square of the value is the top eigenvalue of sum_k z_k z_k^T,
    // z_k = x_k* / w, and the witness is the eigenvector mapped back through 1/w.
    const std::size_t d = space.dim();
    const auto& w = space.weights();
    std::vector<double> gram(d * d, 0.0);
    for (const auto& f : tuple)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) gram[i * d + j] += (f[i] / w[i]) * (f[j] / w[j]);
    Vector u;
    top_eigenpair(std::move(gram), d, u);
    for (std::size_t i = 0; i < d; ++i) u[i] /= w[i];
    // Evaluate at the witness so that value and witness agree exactly.
    result.value = lq_of_pairings(tuple, u, 2.0);
    result.witness = std::move(u);
    result.exact = true;
    return result;
  }

  std::vector<Vector> starts = options.warm_starts;
  if (options.functional_starts)
    for (const auto& f : tuple) starts.push_back(space.linear_maximizer(f));
  if (options.restarts > 0) {
    auto extra = sphere_sample(space, options.restarts, options.seed);
    starts.insert(starts.end(), extra.begin(), extra.end());
  }

  result.value = -1.0;
  Vector grad(space.dim());
  for (auto x : starts) {
    if (x.size() != space.dim()) throw DimensionMismatch(space.dim(), x.size());
    double g = lq_of_pairings(tuple, x, q);
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
      // Ascent direction: gradient of sum_k |a_k|^q, up to a positive factor.
      std::fill(grad.begin(), grad.end(), 0.0);
      bool zero = true;
      for (const auto& f : tuple) {
        const double a = dot(f, x);
        if (a == 0.0) continue;
        const double w = q == 1.0 ? (a > 0 ? 1.0 : -1.0)
                                  : (a > 0 ? 1.0 : -1.0) * std::pow(std::abs(a), q - 1.0);
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += w * f[i];
        zero = false;
      }
      if (zero) break;
      Vector next = space.linear_maximizer(grad);
      const double gn = lq_of_pairings(tuple, next, q);
      if (gn <= g * (1.0 + options.rel_tol)) {
        if (gn > g) {
          g = gn;
          x = std::move(next);
        }
        break;
      }
      g = gn;
      x = std::move(next);
    }
    if (g > result.value) {
      result.value = g;
      result.witness = x;
    }
  }
  return result;
}

WeakNorm weak_q_norm(const SpaceModel& space, const FunctionalTuple& tuple, double q,
                     const WeakNormOptions& options) {
  return weak_q_norm(space, std::span<const Functional>(tuple.functionals), q, options);
}

double ensure_weak_norm(const SpaceModel& space, FunctionalTuple& tuple, double q,
                        const WeakNormOptions& options) {
  if (!tuple.cached_weak || tuple.cached_weak->q != q) {
    auto w = weak_q_norm(space, tuple, q, options);
    tuple.cached_weak = CachedWeakNorm{q, w.value, std::move(w.witness)};
  }
  return tuple.cached_weak->value;
}

}  // namespace fbllab
