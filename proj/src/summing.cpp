#include "fbllab/summing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fbllab/error.hpp"
#include "fbllab/parallel.hpp"
#include "fbllab/rng.hpp"

namespace fbllab {

namespace {

double lp_sum(std::span<const double> values, double p) {
  double s = 0.0;
  if (p == 1.0) {
    for (double v : values) s += std::abs(v);
    return s;
  }
  if (p == 2.0) {
    for (double v : values) s += v * v;
    return std::sqrt(s);
  }
  for (double v : values) s += std::pow(std::abs(v), p);
  return std::pow(s, 1.0 / p);
}

std::vector<double> flatten(const std::vector<Functional>& t) {
  std::vector<double> out;
  for (const auto& f : t) out.insert(out.end(), f.begin(), f.end());
  return out;
}

// Strictly better score, or equal score with the lexicographically smaller tuple.
bool better(double score, const std::vector<Functional>& tuple, double best_score,
            const std::vector<Functional>& best_tuple) {
  if (score != best_score) return score > best_score;
  const auto a = flatten(tuple);
  const auto b = flatten(best_tuple);
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

void check_expr(const SpaceModel& space, const LatticeExpr& e) {
  if (e.dim() != space.dim()) throw DimensionMismatch(space.dim(), e.dim());
}

void check_exponents(double p, double q) {
  if (!(q >= 1.0) || !std::isfinite(p) || !std::isfinite(q))
    throw InvalidArgument("summing norms need finite exponents p, q >= 1");
  if (p < q)
    throw InvalidArgument(
        "p < q: the (p,q)-summing norm is infinite for every nonzero f (repeated functionals grow like "
        "n^(1/p - 1/q)); see divergence_exponent");
}

// Weak q-norm used inside local searches. Exact when the ball has an enumerated vertex
// list or the tuple is a singleton; otherwise a warm-started ascent that is corrected by
// `precise` once per step level.
class SearchWeakNorm {
 public:
  SearchWeakNorm(const SpaceModel& space, double q, const WeakNormOptions& precise)
      : space_(space),
        q_(q),
        precise_(precise),
        exact_(space.exact_extreme_points(precise.extreme_budget)),
        spectral_(space.kind() == SpaceKind::WeightedLp && space.r() == 2.0 && q == 2.0) {}

  double fast(const std::vector<Functional>& t, std::size_t changed) {
    if (t.size() == 1) return space_.dual_norm(t[0]);
    if (exact_) return exact_value(t);
    if (spectral_) return weak_q_norm(space_, t, q_).value;
    WeakNormOptions opt;
    opt.restarts = 0;
    opt.functional_starts = false;
    opt.rel_tol = 1e-12;
    opt.max_iterations = 200;
    if (!witness_.empty()) opt.warm_starts.push_back(witness_);
    opt.warm_starts.push_back(space_.linear_maximizer(t[changed]));
    auto w = weak_q_norm(space_, t, q_, opt);
    last_ = std::move(w.witness);
    return w.value;
  }

  // Called after a move is accepted so the next ascent starts from its maximizer.
  void accept() {
    if (!last_.empty()) witness_ = last_;
  }

  double precise(const std::vector<Functional>& t) {
    if (t.size() == 1) return space_.dual_norm(t[0]);
    if (exact_) return exact_value(t);
    if (spectral_) return weak_q_norm(space_, t, q_).value;
    WeakNormOptions opt = precise_;
    if (!witness_.empty()) opt.warm_starts.push_back(witness_);
    auto w = weak_q_norm(space_, t, q_, opt);
    witness_ = std::move(w.witness);
    return w.value;
  }

 private:
  double exact_value(const std::vector<Functional>& t) const {
    double best = 0.0;
    for (const auto& v : *exact_) best = std::max(best, lq_of_pairings(t, v, q_));
    return best;
  }

  const SpaceModel& space_;
  double q_;
  WeakNormOptions precise_;
  const std::vector<Vector>* exact_;
  bool spectral_;
  Vector witness_;
  Vector last_;
};

// Improving sweeps allowed before the step is halved anyway.
constexpr std::size_t kSweepsPerStep = 12;

struct LocalResult {
  std::vector<Functional> tuple;
  double score = 0.0;
  std::size_t evaluations = 0;
};

// Coordinate pattern search on score(T) = ||(f(x_k*))_k||_p / weak_q(T), with the tuple
// renormalized to weak norm 1 after every sweep (the score is scale invariant).
LocalResult local_search(const SpaceModel& space, const LatticeExpr& e, double p, double q,
                         std::vector<Functional> t, const SearchConfig& config, std::uint64_t seed) {
  LocalResult out;
  Rng rng = make_rng(seed, 0x10ca1);
  std::normal_distribution<double> normal;
  const std::size_t n = t.size();
  const std::size_t d = space.dim();
  SearchWeakNorm weak(space, q, config.weak);
  std::vector<double> fv(n);
  for (std::size_t k = 0; k < n; ++k) fv[k] = evaluate(e, t[k]);

  double w = weak.precise(t);
  if (w == 0.0) {
    out.tuple = std::move(t);
    return out;
  }
  // Coordinates in which weighted l_2 duals are rotation invariant.
  std::vector<double> scale(d, 1.0);
  if (space.kind() == SpaceKind::WeightedLp)
    for (std::size_t i = 0; i < d; ++i) scale[i] = space.weights()[i];
  auto rescale = [&](double factor) {
    for (auto& f : t)
      for (double& c : f) c *= factor;
    for (double& v : fv) v *= factor;
  };
  rescale(1.0 / w);
  double score = lp_sum(fv, p);

  auto try_move = [&](std::size_t k, auto&& apply, auto&& undo) {
    const double old_f = fv[k];
    apply();
    fv[k] = evaluate(e, t[k]);
    const double wn = weak.fast(t, k);
    ++out.evaluations;
    const double sn = wn > 0.0 ? lp_sum(fv, p) / wn : 0.0;
    if (sn > score * (1.0 + 1e-15)) {
      score = sn;
      w = wn;
      weak.accept();
      return true;
    }
    undo();
    fv[k] = old_f;
    return false;
  };

  double step = 0.25;
  std::size_t sweeps = 0;
  while (step >= config.min_step && out.evaluations < config.max_evaluations) {
    bool improved = false;
    for (std::size_t k = 0; k < n; ++k) {
      // Flipping a sign leaves the weak norm alone but can change |f| arbitrarily.
      if (n > 1 && try_move(
                       k,
                       [&] {
                         for (double& c : t[k]) c = -c;
                       },
                       [&] {
                         for (double& c : t[k]) c = -c;
                       }))
        improved = true;
      for (std::size_t i = 0; i < d; ++i) {
        for (double sgn : {1.0, -1.0}) {
          const double old = t[k][i];
          if (try_move(
                  k, [&] { t[k][i] = old + sgn * step; }, [&] { t[k][i] = old; })) {
            improved = true;
            break;
          }
        }
      }
      for (double sgn : {1.0, -1.0}) {
        const auto old = t[k];
        if (try_move(
                k,
                [&] {
                  for (double& c : t[k]) c *= 1.0 + sgn * step;
                },
                [&] { t[k] = old; })) {
          improved = true;
          break;
        }
      }
      // Random directions get past the ridges where f or the weak norm has a kink.
      for (int r = 0; r < 2; ++r) {
        Functional u(d);
        double len = 0.0;
        for (double& c : u) {
          c = normal(rng);
          len += c * c;
        }
        len = std::sqrt(len);
        if (len == 0.0) continue;
        const auto old = t[k];
        for (double sgn : {1.0, -1.0}) {
          if (try_move(
                  k,
                  [&] {
                    for (std::size_t i = 0; i < d; ++i) t[k][i] = old[i] + sgn * step * u[i] / len;
                  },
                  [&] { t[k] = old; })) {
            improved = true;
            break;
          }
        }
      }
    }
    // Structured joint moves. Mixing two functionals by a plane rotation preserves the
    // weak 2-norm, and rotating every functional at once is an isometry of weighted l_2;
    // both follow the ridges where the weak norm's maximizer is not unique.
    auto try_joint = [&](auto&& apply) {
      const auto old_t = t;
      const auto old_fv = fv;
      apply();
      for (std::size_t k = 0; k < n; ++k) fv[k] = evaluate(e, t[k]);
      const double wn = weak.fast(t, 0);
      ++out.evaluations;
      const double sn = wn > 0.0 ? lp_sum(fv, p) / wn : 0.0;
      if (sn > score * (1.0 + 1e-15)) {
        score = sn;
        w = wn;
        weak.accept();
        return true;
      }
      t = old_t;
      fv = old_fv;
      return false;
    };
    const double angle = std::min(step, 1.0);
    for (double sgn : {1.0, -1.0}) {
      const double c = std::cos(sgn * angle), sn = std::sin(sgn * angle);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = k + 1; l < n; ++l)
          if (try_joint([&] {
                for (std::size_t i = 0; i < d; ++i) {
                  const double a = t[k][i], b = t[l][i];
                  t[k][i] = c * a + sn * b;
                  t[l][i] = -sn * a + c * b;
                }
              }))
            improved = true;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
          if (try_joint([&] {
                for (auto& f : t) {
                  const double a = f[i] / scale[i], b = f[j] / scale[j];
                  f[i] = (c * a + sn * b) * scale[i];
                  f[j] = (-sn * a + c * b) * scale[j];
                }
              }))
            improved = true;
    }
    // Joint moves of all functionals follow ridges that couple them.
    for (int r = 0; n > 1 && r < 2; ++r) {
      std::vector<Functional> u(n, Functional(d));
      double len = 0.0;
      for (auto& f : u)
        for (double& c : f) {
          c = normal(rng);
          len += c * c;
        }
      len = std::sqrt(len);
      const auto old_t = t;
      const auto old_fv = fv;
      for (double sgn : {1.0, -1.0}) {
        for (std::size_t k = 0; k < n; ++k) {
          for (std::size_t i = 0; i < d; ++i) t[k][i] = old_t[k][i] + sgn * step * u[k][i] / len;
          fv[k] = evaluate(e, t[k]);
        }
        const double wn = weak.fast(t, 0);
        ++out.evaluations;
        const double sn = wn > 0.0 ? lp_sum(fv, p) / wn : 0.0;
        if (sn > score * (1.0 + 1e-15)) {
          score = sn;
          w = wn;
          weak.accept();
          improved = true;
          break;
        }
        t = old_t;
        fv = old_fv;
      }
    }
    if (!improved || ++sweeps == kSweepsPerStep) {
      sweeps = 0;
      w = weak.precise(t);
      score = w > 0.0 ? lp_sum(fv, p) / w : 0.0;
      step *= 0.5;
    }
    if (w > 0.0) {
      rescale(1.0 / w);
      w = 1.0;
    }
  }
  out.tuple = std::move(t);
  out.score = score;
  return out;
}

struct Scored {
  double score = -1.0;
  std::vector<Functional> tuple;
};

void offer(Scored& best, double score, const std::vector<Functional>& tuple) {
  if (best.score < 0.0 || better(score, tuple, best.score, best.tuple)) {
    best.score = score;
    best.tuple = tuple;
  }
}

// Singleton candidates normalized to dual norm 1, best |f| first.
std::vector<Scored> singleton_candidates(const SpaceModel& space, const SpaceModel& dual, const LatticeExpr& e,
                                         const SearchConfig& config) {
  std::vector<Functional> raw;
  if (const auto* pts = dual.exact_extreme_points(config.weak.extreme_budget)) raw = *pts;
  for (const auto& x : generators_of(e)) {
    if (std::all_of(x.begin(), x.end(), [](double c) { return c == 0.0; })) continue;
    raw.push_back(dual.linear_maximizer(x));
    auto neg = raw.back();
    for (double& c : neg) c = -c;
    raw.push_back(std::move(neg));
  }
  for (std::size_t i = 0; i < space.dim(); ++i)
    for (double s : {1.0, -1.0}) {
      Functional f(space.dim(), 0.0);
      f[i] = s;
      raw.push_back(std::move(f));
    }
  auto sphere = dual_sphere_sample(space, config.candidates, derive_seed(config.seed, 0xca4d));
  raw.insert(raw.end(), sphere.begin(), sphere.end());

  std::vector<Scored> out;
  out.reserve(raw.size());
  for (auto& f : raw) {
    const double n = space.dual_norm(f);
    if (n == 0.0) continue;
    for (double& c : f) c /= n;
    out.push_back({std::abs(evaluate(e, f)), {f}});
  }
  std::stable_sort(out.begin(), out.end(), [](const Scored& a, const Scored& b) {
    return better(a.score, a.tuple, b.score, b.tuple);
  });
  return out;
}

struct SingletonResult {
  Scored best;
  std::vector<Scored> refined;
  std::size_t evaluations = 0;
};

SingletonResult singleton_search(const SpaceModel& space, const LatticeExpr& e, const std::vector<Scored>& cands,
                                 const SearchConfig& config) {
  SingletonResult out;
  const std::size_t starts = std::min(config.local_starts, cands.size());
  std::vector<LocalResult> results(starts);
  parallel_for(starts, [&](std::size_t i) {
    // p and q are irrelevant for singletons: the score is |f(y)| / ||y||_*.
    results[i] = local_search(space, e, 1.0, 1.0, cands[i].tuple, config, derive_seed(config.seed, 0x5100 + i));
  });
  if (!cands.empty()) offer(out.best, cands[0].score, cands[0].tuple);
  for (auto& r : results) {
    out.evaluations += r.evaluations;
    const double n = space.dual_norm(r.tuple[0]);
    if (n == 0.0) continue;
    for (double& c : r.tuple[0]) c /= n;
    const double s = std::abs(evaluate(e, r.tuple[0]));
    out.refined.push_back({s, r.tuple});
    offer(out.best, s, r.tuple);
  }
  std::stable_sort(out.refined.begin(), out.refined.end(), [](const Scored& a, const Scored& b) {
    return better(a.score, a.tuple, b.score, b.tuple);
  });
  return out;
}

std::vector<Functional> perturbed(std::vector<Functional> t, double sigma, Rng& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  for (auto& f : t)
    for (double& c : f) c += normal(rng);
  return t;
}

}  // namespace

bool NormEstimate::in_pool(const SpaceModel& space, const FunctionalTuple& tuple, double tol) const {
  const auto normalized = normalize_tuple(space, tuple, q);
  for (const auto& t : pool) {
    if (t.size() != normalized.size()) continue;
    bool same = true;
    for (std::size_t k = 0; k < t.size() && same; ++k)
      for (std::size_t i = 0; i < t.functionals[k].size(); ++i)
        if (std::abs(t.functionals[k][i] - normalized.functionals[k][i]) >
            tol * (1.0 + std::abs(t.functionals[k][i]))) {
          same = false;
          break;
        }
    if (same) return true;
  }
  return false;
}

double tuple_score(const SpaceModel& space, const LatticeExpr& e, std::span<const Functional> tuple, double p,
                   double q, const WeakNormOptions& weak) {
  check_expr(space, e);
  if (tuple.empty()) return 0.0;
  const double w = weak_q_norm(space, tuple, q, weak).value;
  if (w == 0.0) return 0.0;
  std::vector<double> fv;
  fv.reserve(tuple.size());
  for (const auto& f : tuple) fv.push_back(evaluate(e, f));
  return lp_sum(fv, p) / w;
}

FunctionalTuple normalize_tuple(const SpaceModel& space, const FunctionalTuple& tuple, double q,
                                const WeakNormOptions& weak) {
  const double w = weak_q_norm(space, tuple, q, weak).value;
  if (w == 0.0) return FunctionalTuple(tuple.functionals);
  return FunctionalTuple(tuple.functionals).scaled(1.0 / w);
}

NormEstimate pq_norm_lower(const SpaceModel& space, const LatticeExpr& e, double p, double q,
                           const SearchConfig& config) {
  check_expr(space, e);
  check_exponents(p, q);
  NormEstimate est;
  est.p = p;
  est.q = q;
  est.method.seed = config.seed;
  est.method.restarts = config.restarts;

  const SpaceModel dual = space.dual();
  auto score_of = [&](const std::vector<Functional>& t) { return tuple_score(space, e, t, p, q, config.weak); };

  Scored best;
  for (const auto& t : config.pool) {
    for (const auto& f : t.functionals)
      if (f.size() != space.dim()) throw DimensionMismatch(space.dim(), f.size());
    if (t.empty()) continue;
    auto normalized = normalize_tuple(space, t, q, config.weak);
    offer(best, score_of(normalized.functionals), normalized.functionals);
    est.pool.push_back(std::move(normalized));
  }

  const auto cands = singleton_candidates(space, dual, e, config);
  const auto singles = singleton_search(space, e, cands, config);
  est.method.evaluations += singles.evaluations;
  offer(best, score_of(singles.best.tuple), singles.best.tuple);
  est.method.schedule.push_back(1);
  est.method.stage_values.push_back(best.score);

  // Top singleton functionals used to assemble longer starting tuples.
  std::vector<Functional> top;
  for (const auto& s : singles.refined) top.push_back(s.tuple[0]);
  for (const auto& c : cands) {
    if (top.size() >= 64) break;
    top.push_back(c.tuple[0]);
  }

  const auto directions = dual_sphere_sample(space, 64, derive_seed(config.seed, 0xd1e));
  std::vector<Functional> prev = best.tuple;
  double prev_value = best.score;
  for (std::size_t n = 2; n <= config.max_length; n *= 2) {
    Rng rng = make_rng(config.seed, 0x1000 + n);
    const std::size_t pick_from = std::min(top.size(), 4 * n + 8);
    auto random_top = [&] {
      auto f = top[rng() % pick_from];
      const double w = uniform(rng, 0.3, 1.0);
      for (double& c : f) c *= w;
      return f;
    };
    auto random_direction = [&] {
      auto f = directions[rng() % directions.size()];
      const double w = uniform(rng, 0.2, 1.0);
      for (double& c : f) c *= w;
      return f;
    };

    std::vector<std::vector<Functional>> starts;
    {
      auto t = prev;
      const auto copy = perturbed(prev, 0.3, rng);
      t.insert(t.end(), copy.begin(), copy.end());
      t.resize(n);
      starts.push_back(std::move(t));
      t = prev;
      for (const auto& f : top) {
        if (t.size() >= n) break;
        if (std::find(t.begin(), t.end(), f) == t.end()) t.push_back(f);
      }
      while (t.size() < n) t.push_back(random_top());
      t.resize(n);
      starts.push_back(std::move(t));
    }
    // The remaining starts are the best of many cheaply scored random tuples, taken per
    // family so that one family's local optimum cannot crowd out the others.
    if (config.restarts > 2) {
      constexpr std::size_t kFamilies = 4;
      const std::size_t per_family = 8 * config.restarts;
      std::vector<Scored> screened(kFamilies * per_family);
      std::normal_distribution<double> normal;
      for (std::size_t i = 0; i < screened.size(); ++i) {
        const std::size_t family = i / per_family;
        std::vector<Functional> t;
        if (family == 0) {
          while (t.size() < n) t.push_back(random_top());
        } else if (family == 1) {
          while (t.size() < n) t.push_back(random_direction());
        } else if (family == 2) {
          t = prev;
          while (t.size() < n) t.push_back(random_direction());
        } else {
          // Random orthogonal frame, completed by random vectors.
          while (t.size() < n) {
            Functional g(space.dim());
            for (double& c : g) c = normal(rng);
            for (std::size_t k = 0; k < std::min(t.size(), space.dim()); ++k) {
              const double proj = dot(g, t[k]) / dot(t[k], t[k]);
              for (std::size_t j = 0; j < g.size(); ++j) g[j] -= proj * t[k][j];
            }
            const double nrm = space.dual_norm(g);
            if (nrm == 0.0) continue;
            for (double& c : g) c /= nrm;
            t.push_back(std::move(g));
          }
        }
        t.resize(n);
        screened[i].tuple = family == 3 ? std::move(t) : perturbed(std::move(t), 0.02, rng);
      }
      parallel_for(screened.size(), [&](std::size_t i) {
        WeakNormOptions opt;
        opt.restarts = 0;
        opt.max_iterations = 50;
        opt.rel_tol = 1e-9;
        screened[i].score = tuple_score(space, e, screened[i].tuple, p, q, opt);
      });
      auto by_score = [](const Scored& a, const Scored& b) { return better(a.score, a.tuple, b.score, b.tuple); };
      const std::size_t quota = std::max<std::size_t>(1, (config.restarts - 2) / kFamilies);
      std::vector<Scored> rest;
      for (std::size_t f = 0; f < kFamilies; ++f) {
        auto first = screened.begin() + static_cast<std::ptrdiff_t>(f * per_family);
        std::stable_sort(first, first + static_cast<std::ptrdiff_t>(per_family), by_score);
        for (std::size_t i = 0; i < per_family; ++i) {
          if (i < quota) starts.push_back(first[static_cast<std::ptrdiff_t>(i)].tuple);
          else rest.push_back(std::move(first[static_cast<std::ptrdiff_t>(i)]));
        }
      }
      std::stable_sort(rest.begin(), rest.end(), by_score);
      for (std::size_t i = 0; starts.size() < config.restarts && i < rest.size(); ++i)
        starts.push_back(std::move(rest[i].tuple));
    }
    for (const auto& t : config.pool)
      if (t.size() > n / 2 && t.size() <= n) starts.push_back(t.functionals);

    std::vector<LocalResult> results(starts.size());
    std::vector<double> precise(starts.size());
    parallel_for(starts.size(), [&](std::size_t i) {
      SearchConfig local = config;
      local.weak.seed = derive_seed(config.weak.seed, n * 7919 + i);
      results[i] = local_search(space, e, p, q, starts[i], local, derive_seed(config.seed, n * 7919 + i));
      precise[i] = score_of(results[i].tuple);
    });
    Scored stage;
    for (std::size_t i = 0; i < results.size(); ++i) {
      est.method.evaluations += results[i].evaluations;
      offer(stage, precise[i], results[i].tuple);
    }
    offer(best, stage.score, stage.tuple);
    est.method.schedule.push_back(n);
    est.method.stage_values.push_back(best.score);
    if (best.score <= prev_value * (1.0 + config.rel_tol)) break;
    prev_value = best.score;
    prev = best.tuple;
  }

  est.witness = normalize_tuple(space, FunctionalTuple(best.tuple), q, config.weak);
  est.lower = score_of(est.witness.functionals);
  ensure_weak_norm(space, est.witness, q, config.weak);
  est.pool.push_back(est.witness);
  return est;
}

SupNorm sup_norm(const SpaceModel& space, const LatticeExpr& e, const SearchConfig& config) {
  check_expr(space, e);
  const auto cands = singleton_candidates(space, space.dual(), e, config);
  const auto singles = singleton_search(space, e, cands, config);
  SupNorm out;
  out.value = std::max(0.0, singles.best.score);
  out.witness = singles.best.tuple.empty() ? Functional(space.dim(), 0.0) : singles.best.tuple[0];
  return out;
}

FunctionalTuple inclusion_transform(const LatticeExpr& e, const FunctionalTuple& tuple, double p_to,
                                    double p_from) {
  FunctionalTuple out;
  const double exponent = (p_from - p_to) / p_to;
  for (const auto& f : tuple.functionals) {
    const double lambda = exponent == 0.0 ? 1.0 : std::pow(std::abs(evaluate(e, f)), exponent);
    Functional g = f;
    for (double& c : g) c *= lambda;
    out.functionals.push_back(std::move(g));
  }
  return out;
}

std::vector<NormEstimate> shared_pool_estimates(const SpaceModel& space, const LatticeExpr& e,
                                                std::span<const IndexPair> pairs, const SearchConfig& config) {
  std::vector<NormEstimate> ests;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    SearchConfig c = config;
    c.seed = derive_seed(config.seed, 0x9a1 + i);
    ests.push_back(pq_norm_lower(space, e, pairs[i].p, pairs[i].q, c));
  }
  // Shared pool: every witness, plus transforms of witnesses found at larger p.
  for (std::size_t a = 0; a < pairs.size(); ++a) {
    std::vector<FunctionalTuple> cands;
    for (std::size_t b = 0; b < pairs.size(); ++b) {
      cands.push_back(ests[b].witness);
      if (pairs[b].p > pairs[a].p) cands.push_back(inclusion_transform(e, ests[b].witness, pairs[a].p, pairs[b].p));
    }
    auto& est = ests[a];
    for (auto& t : cands) {
      if (t.empty()) continue;
      auto normalized = normalize_tuple(space, t, est.q, config.weak);
      normalized.cached_weak.reset();
      const double s = tuple_score(space, e, normalized.functionals, est.p, est.q, config.weak);
      if (better(s, normalized.functionals, est.lower, est.witness.functionals)) {
        est.lower = s;
        est.witness = normalized;
        ensure_weak_norm(space, est.witness, est.q, config.weak);
      }
      est.pool.push_back(std::move(normalized));
    }
  }
  return ests;
}

InclusionReport inclusion_check(const SpaceModel& space, const LatticeExpr& e, IndexPair first, IndexPair second,
                                const SearchConfig& config, double tolerance) {
  check_exponents(first.p, first.q);
  check_exponents(second.p, second.q);
  if (!(first.p <= second.p) || !(first.q <= second.q) ||
      !(1.0 / first.q - 1.0 / first.p <= 1.0 / second.q - 1.0 / second.p + 1e-15))
    throw InvalidArgument(
        "inclusion hypotheses violated: need p1 <= p2, q1 <= q2 and 1/q1 - 1/p1 <= 1/q2 - 1/p2");
  const IndexPair pairs[] = {first, second};
  auto ests = shared_pool_estimates(space, e, pairs, config);
  InclusionReport rep;
  rep.first = first;
  rep.second = second;
  rep.tolerance = tolerance;
  rep.first_estimate = std::move(ests[0]);
  rep.second_estimate = std::move(ests[1]);
  rep.ok = rep.second_estimate.lower <= rep.first_estimate.lower + tolerance;
  return rep;
}

DivergenceReport divergence_exponent(const SpaceModel& space, const LatticeExpr& e, double p, double q,
                                     std::size_t n_max, const SearchConfig& config) {
  check_expr(space, e);
  if (!(p >= 1.0) || !(q >= 1.0) || !std::isfinite(q)) throw InvalidArgument("divergence: need finite p, q >= 1");
  if (!(p < q)) throw InvalidArgument("divergence_exponent requires p < q");
  if (n_max < 2) throw InvalidArgument("divergence_exponent requires n_max >= 2");
  const auto probe = sup_norm(space, e, config);
  if (!(probe.value > 0.0)) throw InvalidArgument("expression vanishes on every probed functional");

  DivergenceReport rep;
  rep.p = p;
  rep.q = q;
  rep.expected = 1.0 / p - 1.0 / q;
  rep.probe = probe.witness;
  const double fx = std::abs(evaluate(e, probe.witness));
  for (std::size_t n = 1; n <= n_max; n *= 2) {
    const std::vector<Functional> repeated(n, probe.witness);
    std::vector<double> fv(n, fx);
    const double w = weak_q_norm(space, repeated, q, config.weak).value;
    rep.lengths.push_back(n);
    rep.scores.push_back(lp_sum(fv, p) / w);
  }
  // Least-squares slope of log score on log n.
  const std::size_t m = rep.lengths.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += std::log(static_cast<double>(rep.lengths[i]));
    my += std::log(rep.scores[i]);
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = std::log(static_cast<double>(rep.lengths[i])) - mx;
    sxy += dx * (std::log(rep.scores[i]) - my);
    sxx += dx * dx;
  }
  rep.slope = sxy / sxx;
  return rep;
}

CotypeTable cotype_ratio_experiment(double p, double q, std::span<const std::size_t> dims, std::size_t trials,
                                    const SearchConfig& config) {
  check_exponents(p, q);
  if (!(1.0 / q - 1.0 / p >= 0.5 - 1e-15))
    throw InvalidArgument("cotype experiment requires 1/q - 1/p >= 1/2");
  CotypeTable table;
  table.p = p;
  table.q = q;
  for (std::size_t d : dims) {
    const auto space = SpaceModel::lp(d, kInf);
    CotypeRow row;
    row.dim = d;
    for (std::size_t t = 0; t < trials; ++t) {
      Rng rng = make_rng(config.seed, 0xc0700 + d * 1000 + t);
      const auto e = random_lattice_expr(d, 3, 3, rng);
      SearchConfig c = config;
      c.seed = derive_seed(config.seed, d * 1000 + t);
      const double s = sup_norm(space, e, c).value;
      if (s <= 1e-12) continue;
      const double ratio = pq_norm_lower(space, e, p, q, c).lower / s;
      row.ratios.push_back(ratio);
      row.max_ratio = std::max(row.max_ratio, ratio);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace fbllab
