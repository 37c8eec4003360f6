#include "fbllab/job.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "fbllab/homs.hpp"
#include "fbllab/pietsch.hpp"
#include "fbllab/rng.hpp"
#include "fbllab/summing.hpp"

namespace fbllab {

namespace {

// Typed access to a task's parameters; every failure names the task and key.
class Params {
 public:
  Params(const Task& task, std::size_t index)
      : j_(task.params), where_("task " + std::to_string(index) + " (" + task.kind + ")") {}

  double number(const char* key, double fallback) const {
    if (!j_.contains(key)) return fallback;
    return to_number(j_[key], key);
  }
  double number(const char* key) const {
    require(key);
    return to_number(j_[key], key);
  }
  std::size_t count(const char* key, std::size_t fallback) const {
    if (!j_.contains(key)) return fallback;
    if (!j_[key].is_number_unsigned()) fail(key, "a nonnegative integer");
    return j_[key].get<std::size_t>();
  }
  std::uint64_t seed(std::uint64_t fallback) const {
    if (!j_.contains("seed")) return fallback;
    if (!j_["seed"].is_number_unsigned()) fail("seed", "a nonnegative integer");
    return j_["seed"].get<std::uint64_t>();
  }
  bool flag(const char* key, bool fallback) const {
    if (!j_.contains(key)) return fallback;
    if (!j_[key].is_boolean()) fail(key, "a boolean");
    return j_[key].get<bool>();
  }
  std::string text(const char* key) const {
    require(key);
    return text(key, "");
  }
  std::string text(const char* key, const std::string& fallback) const {
    if (!j_.contains(key)) return fallback;
    if (!j_[key].is_string()) fail(key, "a string");
    return j_[key].get<std::string>();
  }
  std::optional<std::vector<Vector>> vectors(const char* key) const {
    if (!j_.contains(key)) return std::nullopt;
    try {
      return j_[key].get<std::vector<Vector>>();
    } catch (const Json::exception&) {
      fail(key, "an array of number arrays");
    }
  }
  std::vector<std::size_t> counts(const char* key, std::vector<std::size_t> fallback) const {
    if (!j_.contains(key)) return fallback;
    try {
      return j_[key].get<std::vector<std::size_t>>();
    } catch (const Json::exception&) {
      fail(key, "an array of nonnegative integers");
    }
  }
  const Json* object(const char* key) const { return j_.contains(key) ? &j_[key] : nullptr; }
  [[noreturn]] void error(const std::string& what) const { throw JobError(where_ + ": " + what); }

 private:
  void require(const char* key) const {
    if (!j_.contains(key)) error(std::string("missing \"") + key + "\"");
  }
  [[noreturn]] void fail(const char* key, const char* expected) const {
    error(std::string("\"") + key + "\" must be " + expected);
  }
  double to_number(const Json& v, const char* key) const {
    if (v.is_number()) return v.get<double>();
    if (v.is_string() && v.get<std::string>() == "inf") return kInf;
    fail(key, "a number or \"inf\"");
  }

  const Json& j_;
  std::string where_;
};

LatticeExpr lookup_expr(const JobSpec& job, const Params& params) {
  const std::string name = params.text("expr");
  for (const auto& [n, text] : job.expressions)
    if (n == name) return parse_expr(text, job.generators);
  params.error("unknown expression '" + name + "'");
}

const SpaceModel& need_space(const JobSpec& job, const Params& params) {
  if (!job.space) params.error("the job has no \"space\"");
  return *job.space;
}

SearchConfig search_config(const Params& params, std::uint64_t seed) {
  SearchConfig c;
  c.seed = seed;
  c.restarts = params.count("restarts", c.restarts);
  c.max_length = params.count("max_length", c.max_length);
  if (c.max_length == 0) params.error("\"max_length\" must be positive");
  return c;
}

TaskOutcome run_norm(const JobSpec& job, const Params& pr, std::uint64_t seed, bool dry) {
  const auto& space = need_space(job, pr);
  const auto e = lookup_expr(job, pr);
  const double p = pr.number("p", 2.0);
  const double q = pr.number("q", p);
  const auto config = search_config(pr, seed);
  const bool oracle = pr.flag("oracle", false);
  const double grid = pr.number("grid", 0.01);
  const std::size_t max_len = pr.count("max_len", 2);
  if (dry) return {};
  TaskOutcome out;
  const auto est = pq_norm_lower(space, e, p, q, config);
  out.report["estimate"] = to_json(est);
  if (oracle) {
    const double value = pq_norm_bruteforce(space, e, p, q, grid, max_len);
    Json o;
    o["grid"] = number(grid);
    o["max_len"] = max_len;
    o["value"] = number(value);
    // The estimator must not lose to the grid and must not exceed it wildly.
    o["not_below"] = est.lower >= value - 1e-8;
    o["within_5pct"] = est.lower <= value * 1.05 + 1e-12;
    out.ok = o["not_below"].get<bool>() && o["within_5pct"].get<bool>();
    out.report["oracle"] = std::move(o);
  }
  return out;
}

TaskOutcome run_supnorm(const JobSpec& job, const Params& pr, std::uint64_t seed, bool dry) {
  const auto& space = need_space(job, pr);
  const auto e = lookup_expr(job, pr);
  const auto config = search_config(pr, seed);
  if (dry) return {};
  TaskOutcome out;
  out.report["supnorm"] = to_json(sup_norm(space, e, config));
  return out;
}

TaskOutcome run_extend(const JobSpec& job, const Params& pr, std::uint64_t seed, bool dry) {
  const auto& space = need_space(job, pr);
  const auto e = lookup_expr(job, pr);
  const double p = pr.number("p", 2.0);
  auto tuple = pr.vectors("tuple");
  const std::size_t length = pr.count("length", 3);
  const bool upper = pr.flag("pietsch", false);
  const std::size_t grid = pr.count("grid", 64);
  auto config = search_config(pr, seed);
  if (tuple)
    for (const auto& f : *tuple)
      if (f.size() != space.dim()) pr.error("tuple functional of dimension " + std::to_string(f.size()));
  if (upper && std::isinf(p)) pr.error("\"pietsch\" needs finite p");
  if (dry) return {};

  if (!tuple) {
    Rng rng = make_rng(seed, 0xe7);
    std::normal_distribution<double> normal;
    tuple.emplace(length, Functional(space.dim()));
    for (auto& f : *tuple)
      for (double& c : f) c = normal(rng);
  }
  const FunctionalTuple t(*tuple);
  const auto ext = extend_to_lp(space, generators_of(e), t, p);
  TaskOutcome out;
  out.report["extension"] = to_json(ext);
  Json image = Json::array();
  for (double v : apply_hom(ext, e)) image.push_back(number(v));
  out.report["image"] = std::move(image);
  if (std::isinf(p)) {
    // The l_inf target has no (p,p) norm to compare against; report the image only.
    return out;
  }
  config.pool.push_back(t);
  auto est = pq_norm_lower(space, e, p, p, config);
  if (upper) {
    PietschConfig pc;
    pc.seed = derive_seed(seed, 0x9e7);
    pc.atom_grid = grid;
    pc.witness_tuples = {est.witness, t};
    attach_upper(est, pietsch_certificate(space, LatticeExpr::abs(e), p, pc));
  }
  const auto rep = verify_extension_bound(space, e, ext, est);
  out.report["estimate"] = to_json(est);
  out.report["check"] = to_json(rep);
  out.ok = rep.ok();
  return out;
}

TaskOutcome run_pietsch(const JobSpec& job, const Params& pr, std::uint64_t seed, bool dry) {
  const auto& space = need_space(job, pr);
  const auto e = lookup_expr(job, pr);
  const double p = pr.number("p", 2.0);
  if (std::isinf(p)) pr.error("\"p\" must be finite");
  PietschConfig pc;
  pc.seed = derive_seed(seed, 0x9e7);
  pc.atom_grid = pr.count("grid", pc.atom_grid);
  pc.constraint_samples = pr.count("constraint_samples", pc.constraint_samples);
  const std::size_t fresh = pr.count("fresh_samples", 10000);
  const double tol = pr.number("fmu_tolerance", 0.02);
  const auto config = search_config(pr, seed);
  if (dry) return {};
  TaskOutcome out;
  auto est = pq_norm_lower(space, e, p, p, config);
  pc.witness_tuples = {est.witness};
  const auto cert = pietsch_certificate(space, e, p, pc);
  const auto rep = verify_certificate(space, e, cert, fresh, derive_seed(seed, 0xfe5), tol);
  attach_upper(est, cert);
  // The certificate constrains the witness functionals, so C >= lower.
  const bool consistent = cert.C >= est.lower - 1e-6;
  out.report["estimate"] = to_json(est);
  out.report["certificate"] = to_json(cert);
  out.report["verification"] = to_json(rep);
  out.report["C_at_least_lower"] = consistent;
  out.ok = rep.ok() && consistent;
  return out;
}

TaskOutcome run_dconvex(const JobSpec& job, const Params& pr, std::uint64_t seed, bool dry) {
  std::optional<SpaceModel> lattice;
  if (const auto* l = pr.object("lattice")) {
    lattice = SpaceModel::from_json(nlohmann::json(*l));
  } else {
    lattice = need_space(job, pr);
  }
  const double s = pr.number("s", 2.0);
  const double theta = pr.number("theta", 1.0);
  const double M = pr.number("M", 1.0);
  const std::size_t samples = pr.count("samples", 10000);
  const std::size_t arity = pr.count("arity", 2);
  const std::string expect = pr.text("expect", "");
  if (theta != 0.0 && theta != 1.0) pr.error("\"theta\" must be 0 or 1");
  if (!expect.empty() && expect != "pass" && expect != "fail") pr.error("\"expect\" must be \"pass\" or \"fail\"");
  if (dry) return {};
  TaskOutcome out;
  const auto rep = dconvexity_check(s, static_cast<int>(theta), M, *lattice, samples, arity, seed);
  out.report["lattice"] = lattice->to_json();
  out.report["dconvexity"] = to_json(rep);
  if (!expect.empty()) {
    out.report["expect"] = expect;
    out.ok = (rep.violations == 0) == (expect == "pass");
  }
  return out;
}

TaskOutcome run_compare(const JobSpec& job, const Params& pr, std::uint64_t seed, bool dry) {
  const std::string mode = pr.text("mode");
  const auto config = search_config(pr, seed);
  if (mode == "inclusion") {
    const auto& space = need_space(job, pr);
    const auto e = lookup_expr(job, pr);
    const IndexPair first{pr.number("p1"), pr.number("q1")};
    const IndexPair second{pr.number("p2"), pr.number("q2")};
    const double tol = pr.number("tolerance", 1e-8);
    if (dry) return {};
    TaskOutcome out;
    const auto rep = inclusion_check(space, e, first, second, config, tol);
    out.report["inclusion"] = to_json(rep);
    out.ok = rep.ok;
    return out;
  }
  if (mode == "divergence") {
    const auto& space = need_space(job, pr);
    const auto e = lookup_expr(job, pr);
    const double p = pr.number("p");
    const double q = pr.number("q");
    const std::size_t n_max = pr.count("n_max", 64);
    if (dry) return {};
    TaskOutcome out;
    const auto rep = divergence_exponent(space, e, p, q, n_max, config);
    out.report["divergence"] = to_json(rep);
    out.ok = std::abs(rep.slope - rep.expected) <= 1e-6;
    return out;
  }
  if (mode == "cotype") {
    const double p = pr.number("p");
    const double q = pr.number("q");
    const auto dims = pr.counts("dims", {2, 4, 8});
    const std::size_t trials = pr.count("trials", 4);
    if (dry) return {};
    TaskOutcome out;
    out.report["cotype"] = to_json(cotype_ratio_experiment(p, q, dims, trials, config));
    return out;
  }
  pr.error("\"mode\" must be \"inclusion\", \"divergence\" or \"cotype\"");
}

TaskOutcome dispatch(const JobSpec& job, const Task& task, std::size_t index, bool dry) {
  const Params pr(task, index);
  if (!task.params.is_object()) pr.error("task must be a JSON object");
  const std::uint64_t seed = pr.seed(job.seed);
  if (task.kind == "norm") return run_norm(job, pr, seed, dry);
  if (task.kind == "supnorm") return run_supnorm(job, pr, seed, dry);
  if (task.kind == "extend") return run_extend(job, pr, seed, dry);
  if (task.kind == "pietsch") return run_pietsch(job, pr, seed, dry);
  if (task.kind == "dconvex") return run_dconvex(job, pr, seed, dry);
  if (task.kind == "compare") return run_compare(job, pr, seed, dry);
  if (task.kind == "selftest") return dry ? TaskOutcome{} : selftest(seed);
  pr.error("unknown task kind");
}

std::string output_name(const Task& task, std::size_t index) {
  return task.output.empty() ? std::to_string(index) + "_" + task.kind + ".json" : task.output;
}

}  // namespace

JobSpec parse_job(const Json& j) {
  if (!j.is_object()) throw JobError("job must be a JSON object");
  JobSpec job;
  if (!j.contains("seed") || !j["seed"].is_number_unsigned())
    throw JobError("job: \"seed\" must be present and a nonnegative integer");
  job.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("space")) job.space = SpaceModel::from_json(nlohmann::json(j["space"]));
  if (j.contains("generators")) {
    if (!j["generators"].is_object()) throw JobError("job: \"generators\" must be an object");
    for (const auto& [name, v] : j["generators"].items()) {
      try {
        job.generators[name] = v.get<Vector>();
      } catch (const Json::exception&) {
        throw JobError("job: generator '" + name + "' must be an array of numbers");
      }
      if (job.space && job.generators[name].size() != job.space->dim())
        throw JobError("job: generator '" + name + "' has dimension " + std::to_string(job.generators[name].size()) +
                       ", space has " + std::to_string(job.space->dim()));
    }
  }
  if (j.contains("expressions")) {
    if (!j["expressions"].is_object()) throw JobError("job: \"expressions\" must be an object");
    for (const auto& [name, v] : j["expressions"].items()) {
      if (!v.is_string()) throw JobError("job: expression '" + name + "' must be a string");
      job.expressions.emplace_back(name, v.get<std::string>());
    }
  }
  if (j.contains("tasks")) {
    if (!j["tasks"].is_array()) throw JobError("job: \"tasks\" must be an array");
    for (const auto& t : j["tasks"]) {
      if (!t.is_object() || !t.contains("kind") || !t["kind"].is_string())
        throw JobError("job: every task needs a string \"kind\"");
      Task task;
      task.kind = t["kind"].get<std::string>();
      task.params = t;
      if (t.contains("output")) {
        if (!t["output"].is_string()) throw JobError("job: task \"output\" must be a string");
        task.output = t["output"].get<std::string>();
      }
      job.tasks.push_back(std::move(task));
    }
  }
  return job;
}

JobSpec load_job(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw JobError("cannot open job file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& err) {
    throw JobError(std::string("job file is not valid JSON: ") + err.what());
  }
  return parse_job(j);
}

void validate_job(const JobSpec& job) {
  for (const auto& [name, text] : job.expressions) {
    const auto e = parse_expr(text, job.generators);
    if (job.space && e.dim() != job.space->dim())
      throw JobError("expression '" + name + "' has dimension " + std::to_string(e.dim()));
  }
  for (std::size_t i = 0; i < job.tasks.size(); ++i) dispatch(job, job.tasks[i], i, true);
}

TaskOutcome run_task(const JobSpec& job, const Task& task, std::size_t index) {
  TaskOutcome body = dispatch(job, task, index, false);
  TaskOutcome out;
  out.ok = body.ok;
  out.report["task"] = task.kind;
  out.report["index"] = index;
  out.report["seed"] = Params(task, index).seed(job.seed);
  if (task.params.contains("expr")) out.report["expr"] = task.params["expr"];
  if (job.space && task.kind != "selftest" && task.kind != "dconvex") out.report["space"] = job.space->to_json();
  for (auto it = body.report.begin(); it != body.report.end(); ++it) out.report[it.key()] = it.value();
  out.report["ok"] = out.ok;
  return out;
}

int run_job(const JobSpec& job, const RunOptions& options) {
  try {
    validate_job(job);
  } catch (const Error& err) {
    if (options.log) *options.log << "error: " << err.what() << "\n";
    return 1;
  }
  if (job.tasks.empty()) return 0;
  std::filesystem::create_directories(options.out_dir);
  int code = 0;
  for (std::size_t i = 0; i < job.tasks.size(); ++i) {
    const auto& task = job.tasks[i];
    TaskOutcome out;
    try {
      out = run_task(job, task, i);
    } catch (const Error& err) {
      if (options.log) *options.log << "error: task " << i << " (" << task.kind << "): " << err.what() << "\n";
      code = 2;
      continue;
    }
    const std::filesystem::path path = std::filesystem::path(options.out_dir) / output_name(task, i);
    std::ofstream(path, std::ios::binary) << dump_json(out.report);
    if (options.csv) {
      auto csv = path;
      csv.replace_extension(".csv");
      std::ofstream(csv, std::ios::binary) << flatten_csv(out.report);
    }
    if (options.log)
      *options.log << (out.ok ? "ok    " : "FAIL  ") << task.kind << " -> " << path.string() << "\n";
    if (!out.ok) code = 2;
  }
  return code;
}

}  // namespace fbllab
