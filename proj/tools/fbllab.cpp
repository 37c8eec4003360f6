// Command-line driver. Every subcommand except `run` builds a one-task job from its
// flags, so the two paths share validation, seeding and report format.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fbllab/job.hpp"

namespace {

using fbllab::Json;

constexpr int kUsage = 64;

struct Common {
  std::string job;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  bool csv = false;
  std::string space;
  std::vector<std::string> gens;
  std::string expr;
};

// name=v1,v2,...
std::pair<std::string, fbllab::Vector> parse_gen(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw fbllab::JobError("--gen expects name=v1,v2,...");
  fbllab::Vector v;
  std::stringstream in(s.substr(eq + 1));
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw fbllab::JobError("--gen: '" + item + "' is not a number");
    }
  }
  return {s.substr(0, eq), v};
}

// Job built from --job (if any) plus the inline --space / --gen / --expr flags.
fbllab::JobSpec base_job(const Common& c, const std::string& kind, Json params) {
  fbllab::JobSpec job;
  if (!c.job.empty()) job = fbllab::load_job(c.job);
  if (c.seed_set) job.seed = c.seed;
  if (!c.space.empty()) {
    try {
      job.space = fbllab::SpaceModel::from_json(nlohmann::json::parse(c.space));
    } catch (const nlohmann::json::parse_error&) {
      throw fbllab::JobError("--space must be a JSON space description");
    }
  }
  for (const auto& g : c.gens) {
    auto [name, v] = parse_gen(g);
    job.generators[name] = v;
  }
  if (!c.expr.empty()) {
    // A name from the job file, or else an expression in the generators.
    bool named = false;
    for (const auto& [n, text] : job.expressions) named = named || n == c.expr;
    if (!named) job.expressions.emplace_back("expr", c.expr);
    params["expr"] = named ? c.expr : "expr";
  }
  params["kind"] = kind;
  fbllab::Task task;
  task.kind = kind;
  task.params = std::move(params);
  job.tasks = {std::move(task)};
  return job;
}

int emit(const fbllab::JobSpec& job, const Common& c) {
  try {
    fbllab::validate_job(job);
  } catch (const fbllab::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  fbllab::TaskOutcome out;
  try {
    out = fbllab::run_task(job, job.tasks[0], 0);
  } catch (const fbllab::InvalidArgument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const fbllab::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  const std::string text = c.csv ? fbllab::flatten_csv(out.report) : fbllab::dump_json(out.report);
  if (c.out.empty()) {
    std::cout << text;
  } else {
    std::filesystem::create_directories(c.out);
    const auto path = std::filesystem::path(c.out) / (job.tasks[0].kind + (c.csv ? ".csv" : ".json"));
    std::ofstream(path, std::ios::binary) << text;
    std::cerr << (out.ok ? "ok    " : "FAIL  ") << path.string() << "\n";
  }
  return out.ok ? 0 : 2;
}

// Flag values that were given, keyed by their job-file names.
struct Flags {
  std::map<std::string, double> numbers;
  std::map<std::string, std::string> strings;
  std::map<std::string, std::size_t> counts;
  std::map<std::string, bool> switches;
  std::map<std::string, std::vector<std::size_t>> lists;

  void number(CLI::App* app, const std::string& key, const std::string& help) {
    app->add_option("--" + key, numbers[key], help);
  }
  void count(CLI::App* app, const std::string& key, const std::string& help) {
    app->add_option("--" + key, counts[key], help);
  }
  void text(CLI::App* app, const std::string& key, const std::string& help) {
    app->add_option("--" + key, strings[key], help);
  }
  void flag(CLI::App* app, const std::string& key, const std::string& help) {
    app->add_flag("--" + key, switches[key], help);
  }
  void list(CLI::App* app, const std::string& key, const std::string& help) {
    app->add_option("--" + key, lists[key], help)->delimiter(',');
  }

  Json params(const CLI::App* app) const {
    Json j = Json::object();
    auto given = [&](const std::string& key) { return app->count("--" + key) > 0; };
    for (const auto& [k, v] : numbers)
      if (given(k)) j[k] = v;
    for (const auto& [k, v] : counts)
      if (given(k)) j[k] = v;
    for (const auto& [k, v] : strings)
      if (given(k)) j[k] = v;
    for (const auto& [k, v] : switches)
      if (given(k)) j[k] = v;
    for (const auto& [k, v] : lists)
      if (given(k)) j[k] = v;
    return j;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fbllab: norms of free p-convex Banach lattices over finite-dimensional spaces"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&](CLI::App* sub, bool with_expr) {
    sub->add_option("--job", common.job, "job file supplying space, generators and expressions");
    sub->add_option("--seed", common.seed, "master seed")->each([&](const std::string&) { common.seed_set = true; });
    sub->add_option("--out", common.out, "directory for the report (default: stdout)");
    sub->add_flag("--csv", common.csv, "flatten the report to key,value CSV");
    sub->add_option("--space", common.space, "space as JSON, e.g. {\"kind\":\"lp\",\"dim\":2,\"r\":2}");
    sub->add_option("--gen", common.gens, "generator name=v1,v2,... (repeatable)");
    if (with_expr) sub->add_option("--expr", common.expr, "expression name from the job, or expression text");
  };

  std::map<std::string, Flags> flags;
  std::map<std::string, CLI::App*> subs;
  auto add = [&](const std::string& name, const std::string& help, bool with_expr) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, with_expr);
    subs[name] = sub;
    return sub;
  };

  {
    auto* s = add("norm", "lower estimate of the (p,q) norm, optionally against the grid oracle", true);
    auto& f = flags["norm"];
    f.number(s, "p", "p (default 2)");
    f.number(s, "q", "q (default p)");
    f.count(s, "restarts", "local searches per tuple length");
    f.count(s, "max_length", "largest tuple length");
    f.flag(s, "oracle", "also run the brute-force grid oracle (dim <= 2)");
    f.number(s, "grid", "oracle grid step (default 0.01)");
    f.count(s, "max_len", "oracle tuple length (default 2)");
  }
  {
    auto* s = add("supnorm", "sup of |f| over the dual unit ball", true);
    auto& f = flags["supnorm"];
    f.count(s, "restarts", "local searches");
  }
  {
    auto* s = add("extend", "extension into l_p^n and its bound against the free norm", true);
    auto& f = flags["extend"];
    f.number(s, "p", "target l_p (default 2)");
    f.count(s, "length", "random tuple length when the job gives none (default 3)");
    f.flag(s, "pietsch", "also compare against a Pietsch upper estimate");
    f.count(s, "grid", "atom grid size for --pietsch");
  }
  {
    auto* s = add("pietsch", "Pietsch domination certificate and its verification", true);
    auto& f = flags["pietsch"];
    f.number(s, "p", "p (default 2)");
    f.count(s, "grid", "atom grid size (default 64)");
    f.count(s, "constraint_samples", "sampled constraint functionals (default 256)");
    f.count(s, "fresh_samples", "fresh functionals for verification (default 10000)");
    f.number(s, "fmu_tolerance", "allowed excess of the f_mu norm over 1 (default 0.02)");
  }
  {
    auto* s = add("dconvex", "fuzz the D-convexity inequality in a weighted l_r lattice", false);
    auto& f = flags["dconvex"];
    f.number(s, "s", "g is the l_s-sum (default 2)");
    f.number(s, "theta", "0: disjoint tuples only, 1: all positive tuples (default 1)");
    f.number(s, "M", "constant (default 1)");
    f.count(s, "samples", "number of samples (default 10000)");
    f.count(s, "arity", "tuple size (default 2)");
    f.text(s, "expect", "pass or fail");
  }
  {
    auto* s = add("compare", "inclusion, divergence and cotype experiments", true);
    auto& f = flags["compare"];
    f.text(s, "mode", "inclusion | divergence | cotype");
    for (const char* k : {"p1", "q1", "p2", "q2", "p", "q", "tolerance"}) f.number(s, k, k);
    f.count(s, "n_max", "largest repetition count (divergence)");
    f.list(s, "dims", "dimensions (cotype)");
    f.count(s, "trials", "expressions per dimension (cotype)");
    f.count(s, "restarts", "local searches per tuple length");
    f.count(s, "max_length", "largest tuple length");
  }
  add("selftest", "run every module's invariant checks", false);
  auto* run = app.add_subcommand("run", "execute a job file");
  run->add_option("--job", common.job, "job file")->required();
  run->add_option("--seed", common.seed, "override the job seed")->each([&](const std::string&) { common.seed_set = true; });
  run->add_option("--out", common.out, "output directory (default .)");
  run->add_flag("--csv", common.csv, "also write CSV reports");

  const std::string first = argc > 1 ? argv[1] : "";
  if (first.empty() || (first[0] != '-' && !subs.count(first) && first != "run")) {
    std::cerr << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (run->parsed()) {
      auto job = fbllab::load_job(common.job);
      if (common.seed_set) job.seed = common.seed;
      fbllab::RunOptions opts;
      opts.out_dir = common.out.empty() ? "." : common.out;
      opts.csv = common.csv;
      opts.log = &std::cerr;
      return fbllab::run_job(job, opts);
    }
    for (const auto& [name, sub] : subs) {
      if (!sub->parsed()) continue;
      const Json params = flags.count(name) ? flags[name].params(sub) : Json::object();
      return emit(base_job(common, name, params), common);
    }
  } catch (const fbllab::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  std::cerr << app.help();
  return kUsage;
}
