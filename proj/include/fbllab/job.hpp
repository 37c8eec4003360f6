#pragma once

// Job files: a space, named generators and expressions, and a list of tasks whose
// reports are written as JSON (optionally also CSV).
//
// {"seed": 7,
//  "space": {"kind": "lp", "dim": 2, "r": 2},
//  "generators": {"x": [1, 0.5]},
//  "expressions": {"f": "|x|"},
//  "tasks": [{"kind": "norm", "expr": "f", "p": 2, "q": 2, "output": "f.json"}]}

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fbllab/error.hpp"
#include "fbllab/expr.hpp"
#include "fbllab/report.hpp"
#include "fbllab/space.hpp"

namespace fbllab {

// Malformed job or task parameters. Maps to exit code 1.
class JobError : public Error {
 public:
  using Error::Error;
};

struct Task {
  std::string kind;
  Json params;
  // Report file name relative to the output directory; empty means <index>_<kind>.json.
  std::string output;
};

struct JobSpec {
  std::optional<SpaceModel> space;
  GeneratorTable generators;
  // Declaration order is kept.
  std::vector<std::pair<std::string, std::string>> expressions;
  std::vector<Task> tasks;
  std::uint64_t seed = 0;
};

inline constexpr const char* kTaskKinds[] = {"norm", "supnorm", "extend", "pietsch", "dconvex", "compare", "selftest"};

// Throws JobError (or ParseError / UnboundIdentifier / InvalidArgument from the models).
JobSpec parse_job(const Json& j);
JobSpec load_job(const std::string& path);

// Parses every expression and checks every name and parameter a task refers to.
void validate_job(const JobSpec& job);

struct TaskOutcome {
  Json report;
  // False when one of the report's invariant checks failed.
  bool ok = true;
};

TaskOutcome run_task(const JobSpec& job, const Task& task, std::size_t index);

struct RunOptions {
  std::string out_dir = ".";
  bool csv = false;
  // Progress and error lines; nullptr for silence.
  std::ostream* log = nullptr;
};

// 0: every task ran and passed its checks. 1: validation failure. 2: a check failed or
// a task raised an error while running.
int run_job(const JobSpec& job, const RunOptions& options);

// Every operation of every module on small fixed inputs, with pass/fail per check.
TaskOutcome selftest(std::uint64_t seed);

}  // namespace fbllab
