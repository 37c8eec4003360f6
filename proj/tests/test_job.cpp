#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "fbllab/job.hpp"
#include "fbllab/report.hpp"

using namespace fbllab;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("fbllab_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

int cli(const std::string& args, const std::string& capture = "/dev/null") {
  const int status = std::system((std::string(FBLLAB_CLI) + " " + args + " > " + capture + " 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

JobSpec job_with(const std::string& tasks) {
  return parse_job(Json::parse(R"({"seed": 3, "space": {"kind": "lp", "dim": 2, "r": 2},
    "generators": {"x": [3, 4], "y": [1, -1]}, "expressions": {"gx": "x", "f": "|x| /\\ |y|"},
    "tasks": )" + tasks + "}"));
}

}  // namespace

TEST_CASE("report schema and number format") {
  NormEstimate e;
  e.p = 2;
  e.q = 1;
  e.lower = 0.1;
  e.witness = FunctionalTuple({{1, 0}});
  e.method.seed = 5;
  e.method.schedule = {1, 2};
  const auto j = to_json(e);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"p", "q", "lower", "upper", "witness", "seed", "schedule"});
  const auto text = dump_json(j);
  CHECK(text.find("0.10000000000000001") != std::string::npos);
  CHECK(text.find("\"upper\": null") != std::string::npos);
  CHECK(Json::parse(text)["lower"].get<double>() == 0.1);

  DominationCertificate c;
  c.atoms = {{1, 0}};
  c.weights = {1};
  const auto cj = to_json(c);
  keys.clear();
  for (auto it = cj.begin(); it != cj.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"p", "C", "atoms", "weights", "constraints_used", "grid"});

  const auto csv = flatten_csv(j);
  CHECK(csv.find("witness.0.1,0\n") != std::string::npos);
  CHECK(csv.find("lower,0.10000000000000001\n") != std::string::npos);
  CHECK(number(kInf) == "inf");
}

TEST_CASE("job validation") {
  CHECK_THROWS_AS(parse_job(Json::parse(R"({"tasks": []})")), JobError);
  CHECK_NOTHROW(validate_job(job_with("[]")));
  try {
    validate_job(job_with(R"([{"kind": "norm", "expr": "nope"}])"));
    FAIL("expected JobError");
  } catch (const JobError& e) {
    CHECK(std::string(e.what()).find("nope") != std::string::npos);
  }
  CHECK_THROWS_AS(validate_job(job_with(R"([{"kind": "frobnicate"}])")), JobError);
  CHECK_THROWS_AS(validate_job(job_with(R"([{"kind": "norm", "expr": "gx", "p": "two"}])")), JobError);
  auto bad = job_with("[]");
  bad.expressions.emplace_back("h", "x + w");
  CHECK_THROWS_AS(validate_job(bad), UnboundIdentifier);
}

TEST_CASE("run_job exit codes and outputs") {
  const auto dir = scratch("run");
  RunOptions opts;
  opts.out_dir = (dir / "out").string();
  CHECK(run_job(job_with("[]"), opts) == 0);
  CHECK_FALSE(std::filesystem::exists(dir / "out"));
  CHECK(run_job(job_with(R"([{"kind": "norm", "expr": "missing"}])"), opts) == 1);

  opts.csv = true;
  CHECK(run_job(job_with(R"([{"kind": "norm", "expr": "gx", "p": 2, "q": 2, "output": "n.json"}])"), opts) == 0);
  const auto report = Json::parse(slurp(dir / "out" / "n.json"));
  CHECK(report["estimate"]["lower"].get<double>() == doctest::Approx(5).epsilon(1e-9));
  CHECK(std::filesystem::exists(dir / "out" / "n.csv"));

  // An expectation that does not hold is an invariant-violation report.
  CHECK(run_job(job_with(R"([{"kind": "dconvex", "lattice": {"kind": "lp", "dim": 2, "r": 1},
                              "samples": 50, "expect": "pass"}])"), opts) == 2);
}

TEST_CASE("same seed, same bytes") {
  const auto dir = scratch("bytes");
  RunOptions opts;
  const auto job = job_with(R"([{"kind": "pietsch", "expr": "f", "p": 2, "fresh_samples": 200},
                               {"kind": "supnorm", "expr": "f"}])");
  opts.out_dir = (dir / "a").string();
  CHECK(run_job(job, opts) == 0);
  opts.out_dir = (dir / "b").string();
  CHECK(run_job(job, opts) == 0);
  for (const char* f : {"0_pietsch.json", "1_supnorm.json"}) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
}

TEST_CASE("command line") {
  const auto dir = scratch("cli");
  CHECK(cli("frobnicate") == 64);
  CHECK(cli("") == 64);
  const auto out = (dir / "norm.json").string();
  CHECK(cli(R"(norm --space '{"kind":"lp","dim":2,"r":2}' --gen x=3,4 --expr 'x' --p 2 --q 2)", out) == 0);
  CHECK(Json::parse(slurp(out))["estimate"]["lower"].get<double>() == doctest::Approx(5).epsilon(1e-9));
  const auto orc = (dir / "oracle.json").string();
  CHECK(cli(R"(norm --space '{"kind":"lp","dim":2,"r":1}' --gen x=1,0 --gen y=0,1 --expr '|x| \/ |y|' --p 2 --q 1 --oracle --grid 0.02)", orc) == 0);
  const auto oj = Json::parse(slurp(orc));
  CHECK(oj["estimate"]["lower"].get<double>() >= oj["oracle"]["value"].get<double>() - 1e-8);
  const auto cert = (dir / "cert.json").string();
  CHECK(cli(R"(pietsch --space '{"kind":"lp","dim":2,"r":2}' --gen x=1,2 --gen y=-1,1 --expr '|x| /\ |y|' --p 2 --grid 64 --fresh_samples 500)", cert) == 0);
  const auto cj = Json::parse(slurp(cert));
  CHECK(cj["certificate"].contains("C"));
  CHECK(cj["certificate"]["grid"].get<std::size_t>() == cj["certificate"]["atoms"].size());
  CHECK(cli(R"(norm --space '{"kind":"lp","dim":2}' --gen x=1,2 --expr 'x + z')") == 1);
  CHECK(cli("run --job " + std::string(FBLLAB_DATA) + "/example_job.json --out " + (dir / "job").string()) == 0);
  CHECK(std::filesystem::exists(dir / "job" / "gx_norm.json"));
}
