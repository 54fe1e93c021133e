#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "config.hpp"
#include "doctest.h"
#include "kdp/fields.hpp"
#include "run.hpp"

using namespace kdp;
using namespace kdp::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("kdp_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

RunConfig small_config(const fs::path& out) {
  json j = {{"mesh", {{"nx", 8}, {"ny", 8}}},
            {"solver", {{"starts", 2}}},
            {"output_dir", out.string()}};
  return parse_config(j);
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(KDP_CLI_PATH) + " " + args + " 2>/dev/null >/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> data_rows(const fs::path& file) {
  std::ifstream in(file);
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  }
  return rows;
}

}  // namespace

TEST_CASE("config defaults and round trip") {
  const RunConfig c = parse_config(json::object());
  CHECK(c.spec.nx == 32);
  CHECK(c.mode == Mode::Check);
  CHECK(c.seed == 42);
  CHECK(c.starts == 8);

  json j = to_json(c);
  j["theta"] = 1.25;
  j["mu"] = {{"family", "checkerboard"}, {"params", {0.5, 2.0, 0.25}}};
  j["f"] = {{"terms", {{2.0, 3.5}, {1.0, 4.5}}}};
  j["solver"]["preconditioner"] = "laplacian";
  j["sweep"] = {{"parameter", "a0"}, {"values", {0.0, 0.5}}};
  j["output_dir"] = "somewhere";
  const RunConfig back = parse_config(j);
  CHECK(to_json(back) == j);
  CHECK(back.spec.kirchhoff.theta == 1.25);
  CHECK(back.spec.f.terms.size() == 2);
  CHECK(back.solver.preconditioner == Preconditioner::Laplacian);
  CHECK(to_json(parse_config(json::parse(to_json(back).dump()))) == j);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config(json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"solver", {{"tol", -1.0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"p", "one"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"mode", "train"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"mu", {{"family", "linear"}, {"params", {-1.0, 0.0}}}}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"f", {{"terms", {{1.0}}}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"sweep", {{"parameter", "nx"}}}}), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  CHECK(parse_mode("fiber-plot") == Mode::FiberPlot);
  CHECK(to_string(Mode::SolveNodal) == "solve-nodal");
}

TEST_CASE("sweep parameters") {
  const ProblemSpec s;
  CHECK(with_parameter(s, "theta", 1.25).kirchhoff.theta == 1.25);
  CHECK(with_parameter(s, "r", 3.5).f.terms[0].r == 3.5);
  CHECK(with_parameter(s, "mu", 2.0).mu.params[0] == 2.0);
  CHECK_THROWS_AS(with_parameter(s, "nx", 3.0), ConfigError);
}

TEST_CASE("field and summary files") {
  const auto mesh = Mesh::build(Rect{}, 4, 4);
  const MeshFunction u = bump(mesh);
  std::ostringstream os;
  write_field(os, u);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "# vertex,x,y,value");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 25);
}

TEST_CASE("report on missing artifacts") {
  const fs::path d = scratch_dir("empty");
  const Report rep = render_report(d.string());
  CHECK_FALSE(rep.complete());
  CHECK(rep.missing.size() == 9);
  CHECK(rep.text.find("warning: partial report") != std::string::npos);
}

TEST_CASE("runs on a small mesh") {
  const fs::path d = scratch_dir("runs");
  RunConfig c = small_config(d);
  std::ostringstream log;

  c.mode = Mode::Check;
  CHECK(run(c, log) == kOk);
  for (Mode m : {Mode::SolvePositive, Mode::SolveNegative, Mode::SolveNodal}) {
    c.mode = m;
    CHECK(run(c, log) == kOk);
    for (const auto& f : artifacts_for(m)) CHECK(fs::exists(d / f));
  }
  const auto first = data_rows(d / "summary_nodal.csv");
  CHECK(run(c, log) == kOk);
  CHECK(data_rows(d / "summary_nodal.csv") == first);

  const SummaryFile s = read_summary((d / "summary_nodal.csv").string());
  CHECK(s.row.at("kind") == "nodal");
  CHECK(s.row.at("converged") == "1");

  fs::remove(d / "trace_positive.csv");
  c.mode = Mode::Report;
  CHECK(run(c, log) == kOk);
  const Report rep = render_report(d.string());
  CHECK(rep.text.find("m0 > 0: PASS") != std::string::npos);
  CHECK(rep.missing == std::vector<std::string>{"trace_positive.csv"});

  c.mode = Mode::Sweep;
  c.sweep = {"theta", {1.0, 1.25, 1.5}};
  CHECK(run(c, log) == kOk);
  CHECK(data_rows(d / "sweep.csv").size() == 4);

  c.mode = Mode::FiberPlot;
  c.fiber_grid = 21;
  CHECK(run(c, log) == kOk);
  CHECK(data_rows(d / "fiber_summary.csv").size() == 2);
}

TEST_CASE("exit codes of the driver") {
  const fs::path d = scratch_dir("exit");
  {
    std::ofstream(d / "bad.json") << "{ not json";
    std::ofstream(d / "critical.json") << R"({"f": {"terms": [[1, 6]]}, "mesh": {"nx": 6, "ny": 6}})";
    std::ofstream(d / "small.json") << R"({"mesh": {"nx": 6, "ny": 6}})";
  }
  const std::string out = " --out " + (d / "out").string();
  CHECK(run_binary("--config " + (d / "bad.json").string()) == kParseError);
  CHECK(run_binary("--mode nope") == kParseError);
  CHECK(run_binary("--workers 0") == kParseError);
  CHECK(run_binary("--config " + (d / "critical.json").string() + " --mode check" + out) ==
        kHypothesisFailure);
  CHECK(run_binary("--config " + (d / "critical.json").string() + " --mode solve-nodal" + out) ==
        kHypothesisFailure);
  CHECK(fs::exists(d / "out" / "hypotheses.csv"));
  CHECK(run_binary("--config " + (d / "small.json").string() +
                   " --mode solve-positive --seed 7" + out) == kOk);

  const std::string dump = (d / "dump.json").string();
  CHECK(std::system((std::string(KDP_CLI_PATH) + " --config " + (d / "small.json").string() +
                     " --seed 9 --dump-config > " + dump)
                        .c_str()) == 0);
  const RunConfig back = load_config(dump);
  CHECK(back.seed == 9);
  CHECK(back.spec.nx == 6);

  // Output directory from the environment when neither flag nor config sets it.
  const std::string env_dir = (d / "from_env").string();
  CHECK(std::system(("KDP_OUTPUT_DIR=" + env_dir + " " + KDP_CLI_PATH + " --config " +
                     (d / "small.json").string() + " 2>/dev/null")
                        .c_str()) == 0);
  CHECK(fs::exists(fs::path(env_dir) / "hypotheses.csv"));
}
