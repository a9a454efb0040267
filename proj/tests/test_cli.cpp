// End-to-end checks of the command-line tool: exit codes, diagnostics on bad
// inputs, determinism of training artifacts and the trace files each
// subcommand leaves behind. The binary path comes in via PSWALK_TOOL_PATH.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "doctest.h"
#include "pswalk/config.hpp"
#include "pswalk/rbf_net.hpp"
#include "pswalk/version.hpp"

using namespace pswalk;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  REQUIRE(out.good());
}

fs::path work_dir() {
  const auto d = fs::temp_directory_path() / "pswalk_cli_test";
  fs::create_directories(d);
  return d;
}

// Runs the tool with the given arguments, capturing both streams.
RunResult run_tool(const std::string& args) {
  static int counter = 0;
  const auto out_file = work_dir() / ("stdout" + std::to_string(counter));
  const auto err_file = work_dir() / ("stderr" + std::to_string(counter));
  ++counter;
  const std::string cmd = std::string(PSWALK_TOOL_PATH) + " " + args + " > " +
                          out_file.string() + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = (status >= 0 && (status & 0x7f) == 0) ? (status >> 8) & 0xff
                                                      : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

// Config that skips the learning loop: the checkpoint then holds the
// untrained nets, which walk the nominal gait without turning.
fs::path zero_iter_config() {
  const auto p = work_dir() / "zero_iter.json";
  spit(p, "{\"learning\": {\"max_iterations\": 0}}\n");
  return p;
}

// Untrained checkpoint produced once by the tool itself; later cases reuse it.
fs::path seed_checkpoint() {
  static fs::path ckpt;
  if (ckpt.empty()) {
    const auto out = work_dir() / "seed_train";
    const auto r = run_tool("train --config " + zero_iter_config().string() +
                            " --out " + out.string());
    REQUIRE(r.exit_code == 0);
    ckpt = out / "checkpoint.bin";
    REQUIRE(fs::exists(ckpt));
  }
  return ckpt;
}

}  // namespace

TEST_CASE("version flag reports the tool name and exits cleanly") {
  const auto r = run_tool("--version");
  CHECK(r.exit_code == 0);
  CHECK(r.out == std::string(kToolName) + " " + kToolVersion + "\n");
}

TEST_CASE("missing or unknown subcommands are usage errors") {
  CHECK(run_tool("").exit_code == 2);
  CHECK(run_tool("bogus").exit_code == 2);
  CHECK(run_tool("plan").exit_code == 2);  // --checkpoint is required
  CHECK(run_tool("walk --checkpoint x.bin").exit_code == 2);
  CHECK(run_tool("train --format xml").exit_code == 2);
}

TEST_CASE("config problems exit 2 and name the file") {
  const auto bad = work_dir() / "bad.json";
  spit(bad, "{");
  auto r = run_tool("train --config " + bad.string());
  CHECK(r.exit_code == 2);
  CHECK(contains(r.err, "config error"));
  CHECK(contains(r.err, bad.string()));

  const auto invalid = work_dir() / "invalid.json";
  spit(invalid, R"({"pendulum": {"com_height": -1}})");
  r = run_tool("train --config " + invalid.string());
  CHECK(r.exit_code == 2);
  CHECK(contains(r.err, "pendulum.com_height"));

  r = run_tool("train --config /nonexistent/cfg.json");
  CHECK(r.exit_code == 2);
  CHECK(contains(r.err, "cannot open"));
}

TEST_CASE("train with zero iterations writes the untrained nets") {
  const auto out = work_dir() / "train0";
  const auto r = run_tool("train --config " + zero_iter_config().string() +
                          " --out " + out.string());
  REQUIRE(r.exit_code == 0);
  CHECK(contains(r.out, "iterations 0 converged false"));

  // The checkpoint must hold exactly what a fresh in-process setup holds.
  cfg::RunConfig rc;
  rc.learning.max_iterations = 0;
  const auto reference = work_dir() / "reference.bin";
  REQUIRE(rbf::save_checkpoint(reference.string(),
                               {cfg::initial_nets(rc).value,
                                cfg::initial_nets(rc).policy})
              .ok());
  CHECK(slurp(out / "checkpoint.bin") == slurp(reference));

  const json rep = json::parse(slurp(out / "training_report.json"));
  CHECK(rep["iterations"] == 0);
  CHECK(rep["converged"] == false);
  CHECK(rep["meta"]["tool"] == kToolName);
  CHECK(rep["meta"]["config_hash"] ==
        cfg::config_hash_hex(cfg::parse_config(slurp(zero_iter_config())).value()));
}

TEST_CASE("training is reproducible per seed") {
  const auto cfg_path = work_dir() / "short.json";
  spit(cfg_path, R"({"learning": {"max_iterations": 200}})");
  const std::string base = "train --config " + cfg_path.string();
  const auto a = work_dir() / "seed5a";
  const auto b = work_dir() / "seed5b";
  const auto c = work_dir() / "seed6";
  REQUIRE(run_tool(base + " --seed 5 --out " + a.string()).exit_code == 0);
  REQUIRE(run_tool(base + " --seed 5 --out " + b.string()).exit_code == 0);
  REQUIRE(run_tool(base + " --seed 6 --out " + c.string()).exit_code == 0);
  const auto bytes_a = slurp(a / "checkpoint.bin");
  CHECK(bytes_a == slurp(b / "checkpoint.bin"));
  CHECK(bytes_a != slurp(c / "checkpoint.bin"));

  // The seed override lands in the report.
  CHECK(json::parse(slurp(a / "training_report.json"))["seed"] == 5);
  CHECK(json::parse(slurp(c / "training_report.json"))["seed"] == 6);
}

TEST_CASE("plan from the default apex fills the requested steps") {
  const auto out = work_dir() / "plan_ok";
  const auto r = run_tool("plan --checkpoint " + seed_checkpoint().string() +
                          " --out " + out.string());
  REQUIRE(r.exit_code == 0);
  CHECK(contains(r.out, "planned wall"));
  CHECK(contains(r.out, "for 15 steps"));

  const json doc = json::parse(slurp(out / "plan.json"));
  CHECK(doc["steps_planned"] == 15);
  CHECK(doc["terminated"] == false);
  CHECK(doc["steps"].size() == 15);
  // No --config given: the trace must carry the compiled-default hash.
  CHECK(doc["meta"]["config_hash"] == cfg::config_hash_hex(cfg::RunConfig{}));
}

TEST_CASE("plan from a dead apex is a domain failure") {
  const auto out = work_dir() / "plan_dead";
  const auto r = run_tool("plan --checkpoint " + seed_checkpoint().string() +
                          " --apex 0 0 0 --out " + out.string());
  CHECK(r.exit_code == 1);
  CHECK(contains(r.err, "terminal after 0 of 15 steps"));
}

TEST_CASE("plan bench mode reports the median decision time") {
  const auto out = work_dir() / "plan_bench";
  const auto r = run_tool("plan --checkpoint " + seed_checkpoint().string() +
                          " --bench --out " + out.string());
  REQUIRE(r.exit_code == 0);
  CHECK(contains(r.out, "median wall"));
}

TEST_CASE("plan with a missing checkpoint exits 2") {
  const auto r = run_tool("plan --checkpoint /nonexistent/ckpt.bin");
  CHECK(r.exit_code == 2);
  CHECK(contains(r.err, "/nonexistent/ckpt.bin"));
}

TEST_CASE("walk runs a scripted scenario and respects --format") {
  const auto scn = work_dir() / "flat.json";
  spit(scn,
       R"({"name": "flat", "start": [0.056, 0.2, 0.0], "turns_deg": [0, 0, 0, 0]})");
  const std::string base = "walk --checkpoint " + seed_checkpoint().string() +
                           " --scenario " + scn.string();

  const auto both = work_dir() / "walk_both";
  const auto r = run_tool(base + " --out " + both.string());
  REQUIRE(r.exit_code == 0);
  CHECK(contains(r.out, "scenario flat: steps 4/4"));
  CHECK(contains(r.out, "fell false"));
  CHECK(fs::exists(both / "walk.csv"));
  CHECK(fs::exists(both / "walk.json"));

  // CSV header block: tool line then config hash line.
  std::istringstream csv(slurp(both / "walk.csv"));
  std::string line1, line2, line3;
  std::getline(csv, line1);
  std::getline(csv, line2);
  std::getline(csv, line3);
  CHECK(line1 == std::string("# ") + kToolName + " " + kToolVersion);
  CHECK(line2 == std::string("# config ") +
                     cfg::config_hash_hex(cfg::RunConfig{}));
  CHECK(line3 == "t,x,xdot,y,ydot,foot_x,foot_y,heading,event");

  const auto csv_only = work_dir() / "walk_csv";
  REQUIRE(run_tool(base + " --format csv --out " + csv_only.string())
              .exit_code == 0);
  CHECK(fs::exists(csv_only / "walk.csv"));
  CHECK(!fs::exists(csv_only / "walk.json"));

  const auto json_only = work_dir() / "walk_json";
  REQUIRE(run_tool(base + " --format json --out " + json_only.string())
              .exit_code == 0);
  CHECK(!fs::exists(json_only / "walk.csv"));
  CHECK(fs::exists(json_only / "walk.json"));
}

TEST_CASE("walk reports a fall through the exit code") {
  const auto scn = work_dir() / "shove.json";
  spit(scn, R"({"name": "shove", "start": [0.056, 0.2, 0.0],
                "turns_deg": [0, 0, 0, 0],
                "disturbances": [{"time": 0.3, "delta_v": [2.0, 0.0]}]})");
  const auto out = work_dir() / "walk_fall";
  const auto r = run_tool("walk --checkpoint " + seed_checkpoint().string() +
                          " --scenario " + scn.string() + " --out " +
                          out.string());
  CHECK(r.exit_code == 1);
  CHECK(contains(r.out, "fell true"));
  const json doc = json::parse(slurp(out / "walk.json"));
  CHECK(doc["summary"]["fell"] == true);
}

TEST_CASE("walk rejects malformed scenarios with a diagnostic") {
  const auto scn = work_dir() / "empty_turns.json";
  spit(scn, R"({"turns_deg": []})");
  const auto r = run_tool("walk --checkpoint " + seed_checkpoint().string() +
                          " --scenario " + scn.string());
  CHECK(r.exit_code == 2);
  CHECK(contains(r.err, "scenario error"));
  CHECK(contains(r.err, "turns_deg"));
}

TEST_CASE("track compares the velocity-product toggle in one run") {
  const auto cfg_path = work_dir() / "arm_short.json";
  spit(cfg_path, R"({"arm": {"duration": 0.3}})");
  const auto out = work_dir() / "track_out";
  const auto r = run_tool("track --config " + cfg_path.string() + " --out " +
                          out.string());
  REQUIRE(r.exit_code == 0);
  CHECK(contains(r.out, "rms with jdot"));
  CHECK(contains(r.out, "rms without jdot"));
  CHECK(contains(r.out, "ratio without/with"));

  const json doc = json::parse(slurp(out / "track.json"));
  CHECK(doc["with_jdot"]["used_jdot"] == true);
  CHECK(doc["without_jdot"]["used_jdot"] == false);
  CHECK(doc["rms_ratio"].get<double>() > 1.0);
  CHECK(fs::exists(out / "track.csv"));
}

TEST_CASE("sweep pushes eight directions and tallies recoveries") {
  // A small shove keeps the untrained nominal gait upright in every
  // direction, so the tally is deterministic.
  const auto out = work_dir() / "sweep_out";
  const auto r = run_tool("sweep --checkpoint " + seed_checkpoint().string() +
                          " --force 10 --out " + out.string());
  REQUIRE(r.exit_code == 0);
  CHECK(contains(r.out, "recovered 8/8"));

  const json doc = json::parse(slurp(out / "sweep.json"));
  CHECK(doc["summary"]["directions"] == 8);
  CHECK(doc["summary"]["recovered"] == 8);
  REQUIRE(doc["rows"].size() == 8);
  for (int k = 0; k < 8; ++k) {
    CHECK(doc["rows"][k]["direction_deg"] == 45.0 * k);
    CHECK(doc["rows"][k]["recovered"] == true);
  }
  CHECK(fs::exists(out / "sweep.csv"));
}
