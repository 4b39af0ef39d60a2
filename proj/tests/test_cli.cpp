// End-to-end tests of the ddctl binary: subcommands, artifact production,
// determinism across reruns, the exit-code contract, scenario lookup via
// DDCTL_SCENARIO_PATH, parallel runs, and report export.
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ddctl/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

// Runs the ddctl binary through the shell; `prefix` may set environment
// variables for the invocation (e.g. "DDCTL_SCENARIO_PATH=/tmp/x ").
CmdResult run_cli(const std::string& args, const std::string& prefix = "") {
  const std::string cmd =
      prefix + "\"" + DDCTL_BIN + "\" " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {};
  CmdResult res;
  char buf[4096];
  size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0)
    res.output.append(buf, got);
  const int status = ::pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json reactor_json() {
  return ddctl::scenario::built_in_scenarios().at("batch_reactor").to_json();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

}  // namespace

TEST(Cli, HelpAndListSucceed) {
  EXPECT_EQ(run_cli("--help").exit_code, 0);
  const auto res = run_cli("list");
  EXPECT_EQ(res.exit_code, 0);
  EXPECT_NE(res.output.find("batch_reactor  (built-in)"), std::string::npos);
  EXPECT_NE(res.output.find("surface_vessel  (built-in)"), std::string::npos);
}

TEST(Cli, SynthRunProducesArtifacts) {
  const fs::path dir = temp_dir("cli_synth");
  const auto res =
      run_cli("synth -s batch_reactor -o " + (dir / "run").string());
  EXPECT_EQ(res.exit_code, 0) << res.output;
  EXPECT_NE(res.output.find("certified"), std::string::npos);
  for (const char* f : {"config.json", "acquisition.csv", "gain.csv",
                        "certificate.json", "run_info.json"})
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
}

TEST(Cli, RerunsAreByteIdentical) {
  const fs::path d1 = temp_dir("cli_det1");
  const fs::path d2 = temp_dir("cli_det2");
  ASSERT_EQ(run_cli("synth -s batch_reactor -o " + d1.string()).exit_code, 0);
  ASSERT_EQ(run_cli("synth -s batch_reactor -o " + d2.string()).exit_code, 0);
  for (const char* f :
       {"acquisition.csv", "gain.csv", "certificate.json", "config.json"})
    EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
}

TEST(Cli, RegulateVesselCertifies) {
  const fs::path dir = temp_dir("cli_vessel");
  const auto res =
      run_cli("regulate -s surface_vessel -o " + dir.string());
  EXPECT_EQ(res.exit_code, 0) << res.output;
  std::ifstream cert_in(dir / "certificate.json");
  const json cert = json::parse(cert_in);
  EXPECT_EQ(cert.at("count").get<int>(), 24);
  EXPECT_TRUE(cert.at("pass").get<bool>());
  EXPECT_TRUE(fs::exists(dir / "simulation.csv"));
  EXPECT_TRUE(fs::exists(dir / "chart.svg"));
}

TEST(Cli, EstimateIndexPrintsTheIndex) {
  const fs::path dir = temp_dir("cli_estimate");
  const auto res =
      run_cli("estimate-index -s batch_reactor -o " + dir.string());
  EXPECT_EQ(res.exit_code, 0) << res.output;
  EXPECT_NE(res.output.find("observability index 2"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "estimate.json"));
}

TEST(Cli, ReportPrintsTheRunSummary) {
  const fs::path dir = temp_dir("cli_report");
  ASSERT_EQ(run_cli("regulate -s batch_reactor -o " + dir.string()).exit_code,
            0);
  const auto res = run_cli("report " + dir.string());
  EXPECT_EQ(res.exit_code, 0) << res.output;
  EXPECT_NE(res.output.find("run report: batch_reactor"), std::string::npos);
  EXPECT_NE(res.output.find("certificate: PASS"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "report.txt"));

  // A directory without run artifacts is a schema error.
  const auto bad = run_cli("report " + temp_dir("cli_report_empty").string());
  EXPECT_EQ(bad.exit_code, 2);
}

TEST(Cli, ExitCodesFollowTheContract) {
  const fs::path dir = temp_dir("cli_exits");

  {  // Batch too small to reach the required rank: informativity failure.
    const auto res = run_cli("synth -s batch_reactor --samples 8 -o " +
                             (dir / "thin").string());
    EXPECT_EQ(res.exit_code, 3) << res.output;
    EXPECT_NE(res.output.find("rank"), std::string::npos);
  }
  {  // Config whose exogenerator is not neutrally stable.
    json j = reactor_json();
    j["regulation"]["S"] = json::array({json::array({1.0})});
    write_file(dir / "unstable_S.json", j.dump(2));
    const auto res = run_cli("regulate -c " +
                             (dir / "unstable_S.json").string() + " -o " +
                             (dir / "bad_s").string());
    EXPECT_EQ(res.exit_code, 2) << res.output;
  }
  {  // Impossible required mode: certification failure.
    json j = reactor_json();
    j["required_modes"] = json::array({json::array({-3.0, 0.0})});
    write_file(dir / "wrong_modes.json", j.dump(2));
    const auto res = run_cli("synth -c " + (dir / "wrong_modes.json").string() +
                             " -o " + (dir / "cert").string());
    EXPECT_EQ(res.exit_code, 5) << res.output;
  }
  {  // Malformed JSON file.
    write_file(dir / "broken.json", "{ not json");
    const auto res = run_cli("synth -c " + (dir / "broken.json").string() +
                             " -o " + (dir / "broken").string());
    EXPECT_EQ(res.exit_code, 2) << res.output;
  }
  {  // Unknown scenario name.
    const auto res = run_cli("synth -s no_such_scenario -o " +
                             (dir / "missing").string());
    EXPECT_EQ(res.exit_code, 2) << res.output;
  }
  {  // No scenario selected at all.
    EXPECT_EQ(run_cli("synth").exit_code, 2);
  }
  {  // Unknown subcommand / missing subcommand are usage errors.
    EXPECT_EQ(run_cli("frobnicate").exit_code, 2);
    EXPECT_EQ(run_cli("").exit_code, 2);
  }
}

TEST(Cli, ScenarioPathAddsAndShadows) {
  const fs::path dir = temp_dir("cli_path");
  json j = reactor_json();
  j["name"] = "my_custom";
  write_file(dir / "my_custom.json", j.dump(2));
  const std::string prefix = "DDCTL_SCENARIO_PATH=" + dir.string() + " ";

  const auto listed = run_cli("list", prefix);
  EXPECT_EQ(listed.exit_code, 0);
  EXPECT_NE(listed.output.find("my_custom  (" + dir.string()), std::string::npos);

  const auto res = run_cli(
      "synth -s my_custom -o " + (dir / "run").string(), prefix);
  EXPECT_EQ(res.exit_code, 0) << res.output;
  EXPECT_NE(res.output.find("my_custom [synth]"), std::string::npos);
}

TEST(Cli, ParallelRunsAggregateTheWorstExit) {
  const fs::path dir = temp_dir("cli_jobs");
  {  // Two healthy scenarios in parallel: exit 0, one subdirectory each.
    const auto res = run_cli(
        "synth -s batch_reactor -s surface_vessel -j 2 -o " +
        (dir / "ok").string());
    EXPECT_EQ(res.exit_code, 0) << res.output;
    EXPECT_TRUE(fs::exists(dir / "ok" / "batch_reactor" / "certificate.json"));
    EXPECT_TRUE(fs::exists(dir / "ok" / "surface_vessel" / "certificate.json"));
  }
  {  // One healthy run plus one certification failure: the worst code wins.
    json j = reactor_json();
    j["name"] = "doomed";
    j["required_modes"] = json::array({json::array({-3.0, 0.0})});
    write_file(dir / "doomed.json", j.dump(2));
    const auto res = run_cli("synth -s batch_reactor -c " +
                             (dir / "doomed.json").string() + " -j 2 -o " +
                             (dir / "mixed").string());
    EXPECT_EQ(res.exit_code, 5) << res.output;
    EXPECT_NE(res.output.find("batch_reactor [synth]: exit 0"),
              std::string::npos);
    EXPECT_NE(res.output.find("doomed [synth]: exit 5"), std::string::npos);
  }
}
