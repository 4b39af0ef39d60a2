// ddctl: command-line front end for the data-driven control toolkit.
// Subcommands run scenarios end to end (synth, regulate, estimate-index,
// simulate), list the available scenarios, and export reports from finished
// run directories. Exit codes follow the shared contract: 0 ok, 1 internal
// error, 2 invalid config, 3 uninformative data, 4 design program not
// solved, 5 certification failure.
#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ddctl/errors.hpp"
#include "ddctl/scenario.hpp"

namespace {

namespace fs = std::filesystem;
using ddctl::scenario::Mode;
using ddctl::scenario::RunOptions;
using ddctl::scenario::ScenarioConfig;

struct RunArgs {
  std::vector<std::string> scenarios;
  std::vector<std::string> configs;
  std::string out_dir = "runs";
  long long samples = -1;   // < 0: keep the scenario's value
  double horizon = -1.0;    // < 0: keep the scenario's value
  long long seed = -1;      // < 0: keep the scenario's value
  bool strict = false;
  bool no_strict = false;
  bool no_chart = false;
  int jobs = 1;
};

const char* mode_label(Mode mode) {
  switch (mode) {
    case Mode::synth: return "synth";
    case Mode::regulate: return "regulate";
    case Mode::estimate_index: return "estimate-index";
    case Mode::simulate: return "simulate";
  }
  return "run";
}

int run_all(const RunArgs& args, Mode mode) {
  std::vector<std::string> sources = args.scenarios;
  sources.insert(sources.end(), args.configs.begin(), args.configs.end());
  if (sources.empty())
    throw ddctl::ArgumentError(
        "no scenario selected: pass --scenario NAME or --config FILE");

  std::vector<ScenarioConfig> configs;
  configs.reserve(sources.size());
  for (const auto& s : sources)
    configs.push_back(ddctl::scenario::load_scenario(s));

  RunOptions base;
  base.write_chart = !args.no_chart;
  if (args.samples >= 0) base.samples = args.samples;
  if (args.horizon >= 0.0) base.horizon = args.horizon;
  if (args.seed >= 0) base.seed = static_cast<std::uint64_t>(args.seed);
  if (args.no_strict)
    base.strict = false;
  else if (args.strict)
    base.strict = true;

  // A single run owns --out-dir outright; several runs get one
  // subdirectory each.
  const fs::path root(args.out_dir);
  std::vector<fs::path> dirs;
  dirs.reserve(configs.size());
  if (configs.size() == 1) {
    dirs.push_back(root);
  } else {
    for (const auto& c : configs) dirs.push_back(root / c.name);
  }

  std::vector<int> codes(configs.size(), 0);
  std::atomic<size_t> next{0};
  std::mutex print_mutex;
  const auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= configs.size()) break;
      RunOptions opts = base;
      opts.out_dir = dirs[i];
      const auto res = ddctl::scenario::run_scenario(configs[i], mode, opts);
      codes[i] = res.exit_code;
      const std::lock_guard<std::mutex> lock(print_mutex);
      std::ostream& os = res.exit_code == 0 ? std::cout : std::cerr;
      os << configs[i].name << " [" << mode_label(mode) << "]: exit "
         << res.exit_code << " (" << res.message << ") -> "
         << dirs[i].string() << "\n";
    }
  };

  const int jobs = std::max(
      1, std::min(args.jobs, static_cast<int>(configs.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(jobs));
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return *std::max_element(codes.begin(), codes.end());
}

void add_run_command(CLI::App& app, const std::string& name,
                     const std::string& desc, Mode mode, int& exit_code) {
  auto args = std::make_shared<RunArgs>();
  CLI::App* sub = app.add_subcommand(name, desc);
  sub->add_option("-s,--scenario", args->scenarios,
                  "built-in name, name on DDCTL_SCENARIO_PATH, or config "
                  "file (repeatable)");
  sub->add_option("-c,--config", args->configs,
                  "path to a scenario JSON file (repeatable)");
  sub->add_option("-o,--out-dir", args->out_dir,
                  "output directory; with several scenarios each run gets "
                  "a subdirectory named after it");
  sub->add_option("--samples", args->samples, "override the batch size N")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--horizon", args->horizon,
                  "override the simulation horizon (seconds)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--seed", args->seed, "override the acquisition seed")
      ->check(CLI::NonNegativeNumber);
  sub->add_flag("--strict", args->strict,
                "escalate reconstruction warnings to errors");
  sub->add_flag("--no-strict", args->no_strict,
                "downgrade reconstruction errors to warnings");
  sub->add_flag("--no-chart", args->no_chart, "skip the SVG chart artifact");
  sub->add_option("-j,--jobs", args->jobs,
                  "run this many scenarios in parallel")
      ->check(CLI::PositiveNumber);
  sub->callback([args, mode, &exit_code] {
    exit_code = std::max(exit_code, run_all(*args, mode));
  });
}

int list_command() {
  for (const auto& entry : ddctl::scenario::list_scenarios())
    std::cout << entry.name << "  (" << entry.origin << ")\n";
  return 0;
}

int report_command(const std::vector<std::string>& run_dirs) {
  for (const auto& dir : run_dirs)
    std::cout << ddctl::scenario::export_report(dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ddctl - synthesizes output-feedback stabilizers and output "
      "regulators for unknown linear plants from one input-output record"};
  app.require_subcommand(1);
  int exit_code = 0;

  add_run_command(app, "synth",
                  "acquire data and synthesize a stabilizing controller",
                  Mode::synth, exit_code);
  add_run_command(app, "regulate",
                  "synthesize an output regulator with an internal model",
                  Mode::regulate, exit_code);
  add_run_command(app, "estimate-index",
                  "estimate the plant's observability index from data",
                  Mode::estimate_index, exit_code);
  add_run_command(app, "simulate",
                  "synthesize and simulate the closed loop to a trajectory",
                  Mode::simulate, exit_code);

  CLI::App* list = app.add_subcommand("list", "list available scenarios");
  list->callback([&exit_code] { exit_code = std::max(exit_code, list_command()); });

  auto report_dirs = std::make_shared<std::vector<std::string>>();
  CLI::App* report =
      app.add_subcommand("report", "merge a run directory into a report");
  report->add_option("run_dir", *report_dirs, "finished run directory")
      ->required();
  report->callback([report_dirs, &exit_code] {
    exit_code = std::max(exit_code, report_command(*report_dirs));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ddctl::scenario::exit_schema;
  } catch (const ddctl::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ddctl::scenario::exit_schema;
  } catch (const ddctl::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ddctl::scenario::exit_schema;
  } catch (const ddctl::DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ddctl::scenario::exit_schema;
  } catch (const ddctl::StructuralError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ddctl::scenario::exit_schema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ddctl::scenario::exit_error;
  }
  return exit_code;
}
