// Scenario orchestration: JSON-configured end-to-end runs (acquisition ->
// batches -> synthesis -> certification), built-in demo scenarios, report
// generation, and the exit-code contract shared with the CLI.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ddctl/estimation.hpp"
#include "ddctl/lti.hpp"
#include "ddctl/pipeline.hpp"
#include "ddctl/realization.hpp"
#include "ddctl/synthesis.hpp"

namespace ddctl::scenario {

using numkit::Index;
using numkit::Mat;
using numkit::Vec;

/// Process exit codes shared by run_scenario and the CLI.
enum ExitCode : int {
  exit_ok = 0,
  exit_error = 1,          ///< unexpected internal failure
  exit_schema = 2,         ///< configuration invalid for the chosen mode
  exit_informativity = 3,  ///< data not informative enough for synthesis
  exit_infeasible = 4,     ///< design program infeasible / not solved
  exit_certification = 5,  ///< closed loop failed certification
};

/// Tuning selection (mirrors realization tunings).
struct TuningConfig {
  std::string kind;  ///< "state_feedback" | "siso" | "mimo_uniform"
  double lambda = 0.0, gamma = 0.0;  // state_feedback
  Mat Lambda;                        // siso / mimo_uniform
  Vec ell;
  Index nu = 0;  // mimo_uniform
};

/// Regulation problem description (optional part of a scenario).
struct RegulationConfig {
  Mat S;      ///< exogenerator
  Index q = 0;
  Mat P_w;    ///< disturbance input (n x n_w)
  Mat Q_w;    ///< error feedthrough from w (q x n_w)
  Vec acquisition_w0;
  Vec simulation_w0;
  double omega_s = 1.0;
};

/// Full scenario description.
struct ScenarioConfig {
  std::string name;
  std::string description;
  lti::StateSpace plant;
  TuningConfig tuning;
  lti::SineInputSpec excitation;
  double tau = 1.0;     ///< acquisition horizon
  Index samples = 50;   ///< batch size N
  std::uint64_t seed = 1;
  std::optional<Vec> x0;  ///< fixed initial state; random U(-1,1) otherwise
  std::optional<RegulationConfig> regulation;
  double omega_f = 1.0;
  double epsilon = 0.0;       ///< design-program margin (0 = auto)
  double cert_margin = 1e-7;  ///< Hurwitz margin for certification
  std::optional<numkit::CVec> required_modes;  ///< override (default: from tuning)
  double sim_horizon = 0.0;   ///< regulation/simulate horizon (0 = auto)
  Index sim_samples = 2000;
  double decay_rho = 0.05;
  Index nu_max = 6;  ///< estimation sweep bound
  std::optional<estimation::Schedule> est_schedule;

  static ScenarioConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Built-in demo scenarios, keyed by name.
const std::map<std::string, ScenarioConfig>& built_in_scenarios();

/// Scenario names visible to the CLI: built-ins plus any *.json found in
/// the directories of the DDCTL_SCENARIO_PATH environment variable
/// (colon-separated). File scenarios shadow built-ins of the same name.
struct ScenarioEntry {
  std::string name;
  std::string origin;  ///< "built-in" or the file path
};
std::vector<ScenarioEntry> list_scenarios();

/// Resolve a --scenario argument: built-in name, file name from the search
/// path, or a direct path to a JSON file.
ScenarioConfig load_scenario(const std::string& name_or_path);

enum class Mode { synth, regulate, estimate_index, simulate };

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<Index> samples;
  std::optional<double> horizon;
  std::optional<std::uint64_t> seed;
  std::optional<bool> strict;
  bool write_chart = true;
};

/// Everything a run produced; exit_code tells whether it succeeded.
struct RunResult {
  int exit_code = exit_ok;
  std::string message;

  pipeline::DataBatches batches;
  pipeline::InformativityReport informativity;
  synthesis::LmiSolution lmi;
  Mat gain;
  synthesis::Controller controller;
  synthesis::Certificate certificate;
  estimation::IndexEstimate estimate;
  lti::SampledTrajectory acquisition;
  lti::SampledTrajectory simulation;
  std::vector<std::filesystem::path> artifacts;
};

/// Run a scenario end to end. All artifacts land in options.out_dir:
/// deterministic CSV/JSON outputs (byte-identical across reruns for a fixed
/// seed) plus run_info.json carrying wall-clock metadata.
RunResult run_scenario(const ScenarioConfig& config, Mode mode,
                       const RunOptions& options);

/// Merge the JSON artifacts of a finished run directory into report.json
/// and a human-readable report.txt; returns the text report.
std::string export_report(const std::filesystem::path& run_dir);

}  // namespace ddctl::scenario
