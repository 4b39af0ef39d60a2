// Scenario orchestration: JSON (de)serialization of configurations, the
// built-in demo scenarios, end-to-end runs with on-disk artifacts, and
// report generation from a finished run directory.
#include "ddctl/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

#include "ddctl/errors.hpp"
#include "ddctl/io.hpp"

namespace ddctl::scenario {

namespace fs = std::filesystem;
using nlohmann::json;
using numkit::Complex;
using numkit::CVec;

namespace {

// ---------------------------------------------------------------------------
// JSON field helpers. All schema violations throw SchemaError with the
// offending field named in the message.

void reject_unknown_keys(const json& j,
                         std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw SchemaError("unknown field '" + item.key() + "' in " + where);
  }
}

const json& require_field(const json& j, const char* key,
                          const std::string& where) {
  if (!j.is_object())
    throw SchemaError(where + " must be a JSON object");
  if (!j.contains(key))
    throw SchemaError(where + " is missing required field '" +
                      std::string(key) + "'");
  return j.at(key);
}

double number_field(const json& j, const std::string& where) {
  if (!j.is_number()) throw SchemaError(where + " must be a number");
  return j.get<double>();
}

Index index_field(const json& j, const std::string& where) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    throw SchemaError(where + " must be an integer");
  return j.get<Index>();
}

std::string string_field(const json& j, const std::string& where) {
  if (!j.is_string()) throw SchemaError(where + " must be a string");
  return j.get<std::string>();
}

Vec vec_field(const json& j, const std::string& where) {
  if (!j.is_array())
    throw SchemaError(where + " must be an array of numbers");
  Vec v(static_cast<Index>(j.size()));
  Index k = 0;
  for (const auto& item : j) {
    if (!item.is_number())
      throw SchemaError(where + " must contain only numbers");
    v(k++) = item.get<double>();
  }
  return v;
}

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// Config matrices are written as nested row arrays (hand-editable), unlike
// the {rows, cols, data} form used for run artifacts.
Mat matrix_field(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw SchemaError(where + " must be a non-empty array of rows");
  const Index rows = static_cast<Index>(j.size());
  Mat M;
  Index r = 0;
  for (const auto& row : j) {
    if (!row.is_array() || row.empty())
      throw SchemaError(where + " rows must be non-empty arrays");
    if (r == 0) M.resize(rows, static_cast<Index>(row.size()));
    if (static_cast<Index>(row.size()) != M.cols())
      throw SchemaError(where + " rows must all have the same length");
    Index c = 0;
    for (const auto& item : row) {
      if (!item.is_number())
        throw SchemaError(where + " must contain only numbers");
      M(r, c++) = item.get<double>();
    }
    ++r;
  }
  return M;
}

json matrix_to_rows(const Mat& M) {
  json rows = json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw SchemaError(path.string() + " is not valid JSON");
  return j;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out)
    throw ArgumentError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_complex(Complex z) {
  return fmt(z.real()) + (z.imag() < 0.0 ? " - " : " + ") +
         fmt(std::abs(z.imag())) + "i";
}

// ---------------------------------------------------------------------------
// Section parsers.

TuningConfig tuning_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("'tuning' must be an object");
  reject_unknown_keys(j, {"kind", "lambda", "gamma", "Lambda", "ell", "nu"},
                      "'tuning'");
  TuningConfig t;
  t.kind = string_field(require_field(j, "kind", "'tuning'"), "'tuning.kind'");
  if (t.kind == "state_feedback") {
    t.lambda =
        number_field(require_field(j, "lambda", "'tuning'"), "'tuning.lambda'");
    t.gamma =
        number_field(require_field(j, "gamma", "'tuning'"), "'tuning.gamma'");
    if (!(t.lambda > 0.0))
      throw SchemaError("'tuning.lambda' must be positive");
    if (t.gamma == 0.0) throw SchemaError("'tuning.gamma' must be nonzero");
  } else if (t.kind == "siso" || t.kind == "mimo_uniform") {
    t.Lambda =
        matrix_field(require_field(j, "Lambda", "'tuning'"), "'tuning.Lambda'");
    t.ell = vec_field(require_field(j, "ell", "'tuning'"), "'tuning.ell'");
    if (t.Lambda.rows() != t.Lambda.cols())
      throw SchemaError("'tuning.Lambda' must be square");
    if (t.ell.size() != t.Lambda.rows())
      throw SchemaError("'tuning.ell' length must match 'tuning.Lambda'");
    if (j.contains("nu")) {
      t.nu = index_field(j.at("nu"), "'tuning.nu'");
      if (t.nu != t.Lambda.rows())
        throw SchemaError("'tuning.nu' must equal the order of 'tuning.Lambda'");
    }
  } else {
    throw SchemaError(
        "'tuning.kind' must be one of state_feedback, siso, mimo_uniform");
  }
  return t;
}

json tuning_to_json(const TuningConfig& t) {
  json j;
  j["kind"] = t.kind;
  if (t.kind == "state_feedback") {
    j["lambda"] = t.lambda;
    j["gamma"] = t.gamma;
  } else {
    j["Lambda"] = matrix_to_rows(t.Lambda);
    j["ell"] = vec_to_json(t.ell);
    if (t.nu > 0) j["nu"] = t.nu;
  }
  return j;
}

lti::SineInputSpec excitation_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("'excitation' must be an object");
  reject_unknown_keys(j, {"channels"}, "'excitation'");
  const json& chans = require_field(j, "channels", "'excitation'");
  if (!chans.is_array() || chans.empty())
    throw SchemaError("'excitation.channels' must be a non-empty array");
  lti::SineInputSpec spec;
  for (const auto& cj : chans) {
    if (!cj.is_object())
      throw SchemaError("each excitation channel must be an object");
    reject_unknown_keys(cj, {"bias", "sines"}, "an excitation channel");
    lti::ChannelSpec ch;
    if (cj.contains("bias"))
      ch.bias = number_field(cj.at("bias"), "'excitation...bias'");
    if (cj.contains("sines")) {
      if (!cj.at("sines").is_array())
        throw SchemaError("'sines' must be an array");
      for (const auto& sj : cj.at("sines")) {
        if (!sj.is_object())
          throw SchemaError("each sine term must be an object");
        reject_unknown_keys(sj, {"amplitude", "frequency", "phase"},
                            "a sine term");
        lti::SineTerm term;
        term.amplitude = number_field(
            require_field(sj, "amplitude", "a sine term"), "'amplitude'");
        term.frequency = number_field(
            require_field(sj, "frequency", "a sine term"), "'frequency'");
        if (sj.contains("phase"))
          term.phase = number_field(sj.at("phase"), "'phase'");
        ch.sines.push_back(term);
      }
    }
    spec.channels.push_back(std::move(ch));
  }
  try {
    spec.validate();
  } catch (const Error& ex) {
    throw SchemaError(std::string("'excitation': ") + ex.what());
  }
  return spec;
}

json excitation_to_json(const lti::SineInputSpec& spec) {
  json channels = json::array();
  for (const auto& ch : spec.channels) {
    json cj;
    if (ch.bias != 0.0) cj["bias"] = ch.bias;
    json sines = json::array();
    for (const auto& s : ch.sines)
      sines.push_back({{"amplitude", s.amplitude},
                       {"frequency", s.frequency},
                       {"phase", s.phase}});
    cj["sines"] = std::move(sines);
    channels.push_back(std::move(cj));
  }
  return json{{"channels", std::move(channels)}};
}

RegulationConfig regulation_from_json(const json& j, Index n, Index p) {
  if (!j.is_object()) throw SchemaError("'regulation' must be an object");
  reject_unknown_keys(
      j, {"S", "q", "omega_s", "P_w", "Q_w", "acquisition_w0",
          "simulation_w0"},
      "'regulation'");
  RegulationConfig r;
  r.S = matrix_field(require_field(j, "S", "'regulation'"), "'regulation.S'");
  if (r.S.rows() != r.S.cols() || r.S.rows() < 1)
    throw SchemaError("'regulation.S' must be square and non-empty");
  const Index n_w = r.S.rows();
  r.q = index_field(require_field(j, "q", "'regulation'"), "'regulation.q'");
  if (r.q < 1 || r.q > p)
    throw SchemaError(
        "'regulation.q' must be between 1 and the plant output count (" +
        std::to_string(p) + ")");
  if (j.contains("omega_s")) {
    r.omega_s = number_field(j.at("omega_s"), "'regulation.omega_s'");
    if (r.omega_s == 0.0)
      throw SchemaError("'regulation.omega_s' must be nonzero");
  }
  const auto shaped = [&](const char* key, Index rows, Index cols) -> Mat {
    if (!j.contains(key)) return Mat::Zero(rows, cols);
    const Mat M = matrix_field(j.at(key), std::string("'regulation.") + key + "'");
    if (M.rows() != rows || M.cols() != cols)
      throw SchemaError(std::string("'regulation.") + key + "' must be " +
                        std::to_string(rows) + " x " + std::to_string(cols));
    return M;
  };
  r.P_w = shaped("P_w", n, n_w);
  r.Q_w = shaped("Q_w", r.q, n_w);
  const auto sized = [&](const char* key) -> Vec {
    if (!j.contains(key)) return Vec::Zero(n_w);
    const Vec v = vec_field(j.at(key), std::string("'regulation.") + key + "'");
    if (v.size() != n_w)
      throw SchemaError(std::string("'regulation.") + key +
                        "' must have one entry per exogenerator state (" +
                        std::to_string(n_w) + ")");
    return v;
  };
  r.acquisition_w0 = sized("acquisition_w0");
  r.simulation_w0 = sized("simulation_w0");
  return r;
}

json regulation_to_json(const RegulationConfig& r) {
  json j;
  j["S"] = matrix_to_rows(r.S);
  j["q"] = r.q;
  j["omega_s"] = r.omega_s;
  j["P_w"] = matrix_to_rows(r.P_w);
  j["Q_w"] = matrix_to_rows(r.Q_w);
  j["acquisition_w0"] = vec_to_json(r.acquisition_w0);
  j["simulation_w0"] = vec_to_json(r.simulation_w0);
  return j;
}

CVec modes_from_json(const json& j) {
  if (!j.is_array() || j.empty())
    throw SchemaError(
        "'required_modes' must be a non-empty array of numbers or "
        "[re, im] pairs");
  CVec v(static_cast<Index>(j.size()));
  Index k = 0;
  for (const auto& item : j) {
    if (item.is_number()) {
      v(k++) = Complex(item.get<double>(), 0.0);
      continue;
    }
    if (!item.is_array() || item.size() != 2 || !item[0].is_number() ||
        !item[1].is_number())
      throw SchemaError(
          "'required_modes' entries must be numbers or [re, im] pairs");
    v(k++) = Complex(item[0].get<double>(), item[1].get<double>());
  }
  return v;
}

json modes_to_json(const CVec& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i)
    a.push_back(json::array({v(i).real(), v(i).imag()}));
  return a;
}

estimation::Schedule schedule_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("'est_schedule' must be an object");
  reject_unknown_keys(j, {"lambda", "gamma"}, "'est_schedule'");
  const Vec lam = vec_field(require_field(j, "lambda", "'est_schedule'"),
                            "'est_schedule.lambda'");
  const Vec gam = vec_field(require_field(j, "gamma", "'est_schedule'"),
                            "'est_schedule.gamma'");
  if (lam.size() == 0 || lam.size() != gam.size())
    throw SchemaError(
        "'est_schedule' lambda and gamma must be equal-length and non-empty");
  estimation::Schedule s;
  s.lambda.assign(lam.data(), lam.data() + lam.size());
  s.gamma.assign(gam.data(), gam.data() + gam.size());
  return s;
}

// ---------------------------------------------------------------------------
// Run helpers.

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::synth: return "synth";
    case Mode::regulate: return "regulate";
    case Mode::estimate_index: return "estimate-index";
    case Mode::simulate: return "simulate";
  }
  return "unknown";
}

// JSON has no literal for infinities; ratios that overflow become null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

realization::RealizationGains gains_from_config(const ScenarioConfig& c) {
  const auto& t = c.tuning;
  const Index n = c.plant.n(), m = c.plant.m(), p = c.plant.p();
  if (t.kind == "state_feedback") {
    if (p != n || !c.plant.C.isIdentity(1e-12))
      throw SchemaError(
          "tuning 'state_feedback' requires full state measurement (C = I)");
    return realization::tune_state_feedback(n, m, t.lambda, t.gamma);
  }
  if (t.kind == "siso") {
    if (p != 1 || m != 1)
      throw SchemaError("tuning 'siso' requires one input and one output");
    return realization::tune_siso(n, t.Lambda, t.ell);
  }
  if (t.kind == "mimo_uniform") {
    const Index nu = t.nu > 0 ? t.nu : t.Lambda.rows();
    return realization::tune_mimo_uniform(p, m, nu, t.Lambda, t.ell);
  }
  throw SchemaError("unknown tuning kind '" + t.kind + "'");
}

// Closed-loop modes every certificate must contain: the filter poles, with
// one copy per output (state feedback pins all n poles at -lambda).
CVec default_required_modes(const ScenarioConfig& c) {
  if (c.tuning.kind == "state_feedback") {
    CVec mods(c.plant.n());
    mods.setConstant(Complex(-c.tuning.lambda, 0.0));
    return mods;
  }
  const CVec lam = numkit::eigenvalues(c.tuning.Lambda).eigenvalues;
  const Index reps = c.tuning.kind == "siso" ? 1 : c.plant.p();
  CVec mods(lam.size() * reps);
  Index k = 0;
  for (Index r = 0; r < reps; ++r)
    for (Index i = 0; i < lam.size(); ++i) mods(k++) = lam(i);
  return mods;
}

std::vector<std::pair<double, double>> sorted_eigs(const numkit::Spectrum& s) {
  std::vector<std::pair<double, double>> eigs;
  eigs.reserve(static_cast<size_t>(s.eigenvalues.size()));
  for (Index i = 0; i < s.eigenvalues.size(); ++i)
    eigs.emplace_back(s.eigenvalues(i).real(), s.eigenvalues(i).imag());
  std::sort(eigs.begin(), eigs.end());
  return eigs;
}

json informativity_to_json(const pipeline::InformativityReport& r) {
  return json{{"informative", r.informative},
              {"rank", r.rank},
              {"required", r.required},
              {"gap_ratio", finite_or_null(r.gap_ratio)},
              {"singular_values", r.singular_values}};
}

const char* lmi_status_name(synthesis::LmiStatus s) {
  switch (s) {
    case synthesis::LmiStatus::feasible: return "feasible";
    case synthesis::LmiStatus::infeasible_equality:
      return "infeasible_equality";
    case synthesis::LmiStatus::not_solved: return "not_solved";
  }
  return "unknown";
}

json lmi_to_json(const synthesis::LmiSolution& sol) {
  json j{{"status", lmi_status_name(sol.status)},
         {"epsilon", sol.epsilon},
         {"min_eig_P", sol.min_eig_P},
         {"max_eig_lyap", sol.max_eig_lyap},
         {"equality_residual", sol.equality_residual},
         {"diagnostics", sol.diagnostics}};
  if (sol.feasible()) {
    j["P"] = io::matrix_to_json(sol.P);
    j["Q"] = io::matrix_to_json(sol.Q);
  }
  return j;
}

json certificate_to_json(const synthesis::Certificate& c) {
  json eigs = json::array();
  for (const auto& [re, im] : sorted_eigs(c.closed_loop))
    eigs.push_back({{"re", re}, {"im", im}});
  json req = json::array();
  for (const auto& r : c.required)
    req.push_back({{"re", r.value.real()},
                   {"im", r.value.imag()},
                   {"matched", r.matched},
                   {"distance", r.distance}});
  json j{{"eigenvalues", std::move(eigs)},
         {"count", c.closed_loop.eigenvalues.size()},
         {"worst_real_part", c.worst_real_part},
         {"hurwitz", c.hurwitz},
         {"required", std::move(req)},
         {"required_ok", c.required_ok},
         {"pass", c.pass}};
  if (c.error_final >= 0.0) {
    j["error_final"] = c.error_final;
    j["error_peak"] = c.error_peak;
    j["decay_ratio"] = c.decay_ratio;
    j["decay_ok"] = c.decay_ok;
  }
  return j;
}

std::string certificate_to_text(const synthesis::Certificate& c,
                                const std::string& name) {
  std::ostringstream out;
  out << "closed-loop certificate";
  if (!name.empty()) out << " for " << name;
  out << "\n";
  const auto eigs = sorted_eigs(c.closed_loop);
  out << "eigenvalues (" << eigs.size() << "):\n";
  for (const auto& [re, im] : eigs)
    out << "  " << fmt_complex(Complex(re, im)) << "\n";
  out << "worst real part: " << fmt(c.worst_real_part) << "\n";
  out << "hurwitz: " << (c.hurwitz ? "yes" : "no") << "\n";
  size_t matched = 0;
  for (const auto& r : c.required) matched += r.matched ? 1 : 0;
  out << "required modes (" << matched << " of " << c.required.size()
      << " matched):\n";
  for (const auto& r : c.required) {
    out << "  " << fmt_complex(r.value);
    if (r.matched)
      out << "  matched, distance " << fmt(r.distance) << "\n";
    else
      out << "  MISSING\n";
  }
  if (c.error_final >= 0.0) {
    out << "regulation: |e(T)| = " << fmt(c.error_final) << ", early peak = "
        << fmt(c.error_peak) << ", ratio = " << fmt(c.decay_ratio)
        << (c.decay_ok ? " (decayed)" : " (NOT decayed)") << "\n";
  }
  out << "verdict: " << (c.pass ? "PASS" : "FAIL") << "\n";
  return out.str();
}

json estimate_to_json(const estimation::IndexEstimate& e) {
  json probes = json::array();
  for (const auto& pr : e.probes)
    probes.push_back({{"candidate", pr.candidate},
                      {"rank", pr.rank},
                      {"full", pr.full},
                      {"full_rank", pr.full_rank},
                      {"inconclusive", pr.inconclusive},
                      {"gap_ratio", finite_or_null(pr.gap_ratio)},
                      {"singular_values", pr.singular_values}});
  return json{{"success", e.success},
              {"nu_hat", e.nu_hat},
              {"low_confidence", e.low_confidence},
              {"verdict", e.verdict},
              {"nu_max", e.nu_max},
              {"probes", std::move(probes)}};
}

json controller_to_json(const synthesis::Controller& ctl, json provenance) {
  json j{{"A", io::matrix_to_json(ctl.sys.A)},
         {"B", io::matrix_to_json(ctl.sys.B)},
         {"C", io::matrix_to_json(ctl.sys.C)},
         {"D", io::matrix_to_json(ctl.sys.D)},
         {"K", io::matrix_to_json(ctl.K)}};
  if (ctl.split) {
    j["K_zeta"] = io::matrix_to_json(ctl.split->first);
    j["K_eta"] = io::matrix_to_json(ctl.split->second);
  }
  j["provenance"] = std::move(provenance);
  return j;
}

std::string iso_utc(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Closed-loop simulation for the simulation.csv artifact: exogenerator
// (regulation only) -> plant -> controller -> plant, sampled exactly.
lti::SampledTrajectory simulate_closed_loop(const lti::StateSpace& plant,
                                            const RegulationConfig* reg,
                                            const synthesis::Controller& ctl,
                                            const Vec& x0_plant, double T,
                                            Index samples) {
  const Index m = plant.m(), p = plant.p();
  std::vector<lti::BlockSpec> blocks;
  if (reg) {
    const Index n_w = reg->S.rows();
    blocks.push_back({"exo",
                      lti::StateSpace::autonomous(reg->S,
                                                  Mat::Identity(n_w, n_w)),
                      reg->simulation_w0,
                      {}});
    Mat B_all(plant.n(), m + n_w);
    B_all << plant.B, reg->P_w;
    Mat D_all = Mat::Zero(p, m + n_w);
    D_all.block(0, m, reg->Q_w.rows(), n_w) = reg->Q_w;
    blocks.push_back({"plant",
                      lti::StateSpace(plant.A, B_all, plant.C, D_all),
                      x0_plant,
                      {{"ctrl", 0, m}, {"exo", 0, n_w}}});
  } else {
    blocks.push_back({"plant", plant, x0_plant, {{"ctrl", 0, m}}});
  }
  blocks.push_back({"ctrl", ctl.sys, Vec::Zero(ctl.sys.n()), {{"plant", 0, p}}});
  const lti::Augmented aug = lti::augment(blocks);

  std::map<std::string, Mat> maps;
  maps["y"] = aug.signal_maps.at("plant.out");
  maps["u"] = aug.signal_maps.at("ctrl.out");
  if (reg) {
    maps["e"] = Mat(aug.signal_maps.at("plant.out").topRows(reg->q));
    maps["w"] = aug.signal_maps.at("exo.state");
  }
  Vec times(samples);
  for (Index k = 0; k < samples; ++k)
    times(k) = T * double(k) / double(samples - 1);
  auto traj = lti::sample_exact(aug.sys, aug.x0, times, maps);
  traj.signals.erase("x");
  return traj;
}

ScenarioConfig config_from_file(const fs::path& path) {
  ScenarioConfig c = ScenarioConfig::from_json(read_json_file(path));
  if (c.name.empty()) c.name = path.stem().string();
  return c;
}

// Directories of the DDCTL_SCENARIO_PATH environment variable, in priority
// order (first match wins among files; any file shadows a built-in).
std::vector<fs::path> search_path_dirs() {
  std::vector<fs::path> dirs;
  const char* raw = std::getenv("DDCTL_SCENARIO_PATH");
  if (raw == nullptr) return dirs;
  const std::string s(raw);
  size_t start = 0;
  while (start <= s.size()) {
    const size_t stop = s.find(':', start);
    const std::string part =
        s.substr(start, stop == std::string::npos ? std::string::npos
                                                  : stop - start);
    if (!part.empty()) dirs.emplace_back(part);
    if (stop == std::string::npos) break;
    start = stop + 1;
  }
  return dirs;
}

}  // namespace

// ---------------------------------------------------------------------------
// ScenarioConfig <-> JSON.

ScenarioConfig ScenarioConfig::from_json(const json& j) {
  if (!j.is_object())
    throw SchemaError("scenario config must be a JSON object");
  reject_unknown_keys(
      j,
      {"name", "description", "plant", "tuning", "excitation", "tau",
       "samples", "seed", "x0", "regulation", "omega_f", "epsilon",
       "cert_margin", "required_modes", "sim_horizon", "sim_samples",
       "decay_rho", "nu_max", "est_schedule"},
      "the scenario config");
  ScenarioConfig c;
  if (j.contains("name")) c.name = string_field(j.at("name"), "'name'");
  if (j.contains("description"))
    c.description = string_field(j.at("description"), "'description'");

  const json& pj = require_field(j, "plant", "the scenario config");
  if (!pj.is_object()) throw SchemaError("'plant' must be an object");
  reject_unknown_keys(pj, {"A", "B", "C", "D"}, "'plant'");
  const Mat A = matrix_field(require_field(pj, "A", "'plant'"), "'plant.A'");
  const Mat B = matrix_field(require_field(pj, "B", "'plant'"), "'plant.B'");
  const Mat C = matrix_field(require_field(pj, "C", "'plant'"), "'plant.C'");
  Mat D;
  if (pj.contains("D")) D = matrix_field(pj.at("D"), "'plant.D'");
  c.plant = lti::StateSpace(A, B, C, D);
  try {
    c.plant.validate();
  } catch (const Error& ex) {
    throw SchemaError(std::string("'plant': ") + ex.what());
  }

  c.tuning = tuning_from_json(require_field(j, "tuning", "the scenario config"));
  c.excitation =
      excitation_from_json(require_field(j, "excitation", "the scenario config"));
  if (c.excitation.channel_count() != c.plant.m())
    throw SchemaError("'excitation' must define one channel per plant input (" +
                      std::to_string(c.plant.m()) + ")");

  c.tau = number_field(require_field(j, "tau", "the scenario config"), "'tau'");
  if (!(c.tau > 0.0)) throw SchemaError("'tau' must be positive");
  c.samples =
      index_field(require_field(j, "samples", "the scenario config"), "'samples'");
  if (c.samples < 2) throw SchemaError("'samples' must be at least 2");
  if (j.contains("seed")) {
    const json& sj = j.at("seed");
    if (!sj.is_number_unsigned() &&
        !(sj.is_number_integer() && sj.get<long long>() >= 0))
      throw SchemaError("'seed' must be a non-negative integer");
    c.seed = sj.get<std::uint64_t>();
  }
  if (j.contains("x0")) {
    c.x0 = vec_field(j.at("x0"), "'x0'");
    if (c.x0->size() != c.plant.n())
      throw SchemaError("'x0' length must equal the plant order (" +
                        std::to_string(c.plant.n()) + ")");
  }
  if (j.contains("regulation"))
    c.regulation =
        regulation_from_json(j.at("regulation"), c.plant.n(), c.plant.p());
  if (j.contains("omega_f")) {
    c.omega_f = number_field(j.at("omega_f"), "'omega_f'");
    if (c.omega_f == 0.0) throw SchemaError("'omega_f' must be nonzero");
  }
  if (j.contains("epsilon")) {
    c.epsilon = number_field(j.at("epsilon"), "'epsilon'");
    if (c.epsilon < 0.0) throw SchemaError("'epsilon' must be non-negative");
  }
  if (j.contains("cert_margin")) {
    c.cert_margin = number_field(j.at("cert_margin"), "'cert_margin'");
    if (c.cert_margin < 0.0)
      throw SchemaError("'cert_margin' must be non-negative");
  }
  if (j.contains("required_modes"))
    c.required_modes = modes_from_json(j.at("required_modes"));
  if (j.contains("sim_horizon")) {
    c.sim_horizon = number_field(j.at("sim_horizon"), "'sim_horizon'");
    if (c.sim_horizon < 0.0)
      throw SchemaError("'sim_horizon' must be non-negative");
  }
  if (j.contains("sim_samples")) {
    c.sim_samples = index_field(j.at("sim_samples"), "'sim_samples'");
    if (c.sim_samples < 2)
      throw SchemaError("'sim_samples' must be at least 2");
  }
  if (j.contains("decay_rho")) {
    c.decay_rho = number_field(j.at("decay_rho"), "'decay_rho'");
    if (!(c.decay_rho > 0.0 && c.decay_rho < 1.0))
      throw SchemaError("'decay_rho' must lie strictly between 0 and 1");
  }
  if (j.contains("nu_max")) {
    c.nu_max = index_field(j.at("nu_max"), "'nu_max'");
    if (c.nu_max < 2) throw SchemaError("'nu_max' must be at least 2");
  }
  if (j.contains("est_schedule"))
    c.est_schedule = schedule_from_json(j.at("est_schedule"));
  return c;
}

json ScenarioConfig::to_json() const {
  json j;
  j["name"] = name;
  j["description"] = description;
  json pj;
  pj["A"] = matrix_to_rows(plant.A);
  pj["B"] = matrix_to_rows(plant.B);
  pj["C"] = matrix_to_rows(plant.C);
  if (plant.D.size() != 0 && !plant.D.isZero(0.0))
    pj["D"] = matrix_to_rows(plant.D);
  j["plant"] = std::move(pj);
  j["tuning"] = tuning_to_json(tuning);
  j["excitation"] = excitation_to_json(excitation);
  j["tau"] = tau;
  j["samples"] = samples;
  j["seed"] = seed;
  if (x0) j["x0"] = vec_to_json(*x0);
  if (regulation) j["regulation"] = regulation_to_json(*regulation);
  j["omega_f"] = omega_f;
  j["epsilon"] = epsilon;
  j["cert_margin"] = cert_margin;
  if (required_modes) j["required_modes"] = modes_to_json(*required_modes);
  j["sim_horizon"] = sim_horizon;
  j["sim_samples"] = sim_samples;
  j["decay_rho"] = decay_rho;
  j["nu_max"] = nu_max;
  if (est_schedule)
    j["est_schedule"] = json{{"lambda", est_schedule->lambda},
                             {"gamma", est_schedule->gamma}};
  return j;
}

// ---------------------------------------------------------------------------
// Built-in scenarios.

const std::map<std::string, ScenarioConfig>& built_in_scenarios() {
  static const std::map<std::string, ScenarioConfig> scenarios = [] {
    std::map<std::string, ScenarioConfig> all;
    {
      ScenarioConfig c;
      c.name = "batch_reactor";
      c.description =
          "Unstable batch reactor (4 states, 2 inputs, 2 outputs): "
          "output-feedback stabilization from one input-output record, with "
          "an optional integral-action loop for constant setpoint tracking.";
      Mat A(4, 4), B(4, 2), C(2, 4);
      A << 1.38, -0.2077, 6.715, -5.676,  //
          -0.5814, -4.29, 0, 0.675,       //
          1.067, 4.273, -6.654, 5.893,    //
          0.048, 4.273, 1.343, -2.104;
      B << 0, 0, 5.679, 0, 1.136, -3.146, 1.136, 0;
      C << 1, 0, 1, -1, 0, 1, 0, 0;
      c.plant = lti::StateSpace(A, B, C);
      c.tuning.kind = "mimo_uniform";
      c.tuning.Lambda = Mat::Zero(2, 2);
      c.tuning.Lambda.diagonal() << -4.0, -8.0;
      c.tuning.ell = Vec(2);
      c.tuning.ell << 1.0, 2.0;
      c.tuning.nu = 2;
      c.excitation.channels.resize(2);
      for (double w : {1.0, 3.5, 6.0, 9.5})
        c.excitation.channels[0].sines.push_back({1.0, w, 0.0});
      for (double w : {2.0, 4.5, 7.5, 11.0})
        c.excitation.channels[1].sines.push_back({1.0, w, 0.0});
      c.tau = 2.0;
      c.samples = 50;
      c.seed = 7;
      RegulationConfig r;
      r.S = Mat::Zero(1, 1);  // constant references: integral action
      r.q = 2;
      r.omega_s = 5.0;
      r.P_w = Mat::Zero(4, 1);
      r.Q_w = Mat(2, 1);
      r.Q_w << -1.0, -0.6;  // track the setpoint y* = (1, 0.6) w
      r.acquisition_w0 = Vec::Zero(1);
      r.simulation_w0 = Vec::Ones(1);
      c.regulation = r;
      all.emplace(c.name, std::move(c));
    }
    {
      ScenarioConfig c;
      c.name = "surface_vessel";
      c.description =
          "Surface vessel (6 states, 3 inputs, 3 outputs): velocity "
          "regulation rejecting a constant-plus-sinusoid disturbance on the "
          "first two outputs through an internal model.";
      Mat A(6, 6), B(6, 3), C(3, 6);
      A << -0.1, 0.012, 0.015, 0, 0, 0.01,     //
          0.01, -0.0333, -0.05, 0, 0, -0.014,  //
          0.02, 0.03, -0.18, 0, 0, 0,          //
          1, 0, 0, 0, 0, 0,                    //
          0, 1, 0, 0, 0, 0,                    //
          0, 0, 1, 0, 0, 0;
      B << 0, 0.03, 0.025, 0, 0.21, -0.2, 0.1, 0.03, 0.02,  //
          0, 0, 0, 0, 0, 0, 0, 0, 0;
      C << 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1;
      c.plant = lti::StateSpace(A, B, C);
      c.tuning.kind = "mimo_uniform";
      c.tuning.Lambda = Mat(2, 2);
      c.tuning.Lambda << 0.0, 1.0, -2.0, -2.0;
      c.tuning.ell = Vec(2);
      c.tuning.ell << 0.0, 0.5;
      c.tuning.nu = 2;
      c.excitation.channels.resize(3);
      const double table[3][4] = {{0.3, 0.9, 1.7, 2.6},
                                  {0.5, 1.2, 2.1, 3.0},
                                  {0.7, 1.5, 2.4, 3.3}};
      for (int ch = 0; ch < 3; ++ch)
        for (double w : table[ch])
          c.excitation.channels[static_cast<size_t>(ch)].sines.push_back(
              {1.0, w, 0.0});
      c.tau = 35.0;
      c.samples = 80;
      c.seed = 7;
      const double w2 = std::pow(std::numbers::pi / 5.0, 2.0);
      RegulationConfig r;
      r.S = Mat(3, 3);
      r.S << 0, 1, 0, 0, 0, 1, 0, -w2, 0;  // bias + sinusoid at pi/5 rad/s
      r.q = 2;
      r.omega_s = 0.1;
      r.P_w = Mat(6, 3);
      r.P_w << -0.001, 0, 0.002, 0.02, 0.01, -0.02, 0, 0, 0,  //
          0, 0, 0, 0.1, 0, 0, 0.1, 0.1, -0.1;
      r.Q_w = Mat::Zero(2, 3);
      r.Q_w(0, 0) = 2.0;
      r.Q_w(0, 2) = 2.0 / w2;
      r.acquisition_w0 = Vec(3);
      r.acquisition_w0 << 1.0, 1.0, 1.0;
      r.simulation_w0 = Vec(3);
      r.simulation_w0 << 1.0, -3.0, 0.0;
      c.regulation = r;
      c.sim_horizon = 400.0;
      c.sim_samples = 2000;
      c.nu_max = 5;
      all.emplace(c.name, std::move(c));
    }
    return all;
  }();
  return scenarios;
}

std::vector<ScenarioEntry> list_scenarios() {
  std::map<std::string, std::string> origin_by_name;
  for (const auto& [name, cfg] : built_in_scenarios())
    origin_by_name[name] = "built-in";
  for (const auto& dir : search_path_dirs()) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) continue;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir, ec))
      if (entry.is_regular_file() && entry.path().extension() == ".json")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const std::string name = f.stem().string();
      const auto it = origin_by_name.find(name);
      // Files shadow built-ins; among directories the first match wins.
      if (it == origin_by_name.end() || it->second == "built-in")
        origin_by_name[name] = f.string();
    }
  }
  std::vector<ScenarioEntry> out;
  out.reserve(origin_by_name.size());
  for (const auto& [name, origin] : origin_by_name)
    out.push_back({name, origin});
  return out;
}

ScenarioConfig load_scenario(const std::string& name_or_path) {
  if (name_or_path.empty()) throw ArgumentError("empty scenario name");
  for (const auto& dir : search_path_dirs()) {
    std::error_code ec;
    const fs::path candidate = dir / (name_or_path + ".json");
    if (fs::is_regular_file(candidate, ec)) return config_from_file(candidate);
  }
  const auto& builtins = built_in_scenarios();
  if (const auto it = builtins.find(name_or_path); it != builtins.end())
    return it->second;
  std::error_code ec;
  const fs::path direct(name_or_path);
  if (fs::is_regular_file(direct, ec)) return config_from_file(direct);
  throw ArgumentError("unknown scenario '" + name_or_path +
                      "': not a built-in, not on DDCTL_SCENARIO_PATH, and "
                      "not a file");
}

// ---------------------------------------------------------------------------
// End-to-end run.

RunResult run_scenario(const ScenarioConfig& config_in, Mode mode,
                       const RunOptions& options) {
  const auto t0 = std::chrono::system_clock::now();
  RunResult res;

  ScenarioConfig config = config_in;
  if (options.samples) config.samples = *options.samples;
  if (options.horizon) config.sim_horizon = *options.horizon;
  if (options.seed) config.seed = *options.seed;

  const fs::path out = options.out_dir;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    res.exit_code = exit_error;
    res.message =
        "cannot create output directory " + out.string() + ": " + ec.message();
    return res;
  }

  const auto add = [&res](const fs::path& p) { res.artifacts.push_back(p); };
  // Every run, successful or not, ends here: run_info.json is written last
  // and is the only artifact carrying wall-clock data.
  const auto finish = [&](int code, const std::string& message) -> RunResult& {
    res.exit_code = code;
    res.message = message;
    const auto t1 = std::chrono::system_clock::now();
    json info{{"scenario", config.name},
              {"mode", mode_name(mode)},
              {"exit_code", res.exit_code},
              {"message", res.message},
              {"started", iso_utc(t0)},
              {"finished", iso_utc(t1)},
              {"elapsed_seconds", std::chrono::duration<double>(t1 - t0).count()}};
    if (options.strict) info["strict"] = *options.strict;
    write_json_file(out / "run_info.json", info);
    add(out / "run_info.json");
    return res;
  };

  try {
    const bool has_reg = config.regulation.has_value();
    if (mode == Mode::regulate && !has_reg)
      return finish(exit_schema,
                    "scenario '" + config.name + "' has no regulation section");
    const bool use_reg =
        has_reg && (mode == Mode::regulate || mode == Mode::simulate);

    write_json_file(out / "config.json", config.to_json());
    add(out / "config.json");

    const auto g = gains_from_config(config);
    std::optional<pipeline::InternalModel> im;
    if (use_reg)
      im = pipeline::internal_model_from_S(config.regulation->S,
                                           config.regulation->q,
                                           config.regulation->omega_s);
    const pipeline::InternalModel* imp = im ? &*im : nullptr;
    const auto aux = pipeline::aux_from_gains(g, config.omega_f, imp);

    const Index n = config.plant.n();
    numkit::Rng rng(config.seed);
    pipeline::AcquisitionStack stack;
    stack.plant = config.plant;
    stack.x0 = config.x0 ? *config.x0 : rng.uniform_vector(n, -1.0, 1.0);
    // The verification simulation restarts the plant from a second draw so
    // it exercises an initial condition the data never saw.
    const Vec x0_sim = config.x0 ? *config.x0 : rng.uniform_vector(n, -1.0, 1.0);
    stack.excitation = config.excitation;
    if (use_reg) {
      stack.S = config.regulation->S;
      stack.w0 = config.regulation->acquisition_w0;
      stack.P_w = config.regulation->P_w;
      stack.Q_w = config.regulation->Q_w;
      stack.q = config.regulation->q;
    }
    Vec times(config.samples);
    for (Index k = 0; k < config.samples; ++k)
      times(k) = config.tau * double(k) / double(config.samples);

    res.acquisition = pipeline::filter_dataset(stack, g, aux, imp, times);
    io::write_trajectory_csv(res.acquisition, out / "acquisition.csv");
    add(out / "acquisition.csv");

    if (mode == Mode::estimate_index) {
      const auto schedule =
          config.est_schedule
              ? *config.est_schedule
              : estimation::Schedule::default_schedule(config.nu_max);
      res.estimate =
          estimation::estimate_index(res.acquisition, config.nu_max, schedule);
      write_json_file(out / "estimate.json", estimate_to_json(res.estimate));
      add(out / "estimate.json");
      if (!res.estimate.success)
        return finish(exit_informativity, res.estimate.verdict);
      return finish(exit_ok,
                    "estimated observability index " +
                        std::to_string(res.estimate.nu_hat) +
                        (res.estimate.low_confidence ? " (low confidence)" : ""));
    }

    res.batches = pipeline::assemble_batches(res.acquisition, config.samples,
                                             g, imp);
    io::write_batches(res.batches, out / "batches");
    for (const char* f : {"U.csv", "X.csv", "Z.csv", "Zdot.csv", "batches.json"})
      add(out / "batches" / f);

    res.informativity = pipeline::informativity_check(res.batches);
    write_json_file(out / "informativity.json",
                    informativity_to_json(res.informativity));
    add(out / "informativity.json");
    if (!res.informativity.informative)
      return finish(exit_informativity,
                    "data not informative for synthesis: rank " +
                        std::to_string(res.informativity.rank) + " of " +
                        std::to_string(res.informativity.required));

    res.lmi = synthesis::solve_design_lmi(res.batches, res.batches.zero_rows(),
                                          config.epsilon);
    write_json_file(out / "lmi.json", lmi_to_json(res.lmi));
    add(out / "lmi.json");
    if (!res.lmi.feasible())
      return finish(exit_infeasible,
                    std::string("design program ") +
                        lmi_status_name(res.lmi.status) + ": " +
                        res.lmi.diagnostics);

    res.gain = synthesis::extract_gain(res.batches, res.lmi);
    io::write_matrix_csv(res.gain, out / "gain.csv");
    add(out / "gain.csv");

    res.controller = synthesis::build_controller(g, res.gain, imp);
    json prov{{"scenario", config.name},
              {"mode", mode_name(mode)},
              {"tuning", config.tuning.kind},
              {"mu", g.mu},
              {"nu", g.nu},
              {"samples", config.samples},
              {"tau", config.tau},
              {"seed", config.seed},
              {"epsilon", res.lmi.epsilon}};
    if (imp)
      prov["internal_model"] =
          json{{"d", imp->d}, {"q", imp->q}, {"omega_s", imp->omega_s}};
    write_json_file(out / "controller.json",
                    controller_to_json(res.controller, std::move(prov)));
    add(out / "controller.json");

    const CVec required = config.required_modes ? *config.required_modes
                                                : default_required_modes(config);
    res.certificate = synthesis::certify_closed_loop(
        config.plant, res.controller, required, config.cert_margin, nullptr);
    double horizon = config.sim_horizon;
    if (horizon <= 0.0 && res.certificate.hurwitz)
      horizon = 12.0 / std::max(-res.certificate.worst_real_part, 1e-6);
    if (use_reg && res.certificate.hurwitz) {
      synthesis::RegulationSim sim{config.regulation->S,
                                   config.regulation->simulation_w0,
                                   config.regulation->P_w,
                                   config.regulation->Q_w,
                                   config.regulation->q,
                                   horizon,
                                   config.sim_samples,
                                   config.decay_rho};
      res.certificate = synthesis::certify_closed_loop(
          config.plant, res.controller, required, config.cert_margin, &sim);
    }
    write_json_file(out / "certificate.json",
                    certificate_to_json(res.certificate));
    add(out / "certificate.json");
    {
      std::ofstream txt(out / "certificate.txt");
      txt << certificate_to_text(res.certificate, config.name);
    }
    add(out / "certificate.txt");

    if ((mode == Mode::simulate || mode == Mode::regulate) &&
        res.certificate.hurwitz) {
      res.simulation = simulate_closed_loop(
          config.plant, use_reg ? &*config.regulation : nullptr,
          res.controller, x0_sim, horizon, config.sim_samples);
      io::write_trajectory_csv(res.simulation, out / "simulation.csv");
      add(out / "simulation.csv");
      if (options.write_chart) {
        const std::string signal = use_reg ? "e" : "y";
        const std::string title =
            config.name + (use_reg ? ": regulated error" : ": plant output");
        std::ofstream svg(out / "chart.svg");
        svg << io::trajectory_svg(res.simulation, signal, title);
        add(out / "chart.svg");
      }
    }

    if (!res.certificate.pass) {
      std::string why;
      if (!res.certificate.hurwitz)
        why = "closed loop is not Hurwitz (worst real part " +
              fmt(res.certificate.worst_real_part) + ")";
      else if (!res.certificate.required_ok)
        why = "required modes missing from the closed-loop spectrum";
      else
        why = "regulation error decay " + fmt(res.certificate.decay_ratio) +
              " exceeds the bound " + fmt(config.decay_rho);
      return finish(exit_certification, "certification failed: " + why);
    }
    std::string okmsg =
        "certified: " +
        std::to_string(res.certificate.closed_loop.eigenvalues.size()) +
        " closed-loop eigenvalues, worst real part " +
        fmt(res.certificate.worst_real_part);
    if (res.certificate.error_final >= 0.0)
      okmsg += ", regulation decay " + fmt(res.certificate.decay_ratio);
    return finish(exit_ok, okmsg);
  } catch (const SchemaError& ex) {
    return finish(exit_schema, ex.what());
  } catch (const ArgumentError& ex) {
    return finish(exit_schema, ex.what());
  } catch (const DimensionError& ex) {
    return finish(exit_schema, ex.what());
  } catch (const StructuralError& ex) {
    return finish(exit_schema, ex.what());
  } catch (const NumericError& ex) {
    return finish(exit_error, ex.what());
  } catch (const Error& ex) {
    return finish(exit_error, ex.what());
  }
}

// ---------------------------------------------------------------------------
// Report generation.

std::string export_report(const fs::path& run_dir) {
  const fs::path cfg_path = run_dir / "config.json";
  if (!fs::exists(cfg_path))
    throw SchemaError("no run manifest: " + cfg_path.string() +
                      " does not exist");
  const json config = read_json_file(cfg_path);

  const auto maybe = [&](const char* file) -> std::optional<json> {
    const fs::path p = run_dir / file;
    if (!fs::exists(p)) return std::nullopt;
    return read_json_file(p);
  };

  json report;
  report["scenario"] = config.value("name", std::string());
  report["description"] = config.value("description", std::string());
  if (const auto info = maybe("run_info.json")) {
    // Only the deterministic part of run_info is merged (no timestamps).
    report["mode"] = info->value("mode", std::string());
    report["exit_code"] = info->value("exit_code", -1);
    report["message"] = info->value("message", std::string());
  }
  const auto informativity = maybe("informativity.json");
  const auto lmi = maybe("lmi.json");
  const auto certificate = maybe("certificate.json");
  const auto estimate = maybe("estimate.json");
  if (informativity) report["informativity"] = *informativity;
  if (lmi) {
    // Trimmed copy without the bulky P/Q payloads.
    report["design_program"] = *lmi;
    report["design_program"].erase("P");
    report["design_program"].erase("Q");
  }
  if (certificate) report["certificate"] = *certificate;
  if (estimate) report["estimate"] = *estimate;
  report["config"] = config;
  write_json_file(run_dir / "report.json", report);

  std::ostringstream out;
  out << "run report: " << report["scenario"].get<std::string>() << "\n";
  const std::string desc = report["description"].get<std::string>();
  if (!desc.empty()) out << desc << "\n";
  if (report.contains("mode"))
    out << "mode: " << report["mode"].get<std::string>() << "\n"
        << "exit: " << report["exit_code"].get<int>() << " ("
        << report["message"].get<std::string>() << ")\n";
  if (informativity) {
    out << "\ninformativity: rank " << (*informativity)["rank"].get<long>()
        << " of " << (*informativity)["required"].get<long>()
        << ((*informativity)["informative"].get<bool>() ? "" : " (NOT informative)");
    if ((*informativity)["gap_ratio"].is_number())
      out << ", decision gap ratio "
          << fmt((*informativity)["gap_ratio"].get<double>());
    out << "\n";
  }
  if (lmi) {
    out << "design program: " << (*lmi)["status"].get<std::string>()
        << " (epsilon " << fmt((*lmi)["epsilon"].get<double>())
        << ", equality residual "
        << fmt((*lmi)["equality_residual"].get<double>()) << ")\n";
    const std::string diag = (*lmi)["diagnostics"].get<std::string>();
    if (!diag.empty()) out << "  " << diag << "\n";
  }
  if (certificate) {
    out << "\nclosed-loop eigenvalues ("
        << (*certificate)["count"].get<long>() << "):\n";
    for (const auto& e : (*certificate)["eigenvalues"])
      out << "  "
          << fmt_complex(Complex(e["re"].get<double>(), e["im"].get<double>()))
          << "\n";
    out << "worst real part: "
        << fmt((*certificate)["worst_real_part"].get<double>())
        << ", hurwitz: "
        << ((*certificate)["hurwitz"].get<bool>() ? "yes" : "no") << "\n";
    out << "required modes:\n";
    for (const auto& r : (*certificate)["required"]) {
      out << "  "
          << fmt_complex(Complex(r["re"].get<double>(), r["im"].get<double>()));
      if (r["matched"].get<bool>())
        out << "  matched, distance " << fmt(r["distance"].get<double>()) << "\n";
      else
        out << "  MISSING\n";
    }
    if (certificate->contains("error_final"))
      out << "regulation: |e(T)| = "
          << fmt((*certificate)["error_final"].get<double>())
          << ", early peak = " << fmt((*certificate)["error_peak"].get<double>())
          << ", ratio = " << fmt((*certificate)["decay_ratio"].get<double>())
          << ((*certificate)["decay_ok"].get<bool>() ? " (decayed)"
                                                     : " (NOT decayed)")
          << "\n";
    out << "certificate: "
        << ((*certificate)["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
  }
  if (estimate) {
    out << "\nindex estimate: ";
    if ((*estimate)["success"].get<bool>())
      out << "nu = " << (*estimate)["nu_hat"].get<long>();
    else
      out << "failed";
    out << "\n  " << (*estimate)["verdict"].get<std::string>() << "\n";
    for (const auto& pr : (*estimate)["probes"]) {
      out << "  candidate " << pr["candidate"].get<long>() << ": rank "
          << pr["rank"].get<long>() << " of " << pr["full"].get<long>();
      if (pr["gap_ratio"].is_number())
        out << " (gap ratio " << fmt(pr["gap_ratio"].get<double>()) << ")";
      out << "\n";
    }
  }
  const std::string text = out.str();
  std::ofstream txt(run_dir / "report.txt");
  if (!txt)
    throw ArgumentError("cannot open " + (run_dir / "report.txt").string() +
                        " for writing");
  txt << text;
  return text;
}

}  // namespace ddctl::scenario
