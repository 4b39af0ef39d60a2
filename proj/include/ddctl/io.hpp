// File formats: CSV trajectories and matrices (17 significant digits),
// JSON-serialized matrices, data-batch bundles, and report documents.
#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ddctl/lti.hpp"
#include "ddctl/numkit.hpp"
#include "ddctl/pipeline.hpp"

namespace ddctl::io {

using numkit::Index;
using numkit::Mat;
using numkit::Vec;

/// Format a double with 17 significant digits (round-trip exact).
std::string format_double(double v);

/// Write a trajectory as CSV: header "t,<name>_1,<name>_2,...", one row per
/// sample, every value with 17 significant digits. Signals appear in map
/// (alphabetical) order.
void write_trajectory_csv(const lti::SampledTrajectory& traj,
                          const std::filesystem::path& path);

/// Read a trajectory CSV written by write_trajectory_csv (or any CSV with a
/// "t" column and "<name>_<index>" columns). Throws SchemaError on malformed
/// input.
lti::SampledTrajectory read_trajectory_csv(const std::filesystem::path& path);

/// Plain matrix CSV: one row per matrix row, no header.
void write_matrix_csv(const Mat& M, const std::filesystem::path& path);
Mat read_matrix_csv(const std::filesystem::path& path);

/// JSON representation {"rows": r, "cols": c, "data": [[...], ...]}.
nlohmann::json matrix_to_json(const Mat& M);
Mat matrix_from_json(const nlohmann::json& j);

/// Write a batch bundle: U.csv, X.csv, Z.csv, Zdot.csv plus batches.json
/// (dimensions, sample spacing, sample count).
void write_batches(const pipeline::DataBatches& b,
                   const std::filesystem::path& dir);
pipeline::DataBatches read_batches(const std::filesystem::path& dir);

/// Minimal self-contained SVG line chart of the named signal's channels
/// against time (used for simulation reports).
std::string trajectory_svg(const lti::SampledTrajectory& traj,
                           const std::string& signal, const std::string& title);

}  // namespace ddctl::io
