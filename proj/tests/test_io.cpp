// File-format tests: round-trip exactness of CSV and JSON forms, bundle
// integrity checks, and the SVG chart skeleton.
#include "ddctl/io.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <string>

#include "ddctl/errors.hpp"
#include "ddctl/realization.hpp"
#include "plant_factory.hpp"

namespace ddctl {
namespace {

namespace fs = std::filesystem;
using numkit::Index;
using numkit::Mat;
using numkit::Vec;

fs::path temp_dir(const std::string& leaf) {
  const fs::path dir = fs::path(::testing::TempDir()) / leaf;
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

lti::SampledTrajectory small_trajectory() {
  lti::SampledTrajectory traj;
  traj.times = Vec::LinSpaced(5, 0.0, 2.0);
  numkit::Rng rng(3);
  traj.signals["u"] = rng.uniform_matrix(2, 5, -2.0, 2.0);
  traj.signals["y"] = rng.uniform_matrix(1, 5, -1.0, 1.0);
  traj.signals["zeta"] = rng.uniform_matrix(3, 5, -4.0, 4.0);
  return traj;
}

TEST(FormatDouble, RoundTripsThroughText) {
  const double values[] = {0.0,   -0.0,     1.0 / 3.0,          -1.0 / 7.0,
                           1e300, 1e-300,   0.1234567890123456, -98765.4321,
                           2.0,   -1.5e-17, 3.141592653589793};
  for (double v : values) {
    const std::string s = io::format_double(v);
    EXPECT_EQ(std::strtod(s.c_str(), nullptr), v) << s;
  }
}

TEST(TrajectoryCsv, RoundTripIsBitExact) {
  const auto traj = small_trajectory();
  const auto dir = temp_dir("traj_roundtrip");
  io::write_trajectory_csv(traj, dir / "traj.csv");
  const auto back = io::read_trajectory_csv(dir / "traj.csv");

  ASSERT_EQ(back.sample_count(), traj.sample_count());
  for (Index k = 0; k < traj.sample_count(); ++k)
    EXPECT_EQ(back.times(k), traj.times(k));
  ASSERT_EQ(back.signals.size(), traj.signals.size());
  for (const auto& [name, values] : traj.signals) {
    ASSERT_TRUE(back.has(name));
    const Mat& restored = back.at(name);
    ASSERT_EQ(restored.rows(), values.rows());
    for (Index r = 0; r < values.rows(); ++r)
      for (Index k = 0; k < values.cols(); ++k)
        EXPECT_EQ(restored(r, k), values(r, k)) << name;
  }
}

TEST(TrajectoryCsv, HeaderListsChannelsAlphabetically) {
  const auto traj = small_trajectory();
  const auto dir = temp_dir("traj_header");
  io::write_trajectory_csv(traj, dir / "traj.csv");
  const std::string text = slurp(dir / "traj.csv");
  const std::string header = text.substr(0, text.find('\n'));
  EXPECT_EQ(header, "t,u_1,u_2,y_1,zeta_1,zeta_2,zeta_3");
}

TEST(TrajectoryCsv, UnderscoreNamesSurviveTheRoundTrip) {
  lti::SampledTrajectory traj;
  traj.times = Vec::LinSpaced(3, 0.0, 1.0);
  traj.signals["zeta_dot"] = Mat::Ones(2, 3);
  const auto dir = temp_dir("traj_underscore");
  io::write_trajectory_csv(traj, dir / "traj.csv");
  const auto back = io::read_trajectory_csv(dir / "traj.csv");
  ASSERT_TRUE(back.has("zeta_dot"));
  EXPECT_EQ(back.at("zeta_dot").rows(), 2);
}

TEST(TrajectoryCsv, RejectsMalformedFiles) {
  const auto dir = temp_dir("traj_bad");
  const auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream out(dir / name);
    out << body;
    return dir / name;
  };
  EXPECT_THROW(io::read_trajectory_csv(write("empty.csv", "")), SchemaError);
  EXPECT_THROW(io::read_trajectory_csv(
                   write("no_t.csv", "x,u_1\n0,1\n")),
               SchemaError);
  EXPECT_THROW(io::read_trajectory_csv(
                   write("bad_label.csv", "t,u\n0,1\n")),
               SchemaError);
  EXPECT_THROW(io::read_trajectory_csv(
                   write("zero_based.csv", "t,u_0\n0,1\n")),
               SchemaError);
  EXPECT_THROW(io::read_trajectory_csv(
                   write("ragged.csv", "t,u_1\n0,1\n1\n")),
               SchemaError);
  EXPECT_THROW(io::read_trajectory_csv(
                   write("not_number.csv", "t,u_1\n0,abc\n")),
               SchemaError);
  EXPECT_THROW(io::read_trajectory_csv(
                   write("gap.csv", "t,u_1,u_3\n0,1,2\n")),
               SchemaError);
  EXPECT_THROW(io::read_trajectory_csv(
                   write("dup.csv", "t,u_1,u_1\n0,1,2\n")),
               SchemaError);
}

TEST(MatrixCsv, RoundTripAndValidation) {
  numkit::Rng rng(11);
  const Mat M = rng.uniform_matrix(4, 3, -5.0, 5.0);
  const auto dir = temp_dir("matrix");
  io::write_matrix_csv(M, dir / "M.csv");
  const Mat back = io::read_matrix_csv(dir / "M.csv");
  ASSERT_EQ(back.rows(), 4);
  ASSERT_EQ(back.cols(), 3);
  for (Index r = 0; r < 4; ++r)
    for (Index c = 0; c < 3; ++c) EXPECT_EQ(back(r, c), M(r, c));

  std::ofstream(dir / "ragged.csv") << "1,2\n3\n";
  EXPECT_THROW(io::read_matrix_csv(dir / "ragged.csv"), SchemaError);
  EXPECT_THROW(io::read_matrix_csv(dir / "missing.csv"), ArgumentError);
}

TEST(MatrixJson, RoundTripAndValidation) {
  numkit::Rng rng(13);
  const Mat M = rng.uniform_matrix(2, 5, -1.0, 1.0);
  const auto j = io::matrix_to_json(M);
  EXPECT_EQ(j["rows"].get<Index>(), 2);
  EXPECT_EQ(j["cols"].get<Index>(), 5);
  const Mat back = io::matrix_from_json(j);
  for (Index r = 0; r < 2; ++r)
    for (Index c = 0; c < 5; ++c) EXPECT_EQ(back(r, c), M(r, c));

  EXPECT_THROW(io::matrix_from_json(nlohmann::json::array()), SchemaError);
  EXPECT_THROW(io::matrix_from_json({{"rows", 1}, {"cols", 1}}), SchemaError);
  EXPECT_THROW(io::matrix_from_json(
                   {{"rows", 2}, {"cols", 1}, {"data", {{1.0}}}}),
               SchemaError);
  EXPECT_THROW(io::matrix_from_json(
                   {{"rows", 1}, {"cols", 2}, {"data", {{1.0}}}}),
               SchemaError);
  EXPECT_THROW(io::matrix_from_json(
                   {{"rows", 1}, {"cols", 1}, {"data", {{"x"}}}}),
               SchemaError);
}

TEST(Batches, BundleRoundTripIsBitExact) {
  numkit::Rng rng(5);
  pipeline::DataBatches b;
  b.U = rng.uniform_matrix(2, 12, -1.0, 1.0);
  b.X = rng.uniform_matrix(3, 12, -1.0, 1.0);
  b.Z = rng.uniform_matrix(6, 12, -1.0, 1.0);
  b.Zdot = rng.uniform_matrix(6, 12, -1.0, 1.0);
  b.tau_s = 0.04;

  const auto dir = temp_dir("bundle");
  io::write_batches(b, dir / "batches");
  const auto back = io::read_batches(dir / "batches");
  EXPECT_EQ(back.tau_s, b.tau_s);
  EXPECT_TRUE(back.U == b.U);
  EXPECT_TRUE(back.X == b.X);
  EXPECT_TRUE(back.Z == b.Z);
  EXPECT_TRUE(back.Zdot == b.Zdot);
}

TEST(Batches, ReadRejectsInconsistentBundles) {
  numkit::Rng rng(5);
  pipeline::DataBatches b;
  b.U = rng.uniform_matrix(2, 12, -1.0, 1.0);
  b.X = rng.uniform_matrix(3, 12, -1.0, 1.0);
  b.Z = rng.uniform_matrix(6, 12, -1.0, 1.0);
  b.Zdot = rng.uniform_matrix(6, 12, -1.0, 1.0);
  b.tau_s = 0.04;

  const auto dir = temp_dir("bundle_bad") / "batches";
  io::write_batches(b, dir);
  // Truncate one part: shapes no longer match the manifest.
  io::write_matrix_csv(b.Z.topRows(4), dir / "Z.csv");
  EXPECT_THROW(io::read_batches(dir), SchemaError);

  io::write_batches(b, dir);
  std::ofstream(dir / "batches.json") << "{\"samples\": 12}\n";
  EXPECT_THROW(io::read_batches(dir), SchemaError);

  EXPECT_THROW(io::read_batches(dir / "nowhere"), ArgumentError);
}

TEST(TrajectorySvg, DrawsOnePolylinePerChannel) {
  const auto traj = small_trajectory();
  const std::string svg = io::trajectory_svg(traj, "u", "input channels");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("input channels"), std::string::npos);
  size_t polylines = 0;
  for (size_t pos = svg.find("<polyline"); pos != std::string::npos;
       pos = svg.find("<polyline", pos + 1))
    ++polylines;
  EXPECT_EQ(polylines, 2u);  // "u" has two channels
  EXPECT_NE(svg.find("u_1"), std::string::npos);
  EXPECT_NE(svg.find("u_2"), std::string::npos);
}

TEST(TrajectorySvg, RejectsUnknownOrDegenerateSignals) {
  const auto traj = small_trajectory();
  EXPECT_THROW(io::trajectory_svg(traj, "nope", "x"), ArgumentError);
  lti::SampledTrajectory single;
  single.times = Vec::Zero(1);
  single.signals["y"] = Mat::Zero(1, 1);
  EXPECT_THROW(io::trajectory_svg(single, "y", "x"), ArgumentError);
}

}  // namespace
}  // namespace ddctl
