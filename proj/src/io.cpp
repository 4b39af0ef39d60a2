// File formats: CSV trajectories and matrices, JSON matrices, data-batch
// bundles, and a small self-contained SVG chart for reports.
#include "ddctl/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

#include "ddctl/errors.hpp"

namespace ddctl::io {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double parse_double(const std::string& field, const std::string& where) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || end != begin + field.size())
    throw SchemaError("not a number in " + where + ": '" + field + "'");
  return v;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write " + path.string());
  return out;
}

void write_matrix_rows(std::ofstream& out, const Mat& M) {
  for (Index r = 0; r < M.rows(); ++r) {
    for (Index c = 0; c < M.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(M(r, c));
    }
    out << '\n';
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(const lti::SampledTrajectory& traj,
                          const std::filesystem::path& path) {
  const Index count = traj.sample_count();
  for (const auto& [name, values] : traj.signals) {
    if (values.cols() != count)
      throw DimensionError("trajectory signal '" + name +
                           "' disagrees with the time grid");
    // Reading splits labels at the last underscore, so a name that itself
    // ends in '_<digits>' could not round-trip.
    const auto cut = name.rfind('_');
    const bool ambiguous =
        cut != std::string::npos && cut + 1 < name.size() &&
        name.find_first_not_of("0123456789", cut + 1) == std::string::npos;
    if (name.empty() || name == "t" || name.find(',') != std::string::npos ||
        ambiguous)
      throw ArgumentError("signal name unsuitable for CSV: '" + name + "'");
  }
  auto out = open_for_write(path);
  out << 't';
  for (const auto& [name, values] : traj.signals)
    for (Index r = 0; r < values.rows(); ++r)
      out << ',' << name << '_' << (r + 1);
  out << '\n';
  for (Index k = 0; k < count; ++k) {
    out << format_double(traj.times(k));
    for (const auto& [name, values] : traj.signals)
      for (Index r = 0; r < values.rows(); ++r)
        out << ',' << format_double(values(r, k));
    out << '\n';
  }
}

lti::SampledTrajectory read_trajectory_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw SchemaError("empty trajectory file " + path.string());

  const auto header = split_line(lines[0]);
  if (header.empty() || header[0] != "t")
    throw SchemaError("trajectory header must start with 't'");

  // Parse "name_index" columns, indices one-based per signal.
  struct ColumnRef {
    std::string name;
    Index index;  // zero-based row within the signal
  };
  std::vector<ColumnRef> columns;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string& label = header[c];
    const auto cut = label.rfind('_');
    if (cut == std::string::npos || cut == 0 || cut + 1 == label.size())
      throw SchemaError("column label '" + label + "' is not 'name_index'");
    const std::string digits = label.substr(cut + 1);
    if (digits.find_first_not_of("0123456789") != std::string::npos)
      throw SchemaError("column label '" + label + "' has a non-numeric index");
    const long idx = std::strtol(digits.c_str(), nullptr, 10);
    if (idx < 1)
      throw SchemaError("column label '" + label + "' must be one-based");
    columns.push_back({label.substr(0, cut), Index(idx) - 1});
  }

  const Index count = Index(lines.size()) - 1;
  lti::SampledTrajectory traj;
  traj.times.resize(count);

  std::map<std::string, Index> dims;
  for (const auto& col : columns)
    dims[col.name] = std::max(dims[col.name], col.index + 1);
  std::map<std::string, Index> seen;
  for (const auto& col : columns) seen[col.name] += 1;
  for (const auto& [name, dim] : dims) {
    if (seen[name] != dim)
      throw SchemaError("signal '" + name +
                        "' has duplicate or missing column indices");
    traj.signals[name] = Mat::Zero(dim, count);
  }

  for (Index k = 0; k < count; ++k) {
    const auto fields = split_line(lines[std::size_t(k) + 1]);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "row " << (k + 2) << " has " << fields.size() << " fields, "
          << "expected " << header.size();
      throw SchemaError(msg.str());
    }
    traj.times(k) = parse_double(fields[0], "time column");
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const auto& col = columns[c - 1];
      traj.signals[col.name](col.index, k) =
          parse_double(fields[c], "column '" + header[c] + "'");
    }
  }
  return traj;
}

void write_matrix_csv(const Mat& M, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  write_matrix_rows(out, M);
}

Mat read_matrix_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) return Mat(0, 0);
  std::vector<std::vector<double>> rows;
  rows.reserve(lines.size());
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto fields = split_line(lines[r]);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      std::ostringstream where;
      where << "matrix row " << (r + 1);
      row.push_back(parse_double(f, where.str()));
    }
    if (!rows.empty() && row.size() != rows[0].size())
      throw SchemaError("ragged matrix CSV: " + path.string());
    rows.push_back(std::move(row));
  }
  Mat M(Index(rows.size()), Index(rows[0].size()));
  for (Index r = 0; r < M.rows(); ++r)
    for (Index c = 0; c < M.cols(); ++c)
      M(r, c) = rows[std::size_t(r)][std::size_t(c)];
  return M;
}

nlohmann::json matrix_to_json(const Mat& M) {
  nlohmann::json data = nlohmann::json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    data.push_back(std::move(row));
  }
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(data)}};
}

Mat matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") ||
      !j.contains("data"))
    throw SchemaError("matrix JSON needs 'rows', 'cols', and 'data'");
  if (!j["rows"].is_number_integer() || !j["cols"].is_number_integer())
    throw SchemaError("matrix JSON dimensions must be integers");
  const Index rows = j["rows"].get<Index>();
  const Index cols = j["cols"].get<Index>();
  if (rows < 0 || cols < 0) throw SchemaError("matrix JSON dimensions negative");
  const auto& data = j["data"];
  if (!data.is_array() || Index(data.size()) != rows)
    throw SchemaError("matrix JSON data has the wrong number of rows");
  Mat M(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = data[std::size_t(r)];
    if (!row.is_array() || Index(row.size()) != cols)
      throw SchemaError("matrix JSON data row has the wrong width");
    for (Index c = 0; c < cols; ++c) {
      const auto& cell = row[std::size_t(c)];
      if (!cell.is_number()) throw SchemaError("matrix JSON cell not a number");
      M(r, c) = cell.get<double>();
    }
  }
  return M;
}

void write_batches(const pipeline::DataBatches& b,
                   const std::filesystem::path& dir) {
  b.validate();
  std::filesystem::create_directories(dir);
  write_matrix_csv(b.U, dir / "U.csv");
  write_matrix_csv(b.X, dir / "X.csv");
  write_matrix_csv(b.Z, dir / "Z.csv");
  write_matrix_csv(b.Zdot, dir / "Zdot.csv");
  nlohmann::json meta = {{"samples", b.N()},
                         {"tau_s", b.tau_s},
                         {"rows",
                          {{"U", b.U.rows()},
                           {"X", b.X.rows()},
                           {"Z", b.Z.rows()},
                           {"Zdot", b.Zdot.rows()}}}};
  auto out = open_for_write(dir / "batches.json");
  out << meta.dump(2) << '\n';
}

pipeline::DataBatches read_batches(const std::filesystem::path& dir) {
  std::ifstream in(dir / "batches.json");
  if (!in) throw ArgumentError("cannot open " + (dir / "batches.json").string());
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("bad batches.json: ") + ex.what());
  }
  if (!meta.contains("samples") || !meta.contains("tau_s") ||
      !meta.contains("rows"))
    throw SchemaError("batches.json needs 'samples', 'tau_s', and 'rows'");

  pipeline::DataBatches b;
  b.U = read_matrix_csv(dir / "U.csv");
  b.X = read_matrix_csv(dir / "X.csv");
  b.Z = read_matrix_csv(dir / "Z.csv");
  b.Zdot = read_matrix_csv(dir / "Zdot.csv");
  b.tau_s = meta["tau_s"].get<double>();

  const Index samples = meta["samples"].get<Index>();
  const auto& rows = meta["rows"];
  const std::pair<const char*, const Mat*> parts[] = {
      {"U", &b.U}, {"X", &b.X}, {"Z", &b.Z}, {"Zdot", &b.Zdot}};
  for (const auto& [name, M] : parts) {
    if (!rows.contains(name))
      throw SchemaError(std::string("batches.json rows missing ") + name);
    if (M->rows() != rows[name].get<Index>() || M->cols() != samples) {
      std::ostringstream msg;
      msg << name << ".csv is " << M->rows() << "x" << M->cols()
          << ", batches.json expects " << rows[name].get<Index>() << "x"
          << samples;
      throw SchemaError(msg.str());
    }
  }
  b.validate();
  return b;
}

std::string trajectory_svg(const lti::SampledTrajectory& traj,
                           const std::string& signal,
                           const std::string& title) {
  if (!traj.has(signal))
    throw ArgumentError("trajectory_svg: no signal '" + signal + "'");
  const Mat& M = traj.at(signal);
  const Index count = traj.sample_count();
  if (count < 2 || M.cols() != count)
    throw ArgumentError("trajectory_svg: need at least two samples");
  const double t0 = traj.times(0), t1 = traj.times(count - 1);
  if (!(t1 > t0)) throw ArgumentError("trajectory_svg: empty time span");

  double lo = M.minCoeff(), hi = M.maxCoeff();
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double W = 640.0, H = 360.0;
  const double ml = 64.0, mr = 16.0, mt = 40.0, mb = 44.0;
  const auto xmap = [&](double t) {
    return ml + (t - t0) / (t1 - t0) * (W - ml - mr);
  };
  const auto ymap = [&](double v) {
    return H - mb - (v - lo) / (hi - lo) * (H - mt - mb);
  };
  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H
      << "\">\n";
  svg << "  <rect width=\"" << W << "\" height=\"" << H
      << "\" fill=\"white\"/>\n";
  svg << "  <text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">"
      << title << "</text>\n";
  // Axes.
  svg << "  <line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
      << "\" y2=\"" << H - mb << "\" stroke=\"#444\"/>\n";
  svg << "  <line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << H - mb << "\" stroke=\"#444\"/>\n";
  // Axis labels: end points and a zero line when visible.
  svg << "  <text x=\"" << ml << "\" y=\"" << H - mb + 18
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << num(t0)
      << "</text>\n";
  svg << "  <text x=\"" << W - mr << "\" y=\"" << H - mb + 18
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << num(t1) << "</text>\n";
  svg << "  <text x=\"" << ml - 6 << "\" y=\"" << ymap(lo + pad)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << num(lo + pad) << "</text>\n";
  svg << "  <text x=\"" << ml - 6 << "\" y=\"" << ymap(hi - pad)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << num(hi - pad) << "</text>\n";
  if (lo < 0.0 && hi > 0.0)
    svg << "  <line x1=\"" << ml << "\" y1=\"" << ymap(0.0) << "\" x2=\""
        << W - mr << "\" y2=\"" << ymap(0.0)
        << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";

  for (Index r = 0; r < M.rows(); ++r) {
    svg << "  <polyline fill=\"none\" stroke=\""
        << kColors[std::size_t(r) % 8] << "\" stroke-width=\"1.5\" points=\"";
    for (Index k = 0; k < count; ++k) {
      if (k > 0) svg << ' ';
      char buf[48];
      std::snprintf(buf, sizeof buf, "%.2f,%.2f", xmap(traj.times(k)),
                    ymap(M(r, k)));
      svg << buf;
    }
    svg << "\"/>\n";
    // Channel legend swatch.
    svg << "  <text x=\"" << W - mr - 8 << "\" y=\"" << mt + 16 * double(r + 1)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\" fill=\""
        << kColors[std::size_t(r) % 8] << "\">" << signal << "_" << (r + 1)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace ddctl::io
