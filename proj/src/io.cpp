#include "geomark/io.hpp"

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "geomark/errors.hpp"

namespace geomark {

using nlohmann::json;

void write_pattern_line(std::ostream& os, const PointPattern& p,
                        std::optional<std::span<const double>> marks) {
  std::ostringstream line;
  line << std::setprecision(17);
  line << "{\"side\":" << p.window().side() << ",\"points\":[";
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) line << ',';
    line << '[' << p[i].x << ',' << p[i].y << ']';
  }
  line << ']';
  if (marks) {
    line << ",\"marks\":[";
    for (std::size_t i = 0; i < marks->size(); ++i) {
      if (i) line << ',';
      line << (*marks)[i];
    }
    line << ']';
  }
  line << "}\n";
  os << line.str();
}

void write_patterns_ndjson(std::ostream& os, std::span<const MarkedPattern> patterns) {
  for (const MarkedPattern& mp : patterns) write_pattern_line(os, mp.pattern(), mp.marks());
}

std::vector<PatternRecord> read_patterns_ndjson(std::istream& is) {
  std::vector<PatternRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      std::vector<Vec2> pts;
      for (const auto& xy : j.at("points")) pts.push_back({xy.at(0).get<double>(), xy.at(1).get<double>()});
      PatternRecord rec{PointPattern(TorusWindow(j.at("side").get<double>()), std::move(pts)), {}};
      if (j.contains("marks")) rec.marks = j.at("marks").get<std::vector<double>>();
      if (rec.marks && rec.marks->size() != rec.pattern.size()) {
        throw DomainError("marks and points differ in length");
      }
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw DomainError("pattern line " + std::to_string(lineno) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("pattern line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<MarkedPattern> read_marked_patterns(std::istream& is) {
  std::vector<MarkedPattern> out;
  for (PatternRecord& rec : read_patterns_ndjson(is)) {
    if (!rec.marks) throw DomainError("pattern without marks where marks are required");
    out.emplace_back(std::move(rec.pattern), std::move(*rec.marks));
  }
  return out;
}

void write_matrix_csv(std::ostream& os, std::span<const std::string> labels, const Eigen::MatrixXd& m) {
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (c) os << ',';
    os << '"' << labels[c] << '"';
  }
  os << '\n';
  std::ostringstream row;
  row << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    row.str("");
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) row << ',';
      row << m(r, c);
    }
    row << '\n';
    os << row.str();
  }
}

namespace {

std::vector<std::string> split_csv_header(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

LabeledMatrix read_matrix_csv(std::istream& is) {
  LabeledMatrix out;
  std::string line;
  if (!std::getline(is, line)) throw DomainError("empty CSV");
  out.labels = split_csv_header(line);
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != out.labels.size()) throw DomainError("CSV row width does not match header");
    rows.push_back(std::move(row));
  }
  out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.labels.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) out.values(r, c) = rows[r][c];
  }
  return out;
}

namespace {
constexpr std::uint64_t kMatrixMagic = 0x31584d4b52414d47ULL;  // "GMARKMX1"
}

void write_matrix_binary(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  const std::uint64_t header[3] = {kMatrixMagic, static_cast<std::uint64_t>(m.rows()),
                                   static_cast<std::uint64_t>(m.cols())};
  os.write(reinterpret_cast<const char*>(header), sizeof(header));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  os.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size()));
}

std::optional<Eigen::MatrixXd> read_matrix_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  std::uint64_t header[3];
  if (!is.read(reinterpret_cast<char*>(header), sizeof(header)) || header[0] != kMatrixMagic) {
    return std::nullopt;
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
      static_cast<Eigen::Index>(header[1]), static_cast<Eigen::Index>(header[2]));
  if (!is.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size()))) {
    return std::nullopt;
  }
  return Eigen::MatrixXd(rm);
}

namespace {

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

json ridge_to_json(const RidgeModel& model) {
  json j;
  j["feature_labels"] = model.feature_labels;
  j["output_labels"] = model.output_labels;
  j["lambdas"] = vector_json(model.lambdas);
  j["intercepts"] = vector_json(model.intercepts);
  j["rows"] = model.coefficients.rows();
  j["cols"] = model.coefficients.cols();
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(model.coefficients.size()));
  for (Eigen::Index r = 0; r < model.coefficients.rows(); ++r) {
    for (Eigen::Index c = 0; c < model.coefficients.cols(); ++c) flat.push_back(model.coefficients(r, c));
  }
  j["coefficients"] = flat;
  j["standardization"] = {{"means", vector_json(model.standardization.means)},
                          {"stds", vector_json(model.standardization.stds)}};
  return j;
}

RidgeModel ridge_from_json(const json& j) {
  RidgeModel m;
  try {
    m.feature_labels = j.at("feature_labels").get<std::vector<std::string>>();
    m.output_labels = j.at("output_labels").get<std::vector<std::string>>();
    m.lambdas = vector_from(j.at("lambdas"));
    m.intercepts = vector_from(j.at("intercepts"));
    m.standardization.means = vector_from(j.at("standardization").at("means"));
    m.standardization.stds = vector_from(j.at("standardization").at("stds"));
    const auto flat = j.at("coefficients").get<std::vector<double>>();
    const Eigen::Index rows = m.intercepts.size();
    const Eigen::Index cols = m.standardization.means.size();
    if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
      throw DomainError("coefficient count does not match rows x cols");
    }
    m.coefficients.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m.coefficients(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
    }
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed model file: ") + e.what());
  }
  return m;
}

void write_cv_report(std::ostream& os, std::span<const std::string> output_labels,
                     const CrossValidation& cv) {
  os << "output,lambda,validation_mse,standard_error\n" << std::setprecision(17);
  for (Eigen::Index p = 0; p < cv.validation_mse.rows(); ++p) {
    for (std::size_t g = 0; g < cv.grid.size(); ++g) {
      os << '"' << (static_cast<std::size_t>(p) < output_labels.size() ? output_labels[p] : std::to_string(p))
         << "\"," << cv.grid[g] << ',' << cv.validation_mse(p, static_cast<Eigen::Index>(g)) << ','
         << cv.validation_se(p, static_cast<Eigen::Index>(g)) << '\n';
    }
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

}  // namespace geomark
