#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "geomark/geometry.hpp"
#include "geomark/regress.hpp"

namespace geomark {

/// One NDJSON line: {"side":..,"points":[[x,y],..],"marks":[..]} with
/// 17 significant digits; `marks` omitted for unmarked patterns.
void write_pattern_line(std::ostream& os, const PointPattern& p,
                        std::optional<std::span<const double>> marks = std::nullopt);
void write_patterns_ndjson(std::ostream& os, std::span<const MarkedPattern> patterns);

struct PatternRecord {
  PointPattern pattern;
  std::optional<std::vector<double>> marks;
};

/// Throws DomainError on malformed lines (with the line number).
std::vector<PatternRecord> read_patterns_ndjson(std::istream& is);
/// Every record must carry marks.
std::vector<MarkedPattern> read_marked_patterns(std::istream& is);

/// Header row of labels, one row per sample, 17 significant digits.
void write_matrix_csv(std::ostream& os, std::span<const std::string> labels, const Eigen::MatrixXd& m);
struct LabeledMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd values;
};
LabeledMatrix read_matrix_csv(std::istream& is);

/// Raw little-endian cache: magic, rows, cols, row-major doubles.
void write_matrix_binary(const std::filesystem::path& path, const Eigen::MatrixXd& m);
std::optional<Eigen::MatrixXd> read_matrix_binary(const std::filesystem::path& path);

nlohmann::json ridge_to_json(const RidgeModel& model);
RidgeModel ridge_from_json(const nlohmann::json& j);

/// output label, lambda, mean validation MSE; one row per (output, lambda).
void write_cv_report(std::ostream& os, std::span<const std::string> output_labels,
                     const CrossValidation& cv);

std::string read_file(const std::filesystem::path& path);
/// Throws std::runtime_error when the file cannot be opened.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace geomark
