#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "geomark/geometry.hpp"
#include "geomark/marks.hpp"
#include "geomark/reconstruct.hpp"
#include "geomark/regress.hpp"
#include "geomark/scattering.hpp"

namespace geomark {

enum class Split { train, test, validation };
std::string_view to_string(Split s);

struct ExperimentConfig {
  std::string preset = "desk";
  MarkModel mark = MarkModel::shot_noise;
  /// Truncated response (a, c, beta).
  double response_scale = 10.0;
  double response_floor = 0.6;
  double response_exponent = 3.0;

  double intensity = 40.0;
  double side = 1.0;
  std::size_t n_train = 2000;
  std::size_t n_test = 50;
  /// Held-out patterns for iteration-cap tuning.
  std::size_t n_validation = 20;
  int raster_n = 128;
  FilterBankParams bank;

  std::vector<double> lambda_grid = default_lambda_grid();
  int folds = 5;
  /// Leading fraction of the training set used for lambda selection.
  double cv_fraction = 0.5;

  int cap_exact = 30;
  int cap_estimated = 4;
  bool tune_caps = true;
  std::vector<int> cap_candidates = {1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 40, 50, 75, 100, 150, 200, 250};
  double eps = 1e-12;
  int memory = 10;

  int baseline_k = 15;
  std::size_t baseline_train_points = 20000;
  /// 0 means every test point.
  std::size_t baseline_test_points = 0;

  std::uint64_t seed = 1;
  int max_resamples = 100;
  /// Directory for cached feature matrices; empty disables caching.
  std::string cache_dir;

  /// Desk or paper defaults for a mark model. Throws ConfigError for other names.
  static ExperimentConfig preset_for(std::string_view preset, MarkModel mark);

  ResponseFunction response() const;
  FilterBankParams bank_params() const;
  /// Throws ConfigError when any field is out of range.
  void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& cfg);
/// Overlays the keys present in j onto base. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base);

/// Poisson patterns marked by the configured model. Pattern k depends only
/// on (seed, split, k), so smaller datasets are prefixes of larger ones.
/// Patterns that collide on the raster or hold fewer than two points are
/// redrawn; NumericalError after max_resamples failures.
std::vector<MarkedPattern> generate_dataset(const ExperimentConfig& cfg, Split split);
std::size_t split_size(const ExperimentConfig& cfg, Split split);

struct SplitFeatures {
  /// Joint first and second order moments of the unmarked raster.
  Eigen::MatrixXd unmarked;
  /// First-order moments of the marked raster.
  Eigen::MatrixXd marked;
};

SplitFeatures extract_features(const ExperimentConfig& cfg, Split split,
                               std::span<const MarkedPattern> patterns, const FilterBank& bank,
                               std::ostream* log = nullptr);

struct TrainedRegression {
  RidgeModel model;
  CrossValidation cv;
};

TrainedRegression train_regression(const ExperimentConfig& cfg, const SplitFeatures& train,
                                   const FilterBank& bank);

struct Metrics {
  double rmse = 0.0;
  std::optional<double> nrmse1;
  std::optional<double> nrmse2;
};

/// Throws DomainError on empty or unequal inputs.
Metrics compute_metrics(std::span<const double> truth, std::span<const double> predicted);

struct MethodResult {
  std::string method;
  Metrics metrics;
  std::vector<std::size_t> pattern;
  std::vector<std::size_t> index;
  std::vector<double> truth;
  std::vector<double> predicted;
};

struct PatternOutcome {
  std::size_t pattern = 0;
  double objective = 0.0;
  int iterations = 0;
  std::string stop_reason;
  std::vector<double> truth;
  std::vector<double> marks;
};

struct ReconstructionRun {
  std::string method;
  int cap = 0;
  /// Empty when the cap came from the config.
  CapTuning tuning;
  std::vector<PatternOutcome> outcomes;

  MethodResult pooled() const;
};

/// Reconstructs every test pattern from `targets` (one row per pattern).
/// With cfg.tune_caps the cap is chosen on the validation patterns and
/// their targets; otherwise `preset_cap` is used.
ReconstructionRun reconstruct_split(const ExperimentConfig& cfg, const FilterBank& bank,
                                    std::string method, int preset_cap, double init_value,
                                    std::span<const MarkedPattern> test, const Eigen::MatrixXd& test_targets,
                                    std::span<const MarkedPattern> validation,
                                    const Eigen::MatrixXd& validation_targets);

/// Diagnostic from exact first-order moments; takes no regression model.
ReconstructionRun reconstruct_exact(const ExperimentConfig& cfg, const FilterBank& bank, double init_value,
                                    std::span<const MarkedPattern> test, const SplitFeatures& test_features,
                                    std::span<const MarkedPattern> validation,
                                    const SplitFeatures& validation_features);

ReconstructionRun reconstruct_estimated(const ExperimentConfig& cfg, const FilterBank& bank,
                                        const RidgeModel& model, double init_value,
                                        std::span<const MarkedPattern> test, const SplitFeatures& test_features,
                                        std::span<const MarkedPattern> validation,
                                        const SplitFeatures& validation_features);

struct BaselineRun {
  std::optional<MethodResult> result;
  std::optional<BaselineModel> model;
  /// Set when the baseline does not apply to the mark model.
  std::string notice;
};

BaselineRun run_baseline(const ExperimentConfig& cfg, std::span<const MarkedPattern> train,
                         std::span<const MarkedPattern> test);

/// Mean over samples of |predicted_p - exact_p| / exact_p for each output p.
std::vector<double> regression_relative_errors(const RidgeModel& model, const SplitFeatures& features);

double mean_mark(std::span<const MarkedPattern> patterns);

struct EvaluationReport {
  ExperimentConfig config;
  std::vector<MethodResult> methods;
  std::string baseline_notice;
  std::vector<ReconstructionRun> runs;
  std::vector<std::string> output_labels;
  Eigen::VectorXd lambdas;
  std::vector<double> regression_error_train;
  std::vector<double> regression_error_test;
  double init_value = 0.0;

  const MethodResult* method(std::string_view name) const;
};

EvaluationReport run_pipeline(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// metrics.json, qq.csv, profiles.csv, regression_errors.csv, one
/// reconstruction NDJSON report per run, and cap_tuning.csv when any cap was
/// tuned. Creates dir if needed.
void export_outputs(const EvaluationReport& report, const std::filesystem::path& dir);

void write_cap_tuning(std::ostream& os, std::span<const ReconstructionRun> runs);
void write_reconstruction_report(std::ostream& os, const ReconstructionRun& run);
ReconstructionRun read_reconstruction_report(std::istream& is, std::string method);
nlohmann::json metrics_to_json(const Metrics& m);

}  // namespace geomark
