#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "geomark/geometry.hpp"

namespace geomark {

/// Per-column z-score parameters fitted on the training design matrix.
struct Standardization {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;

  static Standardization fit(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

/// Multi-output linear ridge model. Row p of `coefficients` acts on
/// standardized features; intercepts are not penalized.
struct RidgeModel {
  std::vector<std::string> feature_labels;
  std::vector<std::string> output_labels;
  Eigen::MatrixXd coefficients;  // P x D
  Eigen::VectorXd intercepts;    // P
  Eigen::VectorXd lambdas;       // P
  Standardization standardization;
  /// Outputs solved through the pseudoinverse because lambda = 0 met a
  /// singular Gram matrix.
  std::vector<std::size_t> ill_conditioned;

  std::size_t input_dim() const { return static_cast<std::size_t>(coefficients.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(coefficients.rows()); }
};

/// Closed-form ridge per output. Throws DomainError on shape mismatch,
/// non-finite data or negative lambdas.
RidgeModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                     const Eigen::VectorXd& lambdas);

/// Throws DomainError on dimension mismatch.
Eigen::VectorXd predict(const RidgeModel& model, const Eigen::VectorXd& x);
Eigen::MatrixXd predict(const RidgeModel& model, const Eigen::MatrixXd& X);

/// Fold of each sample: a seeded shuffle dealt round-robin into `folds` groups.
std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed);

struct CrossValidation {
  Eigen::VectorXd lambdas;        // chosen value per output
  std::vector<double> grid;
  Eigen::MatrixXd validation_mse;  // P x grid, pooled over folds
  Eigen::MatrixXd validation_se;   // P x grid, standard error of the per-fold MSE
};

/// k-fold selection of lambda per output from `grid`, one shared partition.
/// Picks the largest lambda within one standard error of the minimum MSE.
/// Throws ConfigError when folds < 2, the grid is empty, or n < folds.
CrossValidation cross_validate_lambdas(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                       int folds, const std::vector<double>& grid,
                                       std::uint64_t seed);

/// 13 values log-spaced over [1e-6, 1e6].
std::vector<double> default_lambda_grid();

// ---------------------------------------------------------------------------
// Local distance-matrix baseline

/// Off-diagonal entries (row-major) of the K x K torus distance matrix of the
/// center and its K-1 nearest neighbours, ordered by distance to the center.
std::vector<double> local_distance_features(const PointPattern& p, std::size_t center, int k);

struct BaselineModel {
  int k_neighbors = 0;
  RidgeModel ridge;

  std::vector<double> predict_marks(const PointPattern& p) const;
};

struct BaselineOptions {
  int k = 15;
  int folds = 5;
  std::vector<double> grid = default_lambda_grid();
  std::uint64_t seed = 0;
  /// Cap on training samples; points are taken in pattern order.
  std::size_t max_samples = 20000;
  std::size_t min_samples = 10;
};

/// Throws DomainError when fewer than min_samples points have K-neighbourhoods.
BaselineModel fit_baseline(std::span<const MarkedPattern> training, const BaselineOptions& opt);

}  // namespace geomark

namespace geomark {

/// Coefficients and intercepts mapped back to raw (unstandardized) features.
Eigen::MatrixXd raw_coefficients(const RidgeModel& model);
Eigen::VectorXd raw_intercepts(const RidgeModel& model);

}  // namespace geomark
