#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geomark/geometry.hpp"
#include "geomark/raster.hpp"
#include "geomark/scattering.hpp"

namespace geomark {

struct ReconstructionConfig {
  int max_iterations = 30;
  /// Modulus smoothing used only in gradient denominators.
  double eps = 1e-12;
  double lower_bound = 0.0;
  double upper_bound = std::numeric_limits<double>::infinity();
  /// Constant starting mark, normally the mean training mark.
  double init_value = 1.0;
  int memory = 10;
  double gradient_tolerance = 1e-12;

  /// Throws ConfigError when max_iterations < 1, eps <= 0 or bounds are inverted.
  void validate() const;
};

struct ObjectiveValue {
  double value = 0.0;
  std::vector<double> gradient;
};

/// sum_p (S_p(marks) - target_p)^2 over first-order moments at the given
/// pixel support, with its gradient in the marks.
class ReconstructionObjective {
 public:
  ReconstructionObjective(const FilterBank& bank, std::vector<Pixel> pixels,
                          std::vector<double> target, double eps);

  double operator()(std::span<const double> marks, std::span<double> grad);
  std::size_t dimension() const noexcept { return evaluator_.point_count(); }

 private:
  FirstOrderEvaluator evaluator_;
  std::vector<double> target_;
  double eps_;
};

/// Throws DomainError when target size differs from the bank's first-order size.
ObjectiveValue objective(std::span<const double> marks, std::span<const Pixel> pixels,
                         const FilterBank& bank, std::span<const double> target, double eps);

struct ReconstructionResult {
  std::vector<double> marks;
  double objective = 0.0;
  int iterations = 0;
  std::string stop_reason;
  std::vector<double> trace;
  /// Iterate after each requested cap (the final iterate when the optimizer
  /// stopped earlier), aligned with the caps passed in.
  std::vector<std::vector<double>> snapshots;
};

/// Bounded quasi-Newton reconstruction from cfg.init_value (or `start` when
/// given). Returns the last iterate. Throws CollisionError when the pattern
/// does not rasterize cleanly and NumericalError on non-finite objectives.
ReconstructionResult reconstruct_marks(const PointPattern& p, std::span<const double> target,
                                       const FilterBank& bank, const ReconstructionConfig& cfg,
                                       std::span<const int> snapshot_caps = {},
                                       std::optional<std::vector<double>> start = std::nullopt);

struct ValidationCase {
  PointPattern pattern;
  std::vector<double> true_marks;
  std::vector<double> target;
};

struct CapTuning {
  int best_cap = 0;
  std::vector<int> caps;
  /// Pooled mark RMSE over the validation set at each cap.
  std::vector<double> rmse;
};

/// Chooses the cap with the smallest pooled RMSE (the smallest such cap on
/// ties). One run per case at the largest cap. Throws ConfigError on empty inputs.
CapTuning tune_iteration_cap(std::span<const ValidationCase> validation, const FilterBank& bank,
                             const ReconstructionConfig& cfg, std::vector<int> caps);

}  // namespace geomark
