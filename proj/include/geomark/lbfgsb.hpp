#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace geomark {

/// Objective callback: returns f(x) and writes grad f(x) into `grad`.
using SmoothObjective = std::function<double(std::span<const double> x, std::span<double> grad)>;
/// Called after every accepted step with the 1-based iteration count.
using IterationObserver = std::function<void(int iteration, std::span<const double> x, double f)>;

struct BoundedLbfgsOptions {
  int max_iterations = 100;
  int memory = 10;
  /// Stop when the projected gradient's infinity norm drops below this.
  double gradient_tolerance = 1e-12;
  int max_line_search_evaluations = 40;
  double armijo = 1e-4;
  double curvature = 0.9;
};

struct BoundedLbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  /// "iteration_cap", "gradient_tolerance" or "line_search".
  std::string stop_reason;
  /// Objective at the start and after each accepted step.
  std::vector<double> trace;
};

/// Box-constrained limited-memory BFGS.
///
/// Each iteration fixes the variables sitting on a bound whose gradient
/// points outward, builds the two-loop L-BFGS direction on the free ones,
/// and runs a strong-Wolfe line search along the projected path
/// x + a d (a limited to the feasible segment). Accepted steps always
/// satisfy sufficient decrease, so the trace is nonincreasing.
///
/// Throws NumericalError when the objective returns a non-finite value and
/// ConfigError for max_iterations < 1 or mismatched bounds.
BoundedLbfgsResult minimize_bounded(const SmoothObjective& fun, std::vector<double> x0,
                                    std::span<const double> lower, std::span<const double> upper,
                                    const BoundedLbfgsOptions& opt,
                                    const IterationObserver& observer = {});

}  // namespace geomark
