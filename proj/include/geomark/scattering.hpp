#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "geomark/fft.hpp"
#include "geomark/raster.hpp"

namespace geomark {

struct FilterBankParams {
  int n = 128;
  int j_min = 0;
  int j_max = 7;
  int n_angles = 8;
  /// Modulus of the mother wavelet's spatial frequency, radians per pixel at unit scale.
  double omega = 5.5;
  /// Gaussian width of the mother wavelet in pixels at unit scale.
  double sigma = 1.0;
};

/// Zero-mean Morlet filters psi_(j,theta) on the periodic n x n grid,
/// j in [j_min, j_max], theta = k pi / n_angles.
///
/// Each filter samples (exp(i w_theta.x) - kappa) exp(-|x|^2 / (2 sigma_j^2))
/// with sigma_j = sigma 2^j and |w_theta| = omega 2^-j, periodized over the
/// torus; kappa zeroes the DC term. Filters have unit l1 norm on the unit
/// torus, i.e. the mean of |psi| over the grid is 1.
class FilterBank {
 public:
  /// Throws ConfigError on inconsistent parameters.
  explicit FilterBank(FilterBankParams params = {});

  const FilterBankParams& params() const noexcept { return params_; }
  int n() const noexcept { return params_.n; }
  int n_scales() const noexcept { return params_.j_max - params_.j_min + 1; }
  int n_angles() const noexcept { return params_.n_angles; }
  std::size_t filter_count() const noexcept { return spatial_.size(); }
  std::size_t filter_index(int j, int angle) const;
  double angle(int k) const;

  const ComplexField& spatial(int j, int angle) const { return spatial_[filter_index(j, angle)]; }
  const ComplexField& frequency(int j, int angle) const { return frequency_[filter_index(j, angle)]; }
  const ComplexField& frequency(std::size_t f) const { return frequency_[f]; }
  const Fft2d& fft() const noexcept { return fft_; }

  std::size_t first_order_size() const;
  std::size_t second_order_size() const;

  /// Filters contributing to first-order output p, each with weight
  /// 1 / n_angles for the angle-collapsed minimal scale and 1 otherwise.
  struct Term {
    std::size_t filter;
    double weight;
  };
  const std::vector<std::vector<Term>>& first_order_terms() const noexcept { return terms_; }

  std::vector<std::string> first_order_labels() const;
  std::vector<std::string> second_order_labels() const;

 private:
  FilterBankParams params_;
  Fft2d fft_;
  std::vector<ComplexField> spatial_;
  std::vector<ComplexField> frequency_;
  std::vector<std::vector<Term>> terms_;
};

struct ScatteringVector {
  std::vector<double> first_order;
  std::vector<double> second_order;

  /// first_order followed by second_order.
  std::vector<double> joined() const;
};

/// Circular convolution of img with psi_(j,angle).
ComplexField wavelet_transform(const RasterImage& img, const FilterBank& bank, int j, int angle);

std::vector<double> first_order_moments(const RasterImage& img, const FilterBank& bank);
std::vector<double> second_order_moments(const RasterImage& img, const FilterBank& bank);
/// order 1: first-order only; order 2: first and second order.
ScatteringVector scattering_features(const RasterImage& img, const FilterBank& bank, int order);
/// Labels aligned with ScatteringVector::joined() for the given order.
std::vector<std::string> feature_labels(const FilterBank& bank, int order);

/// First-order moments as a function of the marks at a fixed pixel support,
/// with the derivatives needed by reconstruction.
///
/// The forward value uses the exact modulus; derivatives replace |z| in the
/// denominator by sqrt(|z|^2 + eps).
class FirstOrderEvaluator {
 public:
  FirstOrderEvaluator(const FilterBank& bank, std::vector<Pixel> pixels);

  std::size_t point_count() const noexcept { return pixels_.size(); }
  const std::vector<Pixel>& pixels() const noexcept { return pixels_; }

  /// Evaluates the wavelet fields for these marks and returns the moments.
  const std::vector<double>& forward(std::span<const double> marks);
  /// d/du of sum_p weights[p] * S_p at the last forward() point.
  std::vector<double> pullback(std::span<const double> output_weights, double eps);
  /// Full Jacobian dS_p / du_i (first_order_size x point_count).
  Eigen::MatrixXd jacobian(std::span<const double> marks, double eps);

 private:
  const FilterBank* bank_;
  std::vector<Pixel> pixels_;
  ComplexField image_;
  ComplexField image_hat_;
  ComplexField scratch_;
  ComplexField accum_;
  std::vector<ComplexField> fields_;
  std::vector<double> moments_;
};

/// Jacobian of the first-order moments with respect to the marks at the
/// given pixels. Throws ConfigError for eps <= 0.
Eigen::MatrixXd first_order_gradient(std::span<const double> marks, std::span<const Pixel> pixels,
                                     const FilterBank& bank, double eps);

}  // namespace geomark
