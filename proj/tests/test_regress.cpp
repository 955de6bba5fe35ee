#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "geomark/errors.hpp"
#include "geomark/marks.hpp"
#include "geomark/regress.hpp"
#include "support.hpp"

using namespace geomark;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::uint32_t seed, double scale = 1.0) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(gen);
  }
  return m;
}

}  // namespace

TEST_CASE("noiseless linear data is recovered exactly at lambda 0") {
  // Heterogeneous column scales exercise the standardization round trip.
  Eigen::MatrixXd X = gaussian(60, 8, 1);
  for (Eigen::Index j = 0; j < X.cols(); ++j) X.col(j) *= std::pow(10.0, static_cast<double>(j) - 4.0);
  const Eigen::MatrixXd B = gaussian(3, 8, 2);
  const Eigen::Vector3d b(0.5, -2.0, 7.0);
  const Eigen::MatrixXd Y = (X * B.transpose()).rowwise() + b.transpose();
  const RidgeModel m = fit_ridge(X, Y, Eigen::VectorXd::Zero(3));
  CHECK(m.ill_conditioned.empty());
  CHECK((raw_coefficients(m) - B).cwiseAbs().maxCoeff() <= 1e-8 * B.cwiseAbs().maxCoeff() * 1e4);
  for (Eigen::Index p = 0; p < 3; ++p) {
    for (Eigen::Index j = 0; j < 8; ++j) {
      CHECK(raw_coefficients(m)(p, j) == doctest::Approx(B(p, j)).epsilon(1e-8));
    }
  }
  CHECK((raw_intercepts(m) - b).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((predict(m, X) - Y).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(m.coefficients.rows() == 3);
  CHECK(m.coefficients.cols() == 8);
}

TEST_CASE("closed form matches a gradient-descent ridge minimizer") {
  const Eigen::MatrixXd X = gaussian(40, 6, 3);
  const Eigen::MatrixXd Y = X * gaussian(6, 1, 4) + gaussian(40, 1, 5, 0.3);
  for (double lambda : {0.1, 3.0, 50.0}) {
    const RidgeModel m = fit_ridge(X, Y, Eigen::VectorXd::Constant(1, lambda));
    const Eigen::MatrixXd Z = m.standardization.apply(X);
    const auto [coef, intercept] = oracle::ridge_gradient_descent(Z, Y.col(0), lambda, 20000);
    for (Eigen::Index j = 0; j < 6; ++j) CHECK(std::abs(m.coefficients(0, j) - coef(j)) <= 1e-6);
    CHECK(std::abs(m.intercepts(0) - intercept) <= 1e-6);
  }
}

TEST_CASE("huge lambda shrinks to the output means") {
  const Eigen::MatrixXd X = gaussian(30, 4, 6);
  const Eigen::MatrixXd Y = gaussian(30, 2, 7) .array() + 3.0;
  const RidgeModel m = fit_ridge(X, Y, Eigen::VectorXd::Constant(2, 1e12));
  CHECK(m.coefficients.cwiseAbs().maxCoeff() <= 1e-9);
  const Eigen::MatrixXd pred = predict(m, X);
  for (Eigen::Index p = 0; p < 2; ++p) {
    const double mean = Y.col(p).mean();
    for (Eigen::Index k = 0; k < 30; ++k) CHECK(pred(k, p) == doctest::Approx(mean).epsilon(1e-6));
  }
}

TEST_CASE("output scaling equivariance") {
  const Eigen::MatrixXd X = gaussian(25, 5, 8);
  Eigen::MatrixXd Y = gaussian(25, 2, 9);
  const Eigen::Vector2d lambdas(0.7, 2.0);
  const RidgeModel a = fit_ridge(X, Y, lambdas);
  Y.col(1) *= -4.5;
  const RidgeModel b = fit_ridge(X, Y, lambdas);
  CHECK((b.coefficients.row(1) + 4.5 * a.coefficients.row(1)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(b.intercepts(1) + 4.5 * a.intercepts(1)) <= 1e-12);
  CHECK((b.coefficients.row(0) - a.coefficients.row(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("wide and singular designs") {
  // More features than samples: the dual form must agree with the primal oracle.
  const Eigen::MatrixXd X = gaussian(10, 30, 10);
  const Eigen::MatrixXd Y = gaussian(10, 1, 11);
  const RidgeModel m = fit_ridge(X, Y, Eigen::VectorXd::Constant(1, 2.0));
  const auto [coef, intercept] = oracle::ridge_gradient_descent(m.standardization.apply(X), Y.col(0), 2.0, 20000);
  CHECK((m.coefficients.row(0).transpose() - coef).cwiseAbs().maxCoeff() <= 1e-6);

  Eigen::MatrixXd dup(12, 3);
  dup.col(0) = gaussian(12, 1, 12);
  dup.col(1) = dup.col(0);
  dup.col(2) = gaussian(12, 1, 13);
  const RidgeModel s = fit_ridge(dup, dup.col(0) + dup.col(2), Eigen::VectorXd::Zero(1));
  CHECK(s.ill_conditioned.size() == 1);
  CHECK((predict(s, dup) - (dup.col(0) + dup.col(2))).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("ridge input validation and prediction") {
  const Eigen::MatrixXd X = gaussian(10, 3, 14);
  CHECK_THROWS_AS(fit_ridge(X, gaussian(9, 1, 1), Eigen::VectorXd::Zero(1)), DomainError);
  CHECK_THROWS_AS(fit_ridge(X, gaussian(10, 1, 1), Eigen::VectorXd::Constant(1, -1.0)), DomainError);
  CHECK_THROWS_AS(fit_ridge(X, gaussian(10, 2, 1), Eigen::VectorXd::Zero(1)), DomainError);
  Eigen::MatrixXd bad = X;
  bad(0, 0) = NAN;
  CHECK_THROWS_AS(fit_ridge(bad, gaussian(10, 1, 1), Eigen::VectorXd::Zero(1)), DomainError);

  RidgeModel zero = fit_ridge(X, gaussian(10, 2, 15), Eigen::VectorXd::Constant(2, 1.0));
  zero.coefficients.setZero();
  const Eigen::VectorXd out = predict(zero, Eigen::VectorXd(X.row(0).transpose()));
  CHECK(out(0) == zero.intercepts(0));
  CHECK(out(1) == zero.intercepts(1));
  CHECK_THROWS_AS(predict(zero, Eigen::VectorXd(Eigen::VectorXd::Zero(4))), DomainError);

  // Identity-like single-feature model.
  Eigen::MatrixXd x1(3, 1);
  x1 << 1.0, 2.0, 4.0;
  const RidgeModel ident = fit_ridge(x1, x1, Eigen::VectorXd::Zero(1));
  CHECK(predict(ident, Eigen::VectorXd(Eigen::VectorXd::Constant(1, 3.25)))(0) == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("fold assignment is a seeded balanced partition") {
  const auto a = fold_assignment(103, 5, 42), b = fold_assignment(103, 5, 42), c = fold_assignment(103, 5, 43);
  CHECK(a == b);
  CHECK(a != c);
  std::vector<int> counts(5, 0);
  for (int f : a) {
    REQUIRE(f >= 0);
    REQUIRE(f < 5);
    ++counts[f];
  }
  for (int k : counts) CHECK((k == 20 || k == 21));
}

TEST_CASE("cross-validation picks the right end of the grid and is deterministic") {
  const std::vector<double> grid = default_lambda_grid();
  REQUIRE(grid.size() == 13);
  CHECK(grid.front() == doctest::Approx(1e-6));
  CHECK(grid.back() == doctest::Approx(1e6));

  const Eigen::MatrixXd X = gaussian(80, 5, 16);
  const Eigen::MatrixXd Y = X * gaussian(5, 3, 17);
  const CrossValidation clean = cross_validate_lambdas(X, Y, 5, grid, 1);
  for (Eigen::Index p = 0; p < 3; ++p) CHECK(clean.lambdas(p) == grid.front());

  int largest = 0, total = 0;
  for (std::uint32_t s = 0; s < 10; ++s) {
    const Eigen::MatrixXd noise = gaussian(60, 10, 100 + s);
    const Eigen::MatrixXd Yn = gaussian(60, 4, 200 + s);
    const CrossValidation cv = cross_validate_lambdas(noise, Yn, 5, grid, s);
    for (Eigen::Index p = 0; p < 4; ++p, ++total) largest += cv.lambdas(p) == grid.back();
  }
  CHECK(largest >= 0.8 * total);

  const CrossValidation r1 = cross_validate_lambdas(X, Y + gaussian(80, 3, 18), 5, grid, 9);
  const CrossValidation r2 = cross_validate_lambdas(X, Y + gaussian(80, 3, 18), 5, grid, 9);
  CHECK(r1.lambdas == r2.lambdas);
  CHECK(r1.validation_mse == r2.validation_mse);

  CHECK_THROWS_AS(cross_validate_lambdas(X, Y, 1, grid, 0), ConfigError);
  CHECK_THROWS_AS(cross_validate_lambdas(X, Y, 5, {}, 0), ConfigError);
  CHECK_THROWS_AS(cross_validate_lambdas(X.topRows(3), Y.topRows(3), 5, grid, 0), ConfigError);
}

TEST_CASE("local distance features") {
  const TorusWindow w(1.0);
  const PointPattern two(w, {{0.1, 0.1}, {0.9, 0.1}});
  const auto f = local_distance_features(two, 0, 2);
  REQUIRE(f.size() == 2);
  CHECK(f[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(f[1] == f[0]);
  CHECK_THROWS_AS(local_distance_features(two, 0, 3), DomainError);

  for (std::uint32_t s = 0; s < 5; ++s) {
    const PointPattern p = oracle::uniform_pattern(30, 700 + s);
    const int K = 8;
    for (std::size_t c = 0; c < p.size(); c += 7) {
      const auto feat = local_distance_features(p, c, K);
      REQUIRE(feat.size() == static_cast<std::size_t>(K * (K - 1)));
      for (int m = 1; m < K - 1; ++m) CHECK(feat[m - 1] <= feat[m]);
      for (double v : feat) CHECK(v >= 0.0);
      // Entry (a, b) sits at a*(K-1) + (b < a ? b : b-1).
      auto at = [&](int a, int b) { return feat[a * (K - 1) + (b < a ? b : b - 1)]; };
      for (int a = 0; a < K; ++a) {
        for (int b = 0; b < K; ++b) {
          if (a != b) CHECK(at(a, b) == doctest::Approx(at(b, a)).epsilon(1e-15));
        }
      }
      const auto moved = local_distance_features(translate(p, {0.43, 0.91}), c, K);
      for (std::size_t k = 0; k < feat.size(); ++k) CHECK(moved[k] == doctest::Approx(feat[k]).epsilon(1e-12));
      // First row: sorted distances to the center, checked against brute force.
      std::vector<double> d;
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (j != c) d.push_back(oracle::copies_distance(p[c], p[j], 1.0));
      }
      std::sort(d.begin(), d.end());
      for (int m = 0; m < K - 1; ++m) CHECK(feat[m] == doctest::Approx(d[m]).epsilon(1e-13));
    }
  }
}

TEST_CASE("baseline: nearest-neighbour marks are a feature, constant marks are constant") {
  std::vector<MarkedPattern> nn, flat;
  for (std::uint32_t s = 0; s < 10; ++s) {
    const PointPattern p = oracle::uniform_pattern(20, 900 + s);
    nn.push_back(nearest_neighbor_marks(p));
    flat.push_back(MarkedPattern(p, std::vector<double>(p.size(), 2.5)));
  }
  for (int K : {2, 5}) {
    BaselineOptions opt;
    opt.k = K;
    const BaselineModel model = fit_baseline(nn, opt);
    CHECK(model.ridge.input_dim() == static_cast<std::size_t>(K * (K - 1)));
    double worst = 0.0;
    for (const MarkedPattern& mp : nn) {
      const auto pred = model.predict_marks(mp.pattern());
      for (std::size_t i = 0; i < pred.size(); ++i) worst = std::max(worst, std::abs(pred[i] - mp.marks()[i]));
    }
    CHECK(worst <= 1e-6);
  }
  BaselineOptions opt;
  opt.k = 4;
  const BaselineModel constant = fit_baseline(flat, opt);
  CHECK(constant.ridge.coefficients.cwiseAbs().maxCoeff() <= 1e-12);
  for (double v : constant.predict_marks(flat[0].pattern())) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));

  opt.min_samples = 1000;
  CHECK_THROWS_AS(fit_baseline(flat, opt), DomainError);
  BaselineOptions capped;
  capped.k = 3;
  capped.max_samples = 50;
  CHECK(fit_baseline(nn, capped).ridge.input_dim() == 6);
}
