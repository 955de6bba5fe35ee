#include "geomark/regress.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "geomark/errors.hpp"
#include "geomark/rng.hpp"

namespace geomark {

Standardization Standardization::fit(const Eigen::MatrixXd& X) {
  Standardization s;
  const double n = static_cast<double>(X.rows());
  s.means = X.colwise().mean().transpose();
  s.stds.resize(X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double var = (X.col(c).array() - s.means(c)).square().sum() / n;
    const double sd = std::sqrt(var);
    // Constant columns carry no information; leave them centered at zero.
    s.stds(c) = sd > 1e-300 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& X) const {
  return (X.rowwise() - means.transpose()).array().rowwise() / stds.transpose().array();
}

Eigen::VectorXd Standardization::apply(const Eigen::VectorXd& x) const {
  return ((x - means).array() / stds.array()).matrix();
}

namespace {

void check_design(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  if (X.rows() < 1) throw DomainError("ridge fit needs at least one sample");
  if (X.rows() != Y.rows()) throw DomainError("X and Y row counts differ");
  if (!X.allFinite() || !Y.allFinite()) throw DomainError("ridge data must be finite");
}

}  // namespace

RidgeModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                     const Eigen::VectorXd& lambdas) {
  check_design(X, Y);
  if (lambdas.size() != Y.cols()) throw DomainError("need one lambda per output");
  if ((lambdas.array() < 0.0).any()) throw DomainError("lambdas must be nonnegative");

  RidgeModel model;
  model.standardization = Standardization::fit(X);
  const Eigen::MatrixXd Z = model.standardization.apply(X);
  const Eigen::VectorXd y_mean = Y.colwise().mean().transpose();
  const Eigen::MatrixXd Yc = Y.rowwise() - y_mean.transpose();
  const Eigen::Index n = Z.rows();
  const Eigen::Index d = Z.cols();

  model.coefficients.setZero(Y.cols(), d);
  model.intercepts = y_mean;
  model.lambdas = lambdas;

  std::map<double, std::vector<Eigen::Index>> by_lambda;
  for (Eigen::Index p = 0; p < Y.cols(); ++p) by_lambda[lambdas(p)].push_back(p);

  for (const auto& [lambda, outputs] : by_lambda) {
    Eigen::MatrixXd rhs(n, static_cast<Eigen::Index>(outputs.size()));
    for (std::size_t k = 0; k < outputs.size(); ++k) rhs.col(k) = Yc.col(outputs[k]);

    Eigen::MatrixXd beta;
    if (lambda == 0.0) {
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Z);
      beta = cod.solve(rhs);
      if (cod.rank() < d) {
        std::cerr << "warning: ridge with lambda = 0 on a rank-deficient design (rank "
                  << cod.rank() << " < " << d << "); using the pseudoinverse\n";
        model.ill_conditioned.insert(model.ill_conditioned.end(), outputs.begin(), outputs.end());
      }
    } else if (d <= n) {
      Eigen::MatrixXd gram = Z.transpose() * Z;
      gram.diagonal().array() += lambda;
      beta = gram.llt().solve(Z.transpose() * rhs);
    } else {
      Eigen::MatrixXd kernel = Z * Z.transpose();
      kernel.diagonal().array() += lambda;
      beta = Z.transpose() * kernel.llt().solve(rhs);
    }
    if (!beta.allFinite()) throw NumericalError("ridge solve produced non-finite coefficients");
    for (std::size_t k = 0; k < outputs.size(); ++k) {
      model.coefficients.row(outputs[k]) = beta.col(k).transpose();
    }
  }
  return model;
}

Eigen::VectorXd predict(const RidgeModel& model, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != model.input_dim()) {
    throw DomainError("feature dimension " + std::to_string(x.size()) + " does not match model (" +
                      std::to_string(model.input_dim()) + ")");
  }
  return model.coefficients * model.standardization.apply(x) + model.intercepts;
}

Eigen::MatrixXd predict(const RidgeModel& model, const Eigen::MatrixXd& X) {
  if (static_cast<std::size_t>(X.cols()) != model.input_dim()) {
    throw DomainError("feature dimension does not match model");
  }
  Eigen::MatrixXd out = model.standardization.apply(X) * model.coefficients.transpose();
  out.rowwise() += model.intercepts.transpose();
  return out;
}

Eigen::MatrixXd raw_coefficients(const RidgeModel& model) {
  return model.coefficients.array().rowwise() / model.standardization.stds.transpose().array();
}

Eigen::VectorXd raw_intercepts(const RidgeModel& model) {
  return model.intercepts - raw_coefficients(model) * model.standardization.means;
}

std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<int> fold(n);
  for (std::size_t k = 0; k < n; ++k) fold[order[k]] = static_cast<int>(k % folds);
  return fold;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int e = -6; e <= 6; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

CrossValidation cross_validate_lambdas(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                       int folds, const std::vector<double>& grid_in,
                                       std::uint64_t seed) {
  check_design(X, Y);
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (grid_in.empty()) throw ConfigError("lambda grid is empty");
  if (X.rows() < folds) throw ConfigError("fewer samples than folds");
  std::vector<double> grid(grid_in);
  std::sort(grid.begin(), grid.end());
  if (grid.front() < 0.0) throw ConfigError("lambda grid must be nonnegative");

  const Eigen::Index n = X.rows();
  const Eigen::Index P = Y.cols();
  const Eigen::Index G = static_cast<Eigen::Index>(grid.size());
  const std::vector<int> fold = fold_assignment(static_cast<std::size_t>(n), folds, seed);
  Eigen::MatrixXd sse = Eigen::MatrixXd::Zero(P, G);
  Eigen::MatrixXd fold_mse_sum = Eigen::MatrixXd::Zero(P, G);
  Eigen::MatrixXd fold_mse_sq = Eigen::MatrixXd::Zero(P, G);

  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, va;
    for (Eigen::Index i = 0; i < n; ++i) (fold[i] == f ? va : tr).push_back(i);
    const Eigen::MatrixXd Xtr = X(tr, Eigen::all);
    const Eigen::MatrixXd Xva = X(va, Eigen::all);
    const Eigen::MatrixXd Ytr = Y(tr, Eigen::all);
    const Eigen::MatrixXd Yva = Y(va, Eigen::all);

    const Standardization st = Standardization::fit(Xtr);
    const Eigen::MatrixXd Ztr = st.apply(Xtr);
    const Eigen::MatrixXd Zva = st.apply(Xva);
    const Eigen::VectorXd ymean = Ytr.colwise().mean().transpose();
    const Eigen::MatrixXd Yc = Ytr.rowwise() - ymean.transpose();

    // Spectral form: prediction(lambda) = W diag(1 / (ev + lambda)) Q.
    Eigen::VectorXd ev;
    Eigen::MatrixXd W, Q;
    if (Ztr.cols() <= Ztr.rows()) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ztr.transpose() * Ztr);
      ev = es.eigenvalues();
      W = Zva * es.eigenvectors();
      Q = es.eigenvectors().transpose() * (Ztr.transpose() * Yc);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ztr * Ztr.transpose());
      ev = es.eigenvalues();
      W = Zva * (Ztr.transpose() * es.eigenvectors());
      Q = es.eigenvectors().transpose() * Yc;
    }
    const double ev_max = std::max(ev.maxCoeff(), 0.0);
    for (Eigen::Index g = 0; g < G; ++g) {
      Eigen::VectorXd inv(ev.size());
      for (Eigen::Index k = 0; k < ev.size(); ++k) {
        const double denom = ev(k) + grid[g];
        inv(k) = denom > 1e-12 * ev_max ? 1.0 / denom : 0.0;
      }
      Eigen::MatrixXd pred = W * inv.asDiagonal() * Q;
      pred.rowwise() += ymean.transpose();
      const Eigen::VectorXd fold_sse = (pred - Yva).array().square().colwise().sum().transpose().matrix();
      sse.col(g) += fold_sse;
      const Eigen::VectorXd fold_mse = fold_sse / static_cast<double>(va.size());
      fold_mse_sum.col(g) += fold_mse;
      fold_mse_sq.col(g) += fold_mse.cwiseProduct(fold_mse);
    }
  }

  CrossValidation cv;
  cv.grid = grid;
  cv.validation_mse = sse / static_cast<double>(n);
  const double k = static_cast<double>(folds);
  const Eigen::ArrayXXd mean = fold_mse_sum.array() / k;
  const Eigen::ArrayXXd var = ((fold_mse_sq.array() / k - mean.square()) * (k / (k - 1.0))).max(0.0);
  cv.validation_se = (var / k).sqrt().matrix();
  cv.lambdas.resize(P);
  for (Eigen::Index p = 0; p < P; ++p) {
    Eigen::Index best = 0;
    for (Eigen::Index g = 1; g < G; ++g) {
      if (cv.validation_mse(p, g) < cv.validation_mse(p, best)) best = g;
    }
    const double limit = cv.validation_mse(p, best) + cv.validation_se(p, best);
    Eigen::Index chosen = best;
    for (Eigen::Index g = G - 1; g > best; --g) {
      if (cv.validation_mse(p, g) <= limit) {
        chosen = g;
        break;
      }
    }
    cv.lambdas(p) = grid[chosen];
  }
  return cv;
}

// ---------------------------------------------------------------------------

std::vector<double> local_distance_features(const PointPattern& p, std::size_t center, int k) {
  if (k < 2) throw DomainError("baseline neighbourhood needs K >= 2");
  if (p.size() < static_cast<std::size_t>(k)) {
    throw DomainError("pattern has " + std::to_string(p.size()) + " points, fewer than K = " +
                      std::to_string(k));
  }
  if (center >= p.size()) throw DomainError("center index out of range");
  const TorusWindow& w = p.window();

  std::vector<std::pair<double, std::size_t>> by_distance;
  by_distance.reserve(p.size() - 1);
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j != center) by_distance.emplace_back(torus_distance(p[center], p[j], w), j);
  }
  std::partial_sort(by_distance.begin(), by_distance.begin() + (k - 1), by_distance.end());

  std::vector<std::size_t> hood{center};
  for (int m = 0; m < k - 1; ++m) hood.push_back(by_distance[m].second);

  std::vector<double> feat;
  feat.reserve(static_cast<std::size_t>(k) * (k - 1));
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      if (a == b) continue;
      feat.push_back(a == 0 ? by_distance[b - 1].first
                            : torus_distance(p[hood[a]], p[hood[b]], w));
    }
  }
  return feat;
}

std::vector<double> BaselineModel::predict_marks(const PointPattern& p) const {
  std::vector<double> out;
  out.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::vector<double> f = local_distance_features(p, i, k_neighbors);
    out.push_back(predict(ridge, Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(f.data(), f.size())))(0));
  }
  return out;
}

BaselineModel fit_baseline(std::span<const MarkedPattern> training, const BaselineOptions& opt) {
  if (opt.k < 2) throw ConfigError("baseline K must be >= 2");
  const std::size_t dim = static_cast<std::size_t>(opt.k) * (opt.k - 1);
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  for (const MarkedPattern& mp : training) {
    if (mp.size() < static_cast<std::size_t>(opt.k)) continue;
    for (std::size_t i = 0; i < mp.size() && rows.size() < opt.max_samples; ++i) {
      rows.push_back(local_distance_features(mp.pattern(), i, opt.k));
      targets.push_back(mp.marks()[i]);
    }
    if (rows.size() >= opt.max_samples) break;
  }
  if (rows.size() < std::max<std::size_t>(opt.min_samples, static_cast<std::size_t>(opt.folds))) {
    throw DomainError("baseline has only " + std::to_string(rows.size()) +
                      " training points with a full neighbourhood");
  }
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  Eigen::MatrixXd Y(static_cast<Eigen::Index>(rows.size()), 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    X.row(r) = Eigen::Map<const Eigen::RowVectorXd>(rows[r].data(), dim);
    Y(r, 0) = targets[r];
  }
  const CrossValidation cv = cross_validate_lambdas(X, Y, opt.folds, opt.grid, opt.seed);

  BaselineModel model;
  model.k_neighbors = opt.k;
  model.ridge = fit_ridge(X, Y, cv.lambdas);
  model.ridge.output_labels = {"mark"};
  for (int a = 0; a < opt.k; ++a) {
    for (int b = 0; b < opt.k; ++b) {
      if (a != b) model.ridge.feature_labels.push_back("d" + std::to_string(a) + "_" + std::to_string(b));
    }
  }
  return model;
}

}  // namespace geomark
