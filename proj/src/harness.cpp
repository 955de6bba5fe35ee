#include "geomark/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "geomark/errors.hpp"
#include "geomark/io.hpp"
#include "geomark/parallel.hpp"
#include "geomark/raster.hpp"
#include "geomark/rng.hpp"

namespace geomark {

using nlohmann::json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::validation: return "validation";
  }
  return "unknown";
}

namespace {

std::uint64_t split_stream(Split s) {
  switch (s) {
    case Split::train: return 1;
    case Split::test: return 2;
    case Split::validation: return 3;
  }
  return 0;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

}  // namespace

ExperimentConfig ExperimentConfig::preset_for(std::string_view preset, MarkModel mark) {
  ExperimentConfig c;
  c.mark = mark;
  switch (mark) {
    case MarkModel::shot_noise:
      c.intensity = 40.0, c.baseline_k = 15, c.cap_exact = 30, c.cap_estimated = 4;
      break;
    case MarkModel::nearest_neighbor:
      c.intensity = 40.0, c.baseline_k = 15, c.cap_exact = 250, c.cap_estimated = 8;
      break;
    case MarkModel::voronoi_area:
      c.intensity = 30.0, c.baseline_k = 35, c.cap_exact = 30, c.cap_estimated = 6;
      break;
    case MarkModel::voronoi_inertia:
      c.intensity = 30.0, c.baseline_k = 15, c.cap_exact = 150, c.cap_estimated = 8;
      break;
    case MarkModel::voronoi_shot_noise:
      c.intensity = 30.0, c.baseline_k = 15, c.cap_exact = 50, c.cap_estimated = 5;
      break;
  }
  if (preset == "desk") {
    c.preset = "desk";
  } else if (preset == "paper") {
    c.preset = "paper";
    c.n_train = 10000;
    c.n_test = 100;
    c.tune_caps = false;
    c.baseline_test_points = 100;
  } else {
    throw ConfigError("unknown preset '" + std::string(preset) + "' (expected desk or paper)");
  }
  return c;
}

ResponseFunction ExperimentConfig::response() const {
  try {
    return ResponseFunction::truncated(response_scale, response_floor, response_exponent);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

FilterBankParams ExperimentConfig::bank_params() const {
  FilterBankParams p = bank;
  p.n = raster_n;
  return p;
}

void ExperimentConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(intensity > 0.0 && std::isfinite(intensity), "intensity must be positive");
  require(side > 0.0 && std::isfinite(side), "window side must be positive");
  require(n_train >= 2, "n_train must be at least 2");
  require(n_test >= 1, "n_test must be at least 1");
  require(!tune_caps || n_validation >= 1, "cap tuning needs n_validation >= 1");
  require(folds >= 2, "folds must be at least 2");
  require(cv_fraction > 0.0 && cv_fraction <= 1.0, "cv_fraction must lie in (0, 1]");
  require(static_cast<double>(n_train) * cv_fraction >= folds, "too few training patterns for the CV folds");
  require(!lambda_grid.empty(), "lambda grid is empty");
  for (double l : lambda_grid) require(l >= 0.0 && std::isfinite(l), "lambda values must be finite and >= 0");
  require(cap_exact >= 1 && cap_estimated >= 1, "iteration caps must be >= 1");
  require(!tune_caps || !cap_candidates.empty(), "cap candidate list is empty");
  for (int c : cap_candidates) require(c >= 1, "cap candidates must be >= 1");
  require(eps > 0.0, "eps must be positive");
  require(memory >= 1, "memory must be >= 1");
  require(baseline_k >= 2, "baseline K must be >= 2");
  require(max_resamples >= 1, "max_resamples must be >= 1");
  check_grid_size(raster_n);
  response();
  FilterBankParams p = bank_params();
  require(p.j_min >= 0 && p.j_min <= p.j_max, "bank needs 0 <= j_min <= j_max");
  require((1 << p.j_max) <= p.n, "bank j_max exceeds log2 of the raster size");
  require(p.n_angles >= 1, "bank needs at least one angle");
  require(p.sigma > 0.0 && p.omega > 0.0, "bank sigma and omega must be positive");
}

json config_to_json(const ExperimentConfig& c) {
  return json{
      {"preset", c.preset},
      {"mark", std::string(to_string(c.mark))},
      {"response", {{"a", c.response_scale}, {"c", c.response_floor}, {"beta", c.response_exponent}}},
      {"intensity", c.intensity},
      {"side", c.side},
      {"n_train", c.n_train},
      {"n_test", c.n_test},
      {"n_validation", c.n_validation},
      {"raster_n", c.raster_n},
      {"bank",
       {{"j_min", c.bank.j_min}, {"j_max", c.bank.j_max}, {"n_angles", c.bank.n_angles},
        {"omega", c.bank.omega}, {"sigma", c.bank.sigma}}},
      {"lambda_grid", c.lambda_grid},
      {"folds", c.folds},
      {"cv_fraction", c.cv_fraction},
      {"cap_exact", c.cap_exact},
      {"cap_estimated", c.cap_estimated},
      {"tune_caps", c.tune_caps},
      {"cap_candidates", c.cap_candidates},
      {"eps", c.eps},
      {"memory", c.memory},
      {"baseline_k", c.baseline_k},
      {"baseline_train_points", c.baseline_train_points},
      {"baseline_test_points", c.baseline_test_points},
      {"seed", c.seed},
      {"max_resamples", c.max_resamples},
      {"cache_dir", c.cache_dir},
  };
}

namespace {

template <class T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  static const std::vector<std::string> known = {
      "preset", "mark", "response", "intensity", "side", "n_train", "n_test", "n_validation",
      "raster_n", "bank", "lambda_grid", "folds", "cv_fraction", "cap_exact", "cap_estimated",
      "tune_caps", "cap_candidates", "eps", "memory", "baseline_k", "baseline_train_points",
      "baseline_test_points", "seed", "max_resamples", "cache_dir"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  try {
    take(j, "preset", c.preset);
    if (j.contains("mark")) c.mark = parse_mark_model(j.at("mark").get<std::string>());
    if (j.contains("response")) {
      const json& r = j.at("response");
      take(r, "a", c.response_scale);
      take(r, "c", c.response_floor);
      take(r, "beta", c.response_exponent);
    }
    take(j, "intensity", c.intensity);
    take(j, "side", c.side);
    take(j, "n_train", c.n_train);
    take(j, "n_test", c.n_test);
    take(j, "n_validation", c.n_validation);
    take(j, "raster_n", c.raster_n);
    if (j.contains("bank")) {
      const json& b = j.at("bank");
      take(b, "j_min", c.bank.j_min);
      take(b, "j_max", c.bank.j_max);
      take(b, "n_angles", c.bank.n_angles);
      take(b, "omega", c.bank.omega);
      take(b, "sigma", c.bank.sigma);
    }
    take(j, "lambda_grid", c.lambda_grid);
    take(j, "folds", c.folds);
    take(j, "cv_fraction", c.cv_fraction);
    take(j, "cap_exact", c.cap_exact);
    take(j, "cap_estimated", c.cap_estimated);
    take(j, "tune_caps", c.tune_caps);
    take(j, "cap_candidates", c.cap_candidates);
    take(j, "eps", c.eps);
    take(j, "memory", c.memory);
    take(j, "baseline_k", c.baseline_k);
    take(j, "baseline_train_points", c.baseline_train_points);
    take(j, "baseline_test_points", c.baseline_test_points);
    take(j, "seed", c.seed);
    take(j, "max_resamples", c.max_resamples);
    take(j, "cache_dir", c.cache_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

std::size_t split_size(const ExperimentConfig& cfg, Split split) {
  switch (split) {
    case Split::train: return cfg.n_train;
    case Split::test: return cfg.n_test;
    case Split::validation: return cfg.tune_caps ? cfg.n_validation : 0;
  }
  return 0;
}

std::vector<MarkedPattern> generate_dataset(const ExperimentConfig& cfg, Split split) {
  cfg.validate();
  const std::size_t n = split_size(cfg, split);
  const Rng root = Rng(cfg.seed).split(split_stream(split));
  const TorusWindow window(cfg.side);
  const ResponseFunction resp = cfg.response();
  std::vector<MarkedPattern> out(n);
  parallel_for(n, [&](std::size_t k) {
    const Rng per_pattern = root.split(k);
    for (int attempt = 0; attempt < cfg.max_resamples; ++attempt) {
      PointPattern p = sample_poisson(cfg.intensity, window, per_pattern.split(attempt).seed());
      if (p.size() < 2 || !is_collision_free(p, cfg.raster_n)) continue;
      out[k] = compute_marks(cfg.mark, p, resp);
      return;
    }
    throw NumericalError(std::string(to_string(split)) + " pattern " + std::to_string(k) +
                         " still collides after " + std::to_string(cfg.max_resamples) + " draws");
  });
  return out;
}

namespace {

std::string pattern_key(const ExperimentConfig& cfg, Split split) {
  const FilterBankParams b = cfg.bank_params();
  std::ostringstream ss;
  ss << std::setprecision(17) << "v1|" << to_string(split) << '|' << cfg.seed << '|' << cfg.intensity << '|'
     << cfg.side << '|' << cfg.raster_n << '|' << cfg.max_resamples << '|' << b.j_min << '|' << b.j_max << '|'
     << b.n_angles << '|' << b.omega << '|' << b.sigma;
  return ss.str();
}

std::filesystem::path cache_path(const ExperimentConfig& cfg, Split split, const std::string& kind,
                                 const std::string& extra) {
  return std::filesystem::path(cfg.cache_dir) /
         (std::string(to_string(split)) + "-" + kind + "-" + hex(fnv1a(pattern_key(cfg, split) + extra)) + ".bin");
}

Eigen::MatrixXd compute_rows(std::size_t n, std::size_t dim, std::size_t first,
                             const std::function<std::vector<double>(std::size_t)>& row) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n - first), static_cast<Eigen::Index>(dim));
  parallel_for(n - first, [&](std::size_t r) {
    const std::vector<double> v = row(first + r);
    m.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(dim));
  });
  return m;
}

Eigen::MatrixXd cached_features(const ExperimentConfig& cfg, Split split, const std::string& kind,
                                const std::string& extra, std::size_t n, std::size_t dim,
                                const std::function<std::vector<double>(std::size_t)>& row) {
  std::optional<Eigen::MatrixXd> cached;
  std::filesystem::path path;
  if (!cfg.cache_dir.empty()) {
    path = cache_path(cfg, split, kind, extra);
    cached = read_matrix_binary(path);
    if (cached && cached->cols() != static_cast<Eigen::Index>(dim)) cached.reset();
  }
  const std::size_t have = cached ? static_cast<std::size_t>(cached->rows()) : 0;
  if (have >= n) return cached->topRows(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd full(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  if (have > 0) full.topRows(static_cast<Eigen::Index>(have)) = *cached;
  full.bottomRows(static_cast<Eigen::Index>(n - have)) = compute_rows(n, dim, have, row);
  if (!cfg.cache_dir.empty()) {
    std::filesystem::create_directories(cfg.cache_dir);
    write_matrix_binary(path, full);
  }
  return full;
}

}  // namespace

SplitFeatures extract_features(const ExperimentConfig& cfg, Split split, std::span<const MarkedPattern> patterns,
                               const FilterBank& bank, std::ostream* log) {
  if (log) *log << "features: " << to_string(split) << " (" << patterns.size() << " patterns)\n" << std::flush;
  const int n = bank.n();
  std::ostringstream mark_key;
  mark_key << std::setprecision(17) << '|' << to_string(cfg.mark) << '|' << cfg.response_scale << '|'
           << cfg.response_floor << '|' << cfg.response_exponent;
  SplitFeatures f;
  f.unmarked = cached_features(cfg, split, "unmarked", "", patterns.size(),
                               bank.first_order_size() + bank.second_order_size(), [&](std::size_t k) {
                                 return scattering_features(rasterize(patterns[k].pattern(), n), bank, 2).joined();
                               });
  f.marked = cached_features(cfg, split, "marked", mark_key.str(), patterns.size(), bank.first_order_size(),
                             [&](std::size_t k) { return first_order_moments(rasterize(patterns[k], n), bank); });
  return f;
}

TrainedRegression train_regression(const ExperimentConfig& cfg, const SplitFeatures& train,
                                   const FilterBank& bank) {
  const auto rows = static_cast<std::size_t>(train.unmarked.rows());
  const std::size_t n_cv =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(cfg.cv_fraction * static_cast<double>(rows))),
                              static_cast<std::size_t>(cfg.folds), rows);
  TrainedRegression out;
  out.cv = cross_validate_lambdas(train.unmarked.topRows(static_cast<Eigen::Index>(n_cv)),
                                  train.marked.topRows(static_cast<Eigen::Index>(n_cv)), cfg.folds, cfg.lambda_grid,
                                  splitmix64(cfg.seed ^ 0x5eed'cf00ULL));
  out.model = fit_ridge(train.unmarked, train.marked, out.cv.lambdas);
  out.model.feature_labels = feature_labels(bank, 2);
  out.model.output_labels = bank.first_order_labels();
  return out;
}

Metrics compute_metrics(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.empty() || truth.size() != predicted.size()) {
    throw DomainError("metrics need equal nonzero lengths");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sq += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
  Metrics m;
  m.rmse = std::sqrt(sq / static_cast<double>(truth.size()));
  const auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
  if (*hi > *lo) m.nrmse1 = m.rmse / (*hi - *lo);
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  if (mean != 0.0) m.nrmse2 = m.rmse / mean;
  return m;
}

MethodResult ReconstructionRun::pooled() const {
  MethodResult r;
  r.method = method;
  for (const PatternOutcome& o : outcomes) {
    for (std::size_t i = 0; i < o.marks.size(); ++i) {
      r.pattern.push_back(o.pattern);
      r.index.push_back(i);
      r.truth.push_back(o.truth[i]);
      r.predicted.push_back(o.marks[i]);
    }
  }
  r.metrics = compute_metrics(r.truth, r.predicted);
  return r;
}

namespace {

std::vector<double> row_of(const Eigen::MatrixXd& m, std::size_t r) {
  const Eigen::RowVectorXd row = m.row(static_cast<Eigen::Index>(r));
  return std::vector<double>(row.data(), row.data() + row.size());
}

std::string located(const std::string& method, std::size_t k, const char* what) {
  return method + " reconstruction, test pattern " + std::to_string(k) + ": " + what;
}

}  // namespace

ReconstructionRun reconstruct_split(const ExperimentConfig& cfg, const FilterBank& bank, std::string method,
                                    int preset_cap, double init_value, std::span<const MarkedPattern> test,
                                    const Eigen::MatrixXd& test_targets, std::span<const MarkedPattern> validation,
                                    const Eigen::MatrixXd& validation_targets) {
  if (test_targets.rows() != static_cast<Eigen::Index>(test.size())) {
    throw DomainError("target rows do not match the test patterns");
  }
  ReconstructionConfig rc;
  rc.max_iterations = preset_cap;
  rc.eps = cfg.eps;
  rc.init_value = init_value;
  rc.memory = cfg.memory;
  rc.validate();

  ReconstructionRun run;
  run.method = std::move(method);
  run.cap = preset_cap;
  if (cfg.tune_caps) {
    std::vector<ValidationCase> cases;
    for (std::size_t k = 0; k < validation.size(); ++k) {
      const auto m = validation[k].marks();
      cases.push_back({validation[k].pattern(), std::vector<double>(m.begin(), m.end()), row_of(validation_targets, k)});
    }
    run.tuning = tune_iteration_cap(cases, bank, rc, cfg.cap_candidates);
    run.cap = run.tuning.best_cap;
    rc.max_iterations = run.cap;
  }

  run.outcomes.resize(test.size());
  parallel_for(test.size(), [&](std::size_t k) {
    try {
      const std::vector<double> target = row_of(test_targets, k);
      ReconstructionResult res = reconstruct_marks(test[k].pattern(), target, bank, rc);
      const auto truth = test[k].marks();
      run.outcomes[k] = {k, res.objective, res.iterations, res.stop_reason,
                         std::vector<double>(truth.begin(), truth.end()), std::move(res.marks)};
    } catch (const NumericalError& e) {
      throw NumericalError(located(run.method, k, e.what()));
    } catch (const DomainError& e) {
      throw DomainError(located(run.method, k, e.what()));
    }
  });
  return run;
}

ReconstructionRun reconstruct_exact(const ExperimentConfig& cfg, const FilterBank& bank, double init_value,
                                    std::span<const MarkedPattern> test, const SplitFeatures& test_features,
                                    std::span<const MarkedPattern> validation,
                                    const SplitFeatures& validation_features) {
  return reconstruct_split(cfg, bank, "exact", cfg.cap_exact, init_value, test, test_features.marked, validation,
                           validation_features.marked);
}

ReconstructionRun reconstruct_estimated(const ExperimentConfig& cfg, const FilterBank& bank, const RidgeModel& model,
                                        double init_value, std::span<const MarkedPattern> test,
                                        const SplitFeatures& test_features, std::span<const MarkedPattern> validation,
                                        const SplitFeatures& validation_features) {
  const Eigen::MatrixXd test_targets = predict(model, test_features.unmarked);
  const Eigen::MatrixXd validation_targets =
      validation.empty() ? Eigen::MatrixXd(0, test_targets.cols()) : predict(model, validation_features.unmarked);
  return reconstruct_split(cfg, bank, "estimated", cfg.cap_estimated, init_value, test, test_targets, validation,
                           validation_targets);
}

BaselineRun run_baseline(const ExperimentConfig& cfg, std::span<const MarkedPattern> train,
                         std::span<const MarkedPattern> test) {
  BaselineRun out;
  if (cfg.mark == MarkModel::nearest_neighbor) {
    out.notice =
        "baseline skipped: the nearest-neighbour mark is itself the first distance feature, so the comparison is "
        "uninformative";
    return out;
  }
  BaselineOptions opt;
  opt.k = cfg.baseline_k;
  opt.folds = cfg.folds;
  opt.grid = cfg.lambda_grid;
  opt.seed = splitmix64(cfg.seed ^ 0xba5e'0000ULL);
  opt.max_samples = cfg.baseline_train_points;
  out.model = fit_baseline(train, opt);

  MethodResult r;
  r.method = "baseline";
  const std::size_t limit = cfg.baseline_test_points == 0 ? SIZE_MAX : cfg.baseline_test_points;
  std::size_t skipped = 0;
  for (std::size_t k = 0; k < test.size() && r.truth.size() < limit; ++k) {
    if (test[k].size() < static_cast<std::size_t>(cfg.baseline_k)) {
      ++skipped;
      continue;
    }
    const std::vector<double> pred = out.model->predict_marks(test[k].pattern());
    for (std::size_t i = 0; i < pred.size() && r.truth.size() < limit; ++i) {
      r.pattern.push_back(k);
      r.index.push_back(i);
      r.truth.push_back(test[k].marks()[i]);
      r.predicted.push_back(pred[i]);
    }
  }
  if (skipped > 0) {
    out.notice = std::to_string(skipped) + " test patterns with fewer than K = " + std::to_string(cfg.baseline_k) +
                 " points were not scored by the baseline";
  }
  if (r.truth.empty()) {
    out.notice = "baseline skipped: no test pattern has K = " + std::to_string(cfg.baseline_k) + " points";
    return out;
  }
  r.metrics = compute_metrics(r.truth, r.predicted);
  out.result = std::move(r);
  return out;
}

std::vector<double> regression_relative_errors(const RidgeModel& model, const SplitFeatures& features) {
  const Eigen::MatrixXd pred = predict(model, features.unmarked);
  std::vector<double> err(static_cast<std::size_t>(pred.cols()), 0.0);
  for (Eigen::Index p = 0; p < pred.cols(); ++p) {
    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index k = 0; k < pred.rows(); ++k) {
      const double exact = features.marked(k, p);
      if (exact == 0.0) continue;
      sum += std::abs(pred(k, p) - exact) / std::abs(exact);
      ++count;
    }
    err[static_cast<std::size_t>(p)] = count ? sum / static_cast<double>(count) : 0.0;
  }
  return err;
}

double mean_mark(std::span<const MarkedPattern> patterns) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const MarkedPattern& mp : patterns) {
    for (double m : mp.marks()) sum += m;
    count += mp.size();
  }
  if (count == 0) throw DomainError("no marks to average");
  return sum / static_cast<double>(count);
}

const MethodResult* EvaluationReport::method(std::string_view name) const {
  for (const MethodResult& m : methods) {
    if (m.method == name) return &m;
  }
  return nullptr;
}

EvaluationReport run_pipeline(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  const FilterBank bank(cfg.bank_params());
  const auto say = [&](const std::string& s) {
    if (log) *log << s << '\n' << std::flush;
  };

  say("generating datasets");
  const std::vector<MarkedPattern> train = generate_dataset(cfg, Split::train);
  const std::vector<MarkedPattern> test = generate_dataset(cfg, Split::test);
  const std::vector<MarkedPattern> validation = generate_dataset(cfg, Split::validation);

  const SplitFeatures f_train = extract_features(cfg, Split::train, train, bank, log);
  const SplitFeatures f_test = extract_features(cfg, Split::test, test, bank, log);
  const SplitFeatures f_val = extract_features(cfg, Split::validation, validation, bank, log);

  say("fitting ridge regression");
  const TrainedRegression reg = train_regression(cfg, f_train, bank);

  EvaluationReport report;
  report.config = cfg;
  report.output_labels = reg.model.output_labels;
  report.lambdas = reg.model.lambdas;
  report.init_value = mean_mark(train);
  report.regression_error_train = regression_relative_errors(reg.model, f_train);
  report.regression_error_test = regression_relative_errors(reg.model, f_test);

  say("reconstructing from estimated moments");
  report.runs.push_back(
      reconstruct_estimated(cfg, bank, reg.model, report.init_value, test, f_test, validation, f_val));
  say("reconstructing from exact moments");
  report.runs.push_back(reconstruct_exact(cfg, bank, report.init_value, test, f_test, validation, f_val));
  for (const ReconstructionRun& run : report.runs) report.methods.push_back(run.pooled());

  say("fitting baseline");
  BaselineRun base = run_baseline(cfg, train, test);
  report.baseline_notice = base.notice;
  if (base.result) report.methods.push_back(std::move(*base.result));
  if (!report.baseline_notice.empty()) say(report.baseline_notice);
  return report;
}

json metrics_to_json(const Metrics& m) {
  return json{{"rmse", m.rmse},
              {"nrmse1", m.nrmse1 ? json(*m.nrmse1) : json(nullptr)},
              {"nrmse2", m.nrmse2 ? json(*m.nrmse2) : json(nullptr)}};
}

void write_reconstruction_report(std::ostream& os, const ReconstructionRun& run) {
  for (const PatternOutcome& o : run.outcomes) {
    const json line{{"pattern", o.pattern},         {"method", run.method},  {"cap", run.cap},
                    {"objective", o.objective},     {"iterations", o.iterations},
                    {"stop_reason", o.stop_reason}, {"true", o.truth},      {"reconstructed", o.marks}};
    os << line.dump() << '\n';
  }
}

ReconstructionRun read_reconstruction_report(std::istream& is, std::string method) {
  ReconstructionRun run;
  run.method = std::move(method);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      run.cap = j.at("cap").get<int>();
      run.outcomes.push_back({j.at("pattern").get<std::size_t>(), j.at("objective").get<double>(),
                              j.at("iterations").get<int>(), j.at("stop_reason").get<std::string>(),
                              j.at("true").get<std::vector<double>>(),
                              j.at("reconstructed").get<std::vector<double>>()});
    } catch (const json::exception& e) {
      throw DomainError(std::string("malformed reconstruction report: ") + e.what());
    }
  }
  return run;
}

void write_cap_tuning(std::ostream& os, std::span<const ReconstructionRun> runs) {
  os << "method,cap,rmse\n" << std::setprecision(17);
  for (const ReconstructionRun& run : runs) {
    for (std::size_t i = 0; i < run.tuning.caps.size(); ++i) {
      os << run.method << ',' << run.tuning.caps[i] << ',' << run.tuning.rmse[i] << '\n';
    }
  }
}

void export_outputs(const EvaluationReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  json methods = json::object();
  for (const MethodResult& m : report.methods) {
    json entry = metrics_to_json(m.metrics);
    entry["points"] = m.truth.size();
    methods[m.method] = entry;
  }
  json caps = json::object();
  for (const ReconstructionRun& run : report.runs) caps[run.method] = run.cap;
  json metrics{{"config", config_to_json(report.config)},
               {"methods", methods},
               {"iteration_caps", caps},
               {"init_value", report.init_value},
               {"baseline_notice", report.baseline_notice}};
  open_output(dir / "metrics.json") << metrics.dump(2) << '\n';

  {
    std::ofstream qq = open_output(dir / "qq.csv");
    qq << "true,predicted,method\n" << std::setprecision(17);
    for (const MethodResult& m : report.methods) {
      for (std::size_t i = 0; i < m.truth.size(); ++i) qq << m.truth[i] << ',' << m.predicted[i] << ',' << m.method << '\n';
    }
  }
  {
    std::ofstream prof = open_output(dir / "profiles.csv");
    prof << "method,pattern,index,true,reconstructed\n" << std::setprecision(17);
    for (const MethodResult& m : report.methods) {
      for (std::size_t i = 0; i < m.truth.size(); ++i) {
        prof << m.method << ',' << m.pattern[i] << ',' << m.index[i] << ',' << m.truth[i] << ',' << m.predicted[i]
             << '\n';
      }
    }
  }
  {
    std::ofstream reg = open_output(dir / "regression_errors.csv");
    reg << "split,output,relative_error\n" << std::setprecision(17);
    const auto dump = [&](const char* split, const std::vector<double>& err) {
      for (std::size_t p = 0; p < err.size(); ++p) {
        reg << split << ",\"" << (p < report.output_labels.size() ? report.output_labels[p] : std::to_string(p))
            << "\"," << err[p] << '\n';
      }
    };
    dump("train", report.regression_error_train);
    dump("test", report.regression_error_test);
  }
  const bool tuned = std::any_of(report.runs.begin(), report.runs.end(),
                                 [](const ReconstructionRun& r) { return !r.tuning.caps.empty(); });
  if (tuned) {
    std::ofstream tune = open_output(dir / "cap_tuning.csv");
    write_cap_tuning(tune, report.runs);
  }
  for (const ReconstructionRun& run : report.runs) {
    std::ofstream os = open_output(dir / ("reconstruction_" + run.method + ".ndjson"));
    write_reconstruction_report(os, run);
  }
}

}  // namespace geomark
