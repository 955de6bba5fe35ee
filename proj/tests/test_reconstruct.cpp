#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "geomark/errors.hpp"
#include "geomark/marks.hpp"
#include "geomark/raster.hpp"
#include "geomark/reconstruct.hpp"
#include "geomark/scattering.hpp"
#include "support.hpp"

using namespace geomark;

namespace {

const FilterBank& bank() {
  static const FilterBank b;
  return b;
}

// Pattern of n points that occupy distinct pixels on the default grid.
PointPattern clean_pattern(std::size_t n, std::uint32_t seed) {
  for (std::uint32_t s = seed;; s += 1000) {
    PointPattern p = oracle::uniform_pattern(n, s);
    if (is_collision_free(p, bank().n())) return p;
  }
}

std::vector<double> moments(const PointPattern& p, std::span<const double> marks) {
  return first_order_moments(rasterize(marks, pixel_indices(p, bank().n()), bank().n()), bank());
}

std::vector<double> shot_noise(const PointPattern& p) {
  const MarkedPattern mp = shot_noise_marks(p, ResponseFunction{});
  return {mp.marks().begin(), mp.marks().end()};
}

}  // namespace

TEST_CASE("objective at the truth and at zero") {
  const PointPattern p = clean_pattern(12, 1);
  const std::vector<double> u = shot_noise(p);
  const std::vector<double> t = moments(p, u);
  const auto pixels = pixel_indices(p, bank().n());
  const ObjectiveValue at_truth = objective(u, pixels, bank(), t, 1e-12);
  CHECK(at_truth.value <= 1e-18);
  double gnorm = 0.0;
  for (double g : at_truth.gradient) gnorm += g * g;
  CHECK(std::sqrt(gnorm) <= 1e-9);

  const std::vector<double> zero(p.size(), 0.0);
  double tt = 0.0;
  for (double v : t) tt += v * v;
  CHECK(objective(zero, pixels, bank(), t, 1e-12).value == doctest::Approx(tt).epsilon(1e-9));

  CHECK_THROWS_AS(objective(u, pixels, bank(), std::vector<double>(56, 0.0), 1e-12), DomainError);
}

TEST_CASE("objective gradient matches central differences") {
  const PointPattern p = clean_pattern(8, 2);
  const auto pixels = pixel_indices(p, bank().n());
  std::vector<double> target = moments(p, shot_noise(p));
  for (double& v : target) v *= 1.3;
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::vector<double> x(p.size());
  for (double& v : x) v = u(gen);
  const ObjectiveValue at = objective(x, pixels, bank(), target, 1e-12);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
    std::vector<double> a = x, b = x;
    a[i] += h;
    b[i] -= h;
    const double fd = (objective(a, pixels, bank(), target, 1e-12).value -
                       objective(b, pixels, bank(), target, 1e-12).value) / (2.0 * h);
    CHECK(at.gradient[i] == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("reconstruction fixed point and homogeneity") {
  const PointPattern p = clean_pattern(15, 4);
  const std::vector<double> u = shot_noise(p);
  ReconstructionConfig cfg;
  cfg.max_iterations = 30;
  for (double c : {1.0, 3.5}) {
    std::vector<double> t = moments(p, u), cu = u;
    for (double& v : t) v *= c;
    for (double& v : cu) v *= c;
    const ReconstructionResult r = reconstruct_marks(p, t, bank(), cfg, {}, cu);
    CHECK(r.objective <= 1e-18 * c * c);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(std::abs(r.marks[i] - cu[i]) <= 1e-8);
  }
}

TEST_CASE("reconstruction contract: bounds, descent, one step, errors, determinism") {
  const PointPattern p = clean_pattern(10, 5);
  const std::vector<double> t = moments(p, shot_noise(p));
  ReconstructionConfig cfg;
  cfg.max_iterations = 1;
  cfg.init_value = 0.5;
  const ReconstructionResult one = reconstruct_marks(p, t, bank(), cfg);
  CHECK(one.iterations == 1);
  CHECK(one.trace.size() == 2);

  cfg.max_iterations = 40;
  const std::vector<int> caps = {1, 5, 40};
  const ReconstructionResult r = reconstruct_marks(p, t, bank(), cfg, caps);
  for (double m : r.marks) CHECK(m >= 0.0);
  for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k] <= r.trace[k - 1]);
  REQUIRE(r.snapshots.size() == 3);
  CHECK(r.snapshots[0] == one.marks);
  CHECK(r.snapshots[2] == r.marks);
  CHECK(reconstruct_marks(p, t, bank(), cfg).marks == r.marks);

  cfg.max_iterations = 0;
  CHECK_THROWS_AS(reconstruct_marks(p, t, bank(), cfg), ConfigError);
  cfg.max_iterations = 5;
  CHECK_THROWS_AS(reconstruct_marks(p, std::vector<double>(10, 1.0), bank(), cfg), DomainError);
  cfg.eps = 0.0;
  CHECK_THROWS_AS(reconstruct_marks(p, t, bank(), cfg), ConfigError);

  const PointPattern clash(TorusWindow(1.0), {{0.1001, 0.1001}, {0.1002, 0.1002}, {0.5, 0.5}});
  ReconstructionConfig ok;
  CHECK_THROWS_AS(reconstruct_marks(clash, t, bank(), ok), CollisionError);
}

TEST_CASE("recovery of shot-noise marks from exact moments on 10-point patterns") {
  ReconstructionConfig cfg;
  cfg.max_iterations = 500;
  int good = 0, total = 0;
  for (std::uint32_t s = 0; s < 6; ++s) {
    const PointPattern p = clean_pattern(10, 50 + s);
    const std::vector<double> u = shot_noise(p);
    double mean = 0.0;
    for (double v : u) mean += v / static_cast<double>(u.size());
    cfg.init_value = mean;
    const ReconstructionResult r = reconstruct_marks(p, moments(p, u), bank(), cfg);
    for (std::size_t i = 0; i < u.size(); ++i, ++total) good += std::abs(r.marks[i] - u[i]) <= 0.05 * u[i];
  }
  MESSAGE("recovered within 5%: " << good << " / " << total);
  CHECK(good >= 0.8 * total);
}

TEST_CASE("cap tuning") {
  std::vector<ValidationCase> cases;
  for (std::uint32_t s = 0; s < 3; ++s) {
    const PointPattern p = clean_pattern(10, 70 + s);
    const std::vector<double> u = shot_noise(p);
    std::vector<double> t = moments(p, u);
    for (double& v : t) v *= 1.05;
    cases.push_back({p, u, t});
  }
  ReconstructionConfig cfg;
  cfg.init_value = 1.0;
  const CapTuning single = tune_iteration_cap(cases, bank(), cfg, {7});
  CHECK(single.best_cap == 7);
  REQUIRE(single.rmse.size() == 1);

  const CapTuning many = tune_iteration_cap(cases, bank(), cfg, {20, 1, 5});
  CHECK(many.caps == std::vector<int>{1, 5, 20});
  const auto best = std::min_element(many.rmse.begin(), many.rmse.end());
  CHECK(many.best_cap == many.caps[static_cast<std::size_t>(best - many.rmse.begin())]);

  // The pooled RMSE at a cap equals the RMSE of an independent run at that cap.
  cfg.max_iterations = 5;
  double sq = 0.0;
  std::size_t count = 0;
  for (const ValidationCase& c : cases) {
    const auto r = reconstruct_marks(c.pattern, c.target, bank(), cfg);
    for (std::size_t i = 0; i < r.marks.size(); ++i, ++count) sq += std::pow(r.marks[i] - c.true_marks[i], 2);
  }
  CHECK(many.rmse[1] == doctest::Approx(std::sqrt(sq / static_cast<double>(count))).epsilon(1e-12));

  CHECK_THROWS_AS(tune_iteration_cap({}, bank(), cfg, {1}), ConfigError);
  CHECK_THROWS_AS(tune_iteration_cap(cases, bank(), cfg, {}), ConfigError);
}
