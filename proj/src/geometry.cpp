#include "geomark/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geomark/errors.hpp"
#include "geomark/rng.hpp"

namespace geomark {

TorusWindow::TorusWindow(double side) : side_(side) {
  if (!(side > 0.0) || !std::isfinite(side)) {
    throw DomainError("torus window side must be positive and finite");
  }
}

bool TorusWindow::contains(Vec2 p) const noexcept {
  return p.x >= 0.0 && p.x < side_ && p.y >= 0.0 && p.y < side_;
}

namespace {

double reduce(double v, double side) {
  double r = v - side * std::floor(v / side);
  // floor() rounding can leave r == side for tiny negative v.
  if (r >= side || r < 0.0) r = 0.0;
  return r;
}

double reduce_centered(double d, double side) {
  d -= side * std::round(d / side);
  return d;
}

}  // namespace

Vec2 TorusWindow::wrap(Vec2 p) const noexcept { return {reduce(p.x, side_), reduce(p.y, side_)}; }

Vec2 TorusWindow::min_image(Vec2 d) const noexcept {
  return {reduce_centered(d.x, side_), reduce_centered(d.y, side_)};
}

PointPattern::PointPattern(TorusWindow window, std::vector<Vec2> points)
    : window_(window), points_(std::move(points)) {
  for (const Vec2& p : points_) {
    if (!window_.contains(p)) {
      throw DomainError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                        ") lies outside the window");
    }
  }
  std::vector<Vec2> sorted(points_);
  std::sort(sorted.begin(), sorted.end(),
            [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DomainError("point pattern is not simple: duplicate points");
  }
}

MarkedPattern::MarkedPattern(PointPattern pattern, std::vector<double> marks)
    : pattern_(std::move(pattern)), marks_(std::move(marks)) {
  if (marks_.size() != pattern_.size()) {
    throw DomainError("mark count " + std::to_string(marks_.size()) +
                      " does not match point count " + std::to_string(pattern_.size()));
  }
  for (double m : marks_) {
    if (!std::isfinite(m)) throw DomainError("marks must be finite");
  }
}

double torus_distance(Vec2 a, Vec2 b, const TorusWindow& w) {
  if (!w.contains(a) || !w.contains(b)) {
    throw DomainError("torus_distance: coordinates outside the window");
  }
  const Vec2 d = w.min_image(a - b);
  return std::hypot(d.x, d.y);
}

PointPattern sample_poisson(double intensity, const TorusWindow& w, std::uint64_t seed) {
  if (!(intensity > 0.0) || !std::isfinite(intensity)) {
    throw DomainError("Poisson intensity must be positive");
  }
  Rng rng(seed);
  const std::uint64_t count = rng.poisson(intensity * w.area());
  std::vector<Vec2> pts;
  pts.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const double x = rng.uniform() * w.side();
    const double y = rng.uniform() * w.side();
    pts.push_back(w.wrap({x, y}));
  }
  return PointPattern(w, std::move(pts));
}

PointPattern translate(const PointPattern& p, Vec2 v) {
  std::vector<Vec2> pts;
  pts.reserve(p.size());
  for (const Vec2& q : p.points()) pts.push_back(p.window().wrap(q + v));
  return PointPattern(p.window(), std::move(pts));
}

}  // namespace geomark
