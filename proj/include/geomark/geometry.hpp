#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace geomark {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Vec2 a) { return dot(a, a); }

/// Square observation window [0, side)^2 with opposite edges identified.
class TorusWindow {
 public:
  explicit TorusWindow(double side = 1.0);

  double side() const noexcept { return side_; }
  double area() const noexcept { return side_ * side_; }
  bool contains(Vec2 p) const noexcept;
  /// Canonical representative in [0, side)^2.
  Vec2 wrap(Vec2 p) const noexcept;
  /// Shortest periodic representative of a displacement.
  Vec2 min_image(Vec2 d) const noexcept;

  friend bool operator==(const TorusWindow&, const TorusWindow&) = default;

 private:
  double side_;
};

/// Finite simple point set on a torus window. Point order is the
/// construction order and is what marks align against.
class PointPattern {
 public:
  PointPattern() = default;
  /// Throws DomainError when a point lies outside the window or two points coincide.
  PointPattern(TorusWindow window, std::vector<Vec2> points);

  const TorusWindow& window() const noexcept { return window_; }
  std::span<const Vec2> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  Vec2 operator[](std::size_t i) const { return points_[i]; }

 private:
  TorusWindow window_;
  std::vector<Vec2> points_;
};

class MarkedPattern {
 public:
  MarkedPattern() = default;
  /// Throws DomainError on length mismatch or non-finite marks.
  MarkedPattern(PointPattern pattern, std::vector<double> marks);

  const PointPattern& pattern() const noexcept { return pattern_; }
  std::span<const double> marks() const& noexcept { return marks_; }
  std::span<const double> marks() const&& = delete;
  std::size_t size() const noexcept { return marks_.size(); }

 private:
  PointPattern pattern_;
  std::vector<double> marks_;
};

/// Toroidal distance. Throws DomainError when a or b lies outside the window.
double torus_distance(Vec2 a, Vec2 b, const TorusWindow& w);

/// Homogeneous Poisson pattern: Poisson(intensity * area) points, i.i.d.
/// uniform, in generation order. Throws DomainError for intensity <= 0.
PointPattern sample_poisson(double intensity, const TorusWindow& w, std::uint64_t seed);

/// Shifts every point by v modulo the torus, keeping order.
PointPattern translate(const PointPattern& p, Vec2 v);

}  // namespace geomark
