#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "geomark/geometry.hpp"

namespace geomark {

/// Distance response of a shot-noise functional.
///
/// Truncated form: l(r) = max(scale * r, floor)^(-exponent).
/// Power-law form:  l(r) = r^(-exponent), undefined at r = 0.
struct ResponseFunction {
  enum class Kind { power_law, truncated_power_law };

  Kind kind = Kind::truncated_power_law;
  double exponent = 3.0;
  double scale = 10.0;
  double floor = 0.6;

  static ResponseFunction truncated(double scale, double floor, double exponent);
  static ResponseFunction power_law(double exponent);

  /// Throws DomainError unless exponent > 2 and, for the truncated form, scale, floor > 0.
  void validate() const;
};

/// Throws DomainError for r < 0, and for r == 0 under the pure power law.
double response_eval(const ResponseFunction& resp, double r);

/// One torus Voronoi cell, vertices counter-clockwise in the generator's
/// local chart (unwrapped coordinates around the generator).
struct VoronoiCell {
  std::size_t generator = 0;
  Vec2 center;
  std::vector<Vec2> vertices;

  double area() const;
  /// Second moment of the cell about its generator.
  double inertia() const;
};

struct VoronoiTessellation {
  std::vector<VoronoiCell> cells;
};

VoronoiTessellation voronoi_tessellation(const PointPattern& p);

MarkedPattern shot_noise_marks(const PointPattern& p, const ResponseFunction& resp);
MarkedPattern nearest_neighbor_marks(const PointPattern& p);
MarkedPattern voronoi_area_marks(const PointPattern& p);
MarkedPattern voronoi_inertia_marks(const PointPattern& p);
MarkedPattern voronoi_shot_noise_marks(const PointPattern& p, const ResponseFunction& resp);

enum class MarkModel { shot_noise, nearest_neighbor, voronoi_area, voronoi_inertia, voronoi_shot_noise };

std::string_view to_string(MarkModel m);
/// Accepts the config names (`shot_noise`, `nearest_neighbor`, ...). Throws ConfigError.
MarkModel parse_mark_model(std::string_view name);

MarkedPattern compute_marks(MarkModel model, const PointPattern& p, const ResponseFunction& resp);

}  // namespace geomark
