#include "geomark/marks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "geomark/errors.hpp"

namespace geomark {

ResponseFunction ResponseFunction::truncated(double scale, double floor, double exponent) {
  ResponseFunction r{Kind::truncated_power_law, exponent, scale, floor};
  r.validate();
  return r;
}

ResponseFunction ResponseFunction::power_law(double exponent) {
  ResponseFunction r{Kind::power_law, exponent, 1.0, 0.0};
  r.validate();
  return r;
}

void ResponseFunction::validate() const {
  if (!(exponent > 2.0)) throw DomainError("response exponent must exceed 2");
  if (kind == Kind::truncated_power_law && !(scale > 0.0 && floor > 0.0)) {
    throw DomainError("truncated response needs positive scale and floor");
  }
}

double response_eval(const ResponseFunction& resp, double r) {
  if (!(r >= 0.0)) throw DomainError("response evaluated at negative distance");
  if (resp.kind == ResponseFunction::Kind::power_law) {
    if (r == 0.0) throw DomainError("power-law response diverges at r = 0");
    return std::pow(r, -resp.exponent);
  }
  return std::pow(std::max(resp.scale * r, resp.floor), -resp.exponent);
}

// ---------------------------------------------------------------------------
// Voronoi cells

double VoronoiCell::area() const {
  double a = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t k = 0; k < n; ++k) {
    a += cross(vertices[k], vertices[(k + 1) % n]);
  }
  return 0.5 * a;
}

double VoronoiCell::inertia() const {
  // Fan of triangles (center, v_k, v_k+1); each contributes
  // |a x b| / 12 * (|a|^2 + |b|^2 + a.b) about the center.
  double total = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 a = vertices[k] - center;
    const Vec2 b = vertices[(k + 1) % n] - center;
    total += cross(a, b) / 12.0 * (norm2(a) + norm2(b) + dot(a, b));
  }
  return total;
}

namespace {

// Keeps the part of the convex polygon where dot(y, normal) <= offset.
std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, Vec2 normal, double offset) {
  std::vector<Vec2> out;
  out.reserve(poly.size() + 1);
  const std::size_t n = poly.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 a = poly[k];
    const Vec2 b = poly[(k + 1) % n];
    const double fa = dot(a, normal) - offset;
    const double fb = dot(b, normal) - offset;
    if (fa <= 0.0) out.push_back(a);
    if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
      const double t = fa / (fa - fb);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

VoronoiCell build_cell(const PointPattern& p, std::size_t i) {
  const double s = p.window().side();
  const Vec2 c = p[i];
  VoronoiCell cell;
  cell.generator = i;
  cell.center = c;
  // The generator's own periodic images bound the cell by this square.
  cell.vertices = {{c.x - s / 2, c.y - s / 2},
                   {c.x + s / 2, c.y - s / 2},
                   {c.x + s / 2, c.y + s / 2},
                   {c.x - s / 2, c.y + s / 2}};

  // Visit competitors nearest first so the polygon shrinks quickly and the
  // radius test below prunes most of the remaining half-planes.
  struct Site {
    Vec2 pos;
    double d2;
  };
  std::vector<Site> sites;
  sites.reserve(9 * p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j == i) continue;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        const Vec2 q{p[j].x + dx * s, p[j].y + dy * s};
        sites.push_back({q, norm2(q - c)});
      }
    }
  }
  std::sort(sites.begin(), sites.end(), [](const Site& a, const Site& b) { return a.d2 < b.d2; });

  double radius2 = 0.5 * s * s;
  for (const Site& site : sites) {
    // A bisector farther than the farthest vertex cannot cut the cell.
    if (site.d2 > 4.0 * radius2 * (1.0 + 1e-12)) break;
    const Vec2 normal = site.pos - c;
    const double offset = 0.5 * (norm2(site.pos) - norm2(c));
    cell.vertices = clip_halfplane(cell.vertices, normal, offset);
    radius2 = 0.0;
    for (const Vec2& v : cell.vertices) radius2 = std::max(radius2, norm2(v - c));
  }
  return cell;
}

}  // namespace

VoronoiTessellation voronoi_tessellation(const PointPattern& p) {
  if (p.empty()) throw DomainError("Voronoi tessellation of an empty pattern");
  VoronoiTessellation tess;
  tess.cells.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) tess.cells.push_back(build_cell(p, i));
  return tess;
}

// ---------------------------------------------------------------------------
// Mark models

namespace {

std::vector<double> pairwise_shot_noise(const PointPattern& p, const ResponseFunction& resp,
                                        std::span<const double> weights) {
  resp.validate();
  const std::size_t n = p.size();
  std::vector<double> marks(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = torus_distance(p[i], p[j], p.window());
      if (d == 0.0) throw DomainError("shot-noise marks require distinct points");
      const double l = response_eval(resp, d);
      marks[i] += l * weights[j];
      marks[j] += l * weights[i];
    }
  }
  return marks;
}

}  // namespace

MarkedPattern shot_noise_marks(const PointPattern& p, const ResponseFunction& resp) {
  const std::vector<double> ones(p.size(), 1.0);
  return MarkedPattern(p, pairwise_shot_noise(p, resp, ones));
}

MarkedPattern nearest_neighbor_marks(const PointPattern& p) {
  if (p.size() < 2) throw DomainError("nearest-neighbour marks need at least 2 points");
  const std::size_t n = p.size();
  std::vector<double> marks(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = torus_distance(p[i], p[j], p.window());
      marks[i] = std::min(marks[i], d);
      marks[j] = std::min(marks[j], d);
    }
  }
  return MarkedPattern(p, std::move(marks));
}

MarkedPattern voronoi_area_marks(const PointPattern& p) {
  const VoronoiTessellation tess = voronoi_tessellation(p);
  std::vector<double> marks;
  marks.reserve(p.size());
  for (const VoronoiCell& c : tess.cells) marks.push_back(c.area());
  return MarkedPattern(p, std::move(marks));
}

MarkedPattern voronoi_inertia_marks(const PointPattern& p) {
  const VoronoiTessellation tess = voronoi_tessellation(p);
  std::vector<double> marks;
  marks.reserve(p.size());
  for (const VoronoiCell& c : tess.cells) marks.push_back(c.inertia());
  return MarkedPattern(p, std::move(marks));
}

MarkedPattern voronoi_shot_noise_marks(const PointPattern& p, const ResponseFunction& resp) {
  if (p.size() < 2) throw DomainError("Voronoi shot-noise marks need at least 2 points");
  const MarkedPattern areas = voronoi_area_marks(p);
  return MarkedPattern(p, pairwise_shot_noise(p, resp, areas.marks()));
}

std::string_view to_string(MarkModel m) {
  switch (m) {
    case MarkModel::shot_noise: return "shot_noise";
    case MarkModel::nearest_neighbor: return "nearest_neighbor";
    case MarkModel::voronoi_area: return "voronoi_area";
    case MarkModel::voronoi_inertia: return "voronoi_inertia";
    case MarkModel::voronoi_shot_noise: return "voronoi_shot_noise";
  }
  return "unknown";
}

MarkModel parse_mark_model(std::string_view name) {
  for (MarkModel m : {MarkModel::shot_noise, MarkModel::nearest_neighbor, MarkModel::voronoi_area,
                      MarkModel::voronoi_inertia, MarkModel::voronoi_shot_noise}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown mark model '" + std::string(name) + "'");
}

MarkedPattern compute_marks(MarkModel model, const PointPattern& p, const ResponseFunction& resp) {
  switch (model) {
    case MarkModel::shot_noise: return shot_noise_marks(p, resp);
    case MarkModel::nearest_neighbor: return nearest_neighbor_marks(p);
    case MarkModel::voronoi_area: return voronoi_area_marks(p);
    case MarkModel::voronoi_inertia: return voronoi_inertia_marks(p);
    case MarkModel::voronoi_shot_noise: return voronoi_shot_noise_marks(p, resp);
  }
  throw ConfigError("unhandled mark model");
}

}  // namespace geomark
