#pragma once

// Independent reference implementations used as test oracles. None of them
// call into the library's geometry beyond the public pattern containers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "geomark/geometry.hpp"

namespace oracle {

inline geomark::PointPattern uniform_pattern(std::size_t n, std::uint32_t seed, double side = 1.0) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.0, side);
  std::vector<geomark::Vec2> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({u(gen), u(gen)});
  return geomark::PointPattern(geomark::TorusWindow(side), std::move(pts));
}

// Distance to the nearest of the nine periodic copies, written out directly.
inline double copies_distance(geomark::Vec2 a, geomark::Vec2 b, double side) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      const double dx = a.x - b.x - i * side;
      const double dy = a.y - b.y - j * side;
      best = std::min(best, std::hypot(dx, dy));
    }
  }
  return best;
}

inline std::vector<double> nearest_neighbor(const geomark::PointPattern& p) {
  const double side = p.window().side();
  std::vector<double> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (j != i) best = std::min(best, copies_distance(p[i], p[j], side));
    }
    out.push_back(best);
  }
  return out;
}

inline double truncated_response(double r, double a = 10.0, double c = 0.6, double beta = 3.0) {
  return std::pow(std::max(a * r, c), -beta);
}

inline std::vector<double> shot_noise(const geomark::PointPattern& p, const std::vector<double>& weights) {
  const double side = p.window().side();
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (j != i) out[i] += truncated_response(copies_distance(p[i], p[j], side)) * weights[j];
    }
  }
  return out;
}

struct CellIntegrals {
  std::vector<double> area;
  std::vector<double> inertia;
};

// Pixel assignment on a res x res grid. Pixels whose corners share one owner
// are integrated exactly; others are split into sub x sub squares assigned by
// their centres.
inline CellIntegrals pixel_voronoi(const geomark::PointPattern& p, int res, int sub) {
  const double side = p.window().side();
  const double h = side / res;
  const std::size_t n = p.size();
  auto wrap_delta = [side](double d) { return d - side * std::round(d / side); };
  auto owner = [&](double x, double y) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = wrap_delta(x - p[i].x), dy = wrap_delta(y - p[i].y);
      const double d = dx * dx + dy * dy;
      if (d < bd) bd = d, best = i;
    }
    return best;
  };
  // Exact integral of |y - g|^2 over a square of width w centred at c.
  auto square_moment = [&](double cx, double cy, std::size_t g, double w) {
    const double dx = wrap_delta(cx - p[g].x), dy = wrap_delta(cy - p[g].y);
    return w * w * (dx * dx + dy * dy + w * w / 6.0);
  };

  std::vector<std::size_t> corner(static_cast<std::size_t>(res + 1) * (res + 1));
  for (int r = 0; r <= res; ++r) {
    for (int c = 0; c <= res; ++c) corner[static_cast<std::size_t>(r) * (res + 1) + c] = owner(r * h, c * h);
  }
  CellIntegrals out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  const double hs = h / sub;
  for (int r = 0; r < res; ++r) {
    for (int c = 0; c < res; ++c) {
      const std::size_t o = corner[static_cast<std::size_t>(r) * (res + 1) + c];
      const bool uniform = o == corner[static_cast<std::size_t>(r + 1) * (res + 1) + c] &&
                           o == corner[static_cast<std::size_t>(r) * (res + 1) + c + 1] &&
                           o == corner[static_cast<std::size_t>(r + 1) * (res + 1) + c + 1];
      if (uniform) {
        out.area[o] += h * h;
        out.inertia[o] += square_moment((r + 0.5) * h, (c + 0.5) * h, o, h);
        continue;
      }
      for (int a = 0; a < sub; ++a) {
        for (int b = 0; b < sub; ++b) {
          const double x = r * h + (a + 0.5) * hs, y = c * h + (b + 0.5) * hs;
          const std::size_t so = owner(x, y);
          out.area[so] += hs * hs;
          out.inertia[so] += square_moment(x, y, so, hs);
        }
      }
    }
  }
  return out;
}

// Ridge with an unpenalized intercept on standardized columns, minimized by
// plain gradient descent with a fixed step from the Lipschitz bound.
inline std::pair<Eigen::VectorXd, double> ridge_gradient_descent(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                                                 double lambda, int iterations) {
  const Eigen::Index n = Z.rows();
  Eigen::MatrixXd A(n, Z.cols() + 1);
  A << Eigen::VectorXd::Ones(n), Z;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(A.cols());
  const double lip = 2.0 * (A.transpose() * A).eigenvalues().real().maxCoeff() + 2.0 * lambda;
  const double step = 1.0 / lip;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd g = 2.0 * A.transpose() * (A * w - y);
    g.tail(Z.cols()) += 2.0 * lambda * w.tail(Z.cols());
    w -= step * g;
  }
  return {w.tail(Z.cols()), w(0)};
}

}  // namespace oracle
