#include "geomark/raster.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "geomark/errors.hpp"

namespace geomark {

void check_grid_size(int n) {
  if (n < 16 || (n & (n - 1)) != 0) {
    throw ConfigError("raster size must be a power of two >= 16, got " + std::to_string(n));
  }
}

RasterImage::RasterImage(int n) : n_(n) {
  check_grid_size(n);
  values_.assign(static_cast<std::size_t>(n) * n, 0.0);
}

namespace {

int bin(double v, double side, int n) {
  const int k = static_cast<int>(std::floor(v * n / side));
  return std::clamp(k, 0, n - 1);
}

}  // namespace

std::vector<Pixel> pixel_indices(const PointPattern& p, int n) {
  check_grid_size(n);
  const double side = p.window().side();
  std::vector<Pixel> pixels;
  pixels.reserve(p.size());
  std::vector<int> owner(static_cast<std::size_t>(n) * n, -1);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Pixel px{bin(p[i].x, side, n), bin(p[i].y, side, n)};
    int& slot = owner[static_cast<std::size_t>(px.row) * n + px.col];
    if (slot >= 0) {
      throw CollisionError("points " + std::to_string(slot) + " and " + std::to_string(i) +
                               " share pixel (" + std::to_string(px.row) + ", " +
                               std::to_string(px.col) + ")",
                           px.row, px.col);
    }
    slot = static_cast<int>(i);
    pixels.push_back(px);
  }
  return pixels;
}

bool is_collision_free(const PointPattern& p, int n) {
  try {
    pixel_indices(p, n);
    return true;
  } catch (const CollisionError&) {
    return false;
  }
}

RasterImage rasterize(std::span<const double> marks, std::span<const Pixel> pixels, int n) {
  RasterImage img(n);
  for (std::size_t i = 0; i < pixels.size(); ++i) img.at(pixels[i].row, pixels[i].col) = marks[i];
  return img;
}

RasterImage rasterize(const MarkedPattern& mp, int n) {
  const std::vector<Pixel> pixels = pixel_indices(mp.pattern(), n);
  return rasterize(mp.marks(), pixels, n);
}

RasterImage rasterize(const PointPattern& p, int n) {
  const std::vector<Pixel> pixels = pixel_indices(p, n);
  const std::vector<double> ones(p.size(), 1.0);
  return rasterize(ones, pixels, n);
}

void write_raster_csv(std::ostream& os, const RasterImage& img) {
  os << "row,col,value\n" << std::setprecision(17);
  for (int r = 0; r < img.n(); ++r) {
    for (int c = 0; c < img.n(); ++c) {
      if (img.at(r, c) != 0.0) os << r << ',' << c << ',' << img.at(r, c) << '\n';
    }
  }
}

}  // namespace geomark
