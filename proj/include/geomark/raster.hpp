#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "geomark/geometry.hpp"

namespace geomark {

struct Pixel {
  int row = 0;
  int col = 0;
  friend bool operator==(Pixel, Pixel) = default;
};

/// n x n real grid, row-major. Row index bins the x coordinate, column index
/// bins y.
class RasterImage {
 public:
  RasterImage() = default;
  /// Throws ConfigError unless n = 2^k with k >= 4.
  explicit RasterImage(int n);

  int n() const noexcept { return n_; }
  double& at(int row, int col) { return values_[static_cast<std::size_t>(row) * n_ + col]; }
  double at(int row, int col) const { return values_[static_cast<std::size_t>(row) * n_ + col]; }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  int n_ = 0;
  std::vector<double> values_;
};

void check_grid_size(int n);

/// Pixel of each point, in point order. Throws CollisionError when two
/// points share a pixel.
std::vector<Pixel> pixel_indices(const PointPattern& p, int n);

/// Dirac binning: each point's mark lands in its pixel.
RasterImage rasterize(const MarkedPattern& mp, int n);
/// Unit marks.
RasterImage rasterize(const PointPattern& p, int n);
/// Places values at given pixels (the reconstruction's view of an image).
RasterImage rasterize(std::span<const double> marks, std::span<const Pixel> pixels, int n);

bool is_collision_free(const PointPattern& p, int n);

/// Debug dump: header `row,col,value`, then one line per nonzero pixel.
void write_raster_csv(std::ostream& os, const RasterImage& img);

}  // namespace geomark
