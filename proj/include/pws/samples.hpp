#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pws/point.hpp"

namespace pws {

/// Regular lattice structure detected on a sample set. Sample (ix, iy) sits at
/// (x0 + ix*hx, y0 + iy*hy); `index` maps ix + nx*iy to the sample index.
struct GridLayout {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double hx = 0.0;
  double hy = 0.0;
  std::vector<std::size_t> index;

  std::size_t at(std::size_t ix, std::size_t iy) const { return index[ix + nx * iy]; }
};

/// Sample sites with function values, univariate (dim 1, y ignored) or
/// bivariate (dim 2). Immutable after construction.
class SampleSet {
 public:
  /// `mesh_h <= 0` estimates the mesh size as the median nearest-neighbour
  /// distance of the sites.
  static SampleSet univariate(std::vector<double> xs, std::vector<double> values,
                              double mesh_h = 0.0);
  static SampleSet bivariate(std::vector<Point2> sites, std::vector<double> values,
                             double mesh_h = 0.0);

  int dim() const { return dim_; }
  std::size_t size() const { return sites_.size(); }
  std::span<const Point2> sites() const { return sites_; }
  std::span<const double> values() const { return values_; }
  double mesh_h() const { return mesh_h_; }
  /// Bounding box of the sites (degenerate in y for dim 1).
  const Rect& domain() const { return domain_; }
  const std::optional<GridLayout>& layout() const { return layout_; }

  std::vector<double> xs() const;
  SampleSet with_values(std::vector<double> values) const;
  /// Samples at the given indices; keeps the parent's mesh size.
  SampleSet subset(std::span<const std::size_t> indices) const;

 private:
  SampleSet() = default;
  void finalize(double mesh_h);

  int dim_ = 1;
  std::vector<Point2> sites_;
  std::vector<double> values_;
  double mesh_h_ = 0.0;
  Rect domain_;
  std::optional<GridLayout> layout_;
};

/// Median nearest-neighbour distance of a point set (0 for fewer than 2 points).
double median_nearest_neighbor_distance(std::span<const Point2> sites);

}  // namespace pws
