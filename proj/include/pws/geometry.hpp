#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "pws/point.hpp"
#include "pws/samples.hpp"
#include "pws/spline.hpp"

namespace pws {

struct Polyline {
  std::vector<Point2> vertices;
  bool closed = false;

  std::size_t segment_count() const {
    if (vertices.size() < 2) return 0;
    return closed ? vertices.size() : vertices.size() - 1;
  }
  Point2 segment_start(std::size_t s) const { return vertices[s]; }
  Point2 segment_end(std::size_t s) const { return vertices[(s + 1) % vertices.size()]; }
};

double point_segment_distance(Point2 p, Point2 a, Point2 b);

/// Values of a function on a uniform (nx x ny) lattice over `rect`, stored
/// row-major in x: value(ix, iy) = values[ix + nx * iy].
struct Lattice {
  Rect rect;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> values;

  double dx() const { return rect.width() / static_cast<double>(nx - 1); }
  double dy() const { return rect.height() / static_cast<double>(ny - 1); }
  Point2 node(std::size_t ix, std::size_t iy) const;
  double at(std::size_t ix, std::size_t iy) const { return values[ix + nx * iy]; }
};

/// Lattice with spacing at most `resolution` in both directions.
Lattice sample_lattice(const std::function<double(Point2)>& f, const Rect& rect, double resolution);

/// Marching squares on the zero level of a lattice. Saddle cells take the sign
/// of `center` at the cell midpoint when given, else of the corner average.
std::vector<Polyline> contour_zero(const Lattice& lattice,
                                   const std::function<double(Point2)>& center = {});

/// Zero set of g over rect. `resolution` must lie in (0, delta/4].
std::vector<Polyline> extract_zero_set(const Spline2D& g, const Rect& rect, double resolution);

/// Distance to the nearest segment; +infinity for an empty curve list.
double dist_to_polylines(Point2 p, std::span<const Polyline> curves);

/// Bucketed segment index for repeated "is anything within r" queries.
class SegmentLocator {
 public:
  SegmentLocator(std::span<const Polyline> curves, double cell);

  bool empty() const { return segments_.empty(); }
  /// Exact: true iff some segment lies within distance r of p.
  bool within(Point2 p, double r) const;
  /// Exact nearest-segment distance (+infinity when empty).
  double distance(Point2 p) const;

 private:
  struct Segment {
    Point2 a;
    Point2 b;
  };
  bool cell_of(Point2 p, long& cx, long& cy) const;
  double scan_ring(Point2 p, long cx, long cy, long ring) const;

  std::vector<Segment> segments_;
  double cell_ = 1.0;
  double x0_ = 0.0;
  double y0_ = 0.0;
  long nx_ = 0;
  long ny_ = 0;
  std::vector<std::vector<std::size_t>> buckets_;
};

/// Per-sample labels. Problem B uses kPlus / kMinus, Problem C uses 0, 1, 2.
struct Segmentation {
  static constexpr int excluded = -1;
  std::vector<int> labels;

  std::size_t count(int label) const;
  std::vector<std::size_t> indices(int label) const;
  friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

inline constexpr int kPlus = 0;
inline constexpr int kMinus = 1;

/// Sign-and-distance labels: plus where g > 0 and dist(x, zero set) > h,
/// minus where g < 0 and dist > h, excluded otherwise. With h <= 0 only the
/// sign is used (zeros still excluded).
Segmentation classify_restricted(std::span<const Point2> sites, std::span<const double> g_values,
                                 std::span<const Polyline> zero_set, double h);
/// Extracts the zero set at `resolution` (default: mesh_h/2, capped at
/// delta/4) and classifies the samples.
Segmentation classify_restricted(const SampleSet& samples, const Spline2D& g_gamma, double h,
                                 double resolution = 0.0);

struct SegmentByMaxOptions {
  /// A sample is excluded when its top two values differ by at most `band`.
  double band = 0.0;
  /// On grid data, also exclude samples whose 4-neighbourhood carries a
  /// different argmax label.
  bool exclude_label_boundaries = false;
};

Segmentation segment_by_max(const SampleSet& samples, std::span<const double> v1,
                            std::span<const double> v2, std::span<const double> v3,
                            const SegmentByMaxOptions& options = {});
Segmentation segment_by_max(const SampleSet& samples, const Spline2D& h1, const Spline2D& h2,
                            const Spline2D& h3, const SegmentByMaxOptions& options = {});

/// Side test for a curve that partitions a rectangle: a closed curve, or an
/// open one whose endpoints lie on the rectangle boundary.
class CurveSides {
 public:
  /// Throws std::invalid_argument when the curve does not partition `rect`.
  CurveSides(const Polyline& curve, const Rect& rect);
  /// True when p is enclosed by the curve (closed) or by the curve plus the
  /// counter-clockwise boundary path from its last to its first vertex.
  bool inside(Point2 p) const;

 private:
  std::vector<Point2> polygon_;
};

/// Samples whose values are signed distances to gamma, positive on the side
/// containing `side_probe`. Throws std::invalid_argument when gamma does not
/// partition the sample domain or the probe lies on gamma.
SampleSet signed_distance_samples(const Polyline& gamma, Point2 side_probe, const SampleSet& samples);

/// Symmetric discrete Hausdorff distance between two curve sets, measured
/// from vertices to segments. Throws std::invalid_argument on empty input.
double curve_deviation(std::span<const Polyline> approx, std::span<const Polyline> truth);

}  // namespace pws
