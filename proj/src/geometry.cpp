#include "pws/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pws {

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  // Canonical endpoint order makes the result independent of orientation.
  if (b.x < a.x || (b.x == a.x && b.y < a.y)) std::swap(a, b);
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

Point2 Lattice::node(std::size_t ix, std::size_t iy) const {
  const double x = ix + 1 == nx ? rect.x1 : rect.x0 + static_cast<double>(ix) * dx();
  const double y = iy + 1 == ny ? rect.y1 : rect.y0 + static_cast<double>(iy) * dy();
  return {x, y};
}

Lattice sample_lattice(const std::function<double(Point2)>& f, const Rect& rect, double resolution) {
  if (!(resolution > 0.0)) throw std::invalid_argument("lattice: resolution must be positive");
  if (rect.empty()) throw std::invalid_argument("lattice: empty rectangle");
  Lattice lat;
  lat.rect = rect;
  lat.nx = static_cast<std::size_t>(std::ceil(rect.width() / resolution - 1e-9)) + 1;
  lat.ny = static_cast<std::size_t>(std::ceil(rect.height() / resolution - 1e-9)) + 1;
  lat.values.resize(lat.nx * lat.ny);
  for (std::size_t iy = 0; iy < lat.ny; ++iy) {
    for (std::size_t ix = 0; ix < lat.nx; ++ix) lat.values[ix + lat.nx * iy] = f(lat.node(ix, iy));
  }
  return lat;
}

namespace {

constexpr long kNone = -1;

// Crossing edges: id 2*(ix + nx*iy) is the horizontal edge from node (ix,iy)
// to (ix+1,iy); id + 1 is the vertical edge from (ix,iy) to (ix,iy+1).
struct EdgeGeometry {
  const Lattice& lat;

  Point2 crossing(long id) const {
    const auto node = static_cast<std::size_t>(id / 2);
    const std::size_t ix = node % lat.nx;
    const std::size_t iy = node / lat.nx;
    const Point2 a = lat.node(ix, iy);
    const bool horizontal = id % 2 == 0;
    const Point2 b = horizontal ? lat.node(ix + 1, iy) : lat.node(ix, iy + 1);
    const double va = lat.at(ix, iy);
    const double vb = horizontal ? lat.at(ix + 1, iy) : lat.at(ix, iy + 1);
    const double t = va / (va - vb);
    return a + t * (b - a);
  }
};

void drop_repeats(Polyline& line) {
  auto& v = line.vertices;
  v.erase(std::unique(v.begin(), v.end()), v.end());
  if (line.closed && v.size() > 1 && v.front() == v.back()) v.pop_back();
  if (line.closed && v.size() < 3) line.closed = false;
}

}  // namespace

std::vector<Polyline> contour_zero(const Lattice& lat, const std::function<double(Point2)>& center) {
  std::vector<Polyline> out;
  if (lat.nx < 2 || lat.ny < 2) return out;
  const std::size_t nx = lat.nx;
  auto hid = [nx](std::size_t ix, std::size_t iy) { return static_cast<long>(2 * (ix + nx * iy)); };
  auto vid = [nx](std::size_t ix, std::size_t iy) { return static_cast<long>(2 * (ix + nx * iy) + 1); };

  std::vector<std::array<long, 2>> segs;
  for (std::size_t iy = 0; iy + 1 < lat.ny; ++iy) {
    for (std::size_t ix = 0; ix + 1 < nx; ++ix) {
      const double v00 = lat.at(ix, iy);
      const double v10 = lat.at(ix + 1, iy);
      const double v11 = lat.at(ix + 1, iy + 1);
      const double v01 = lat.at(ix, iy + 1);
      const bool p00 = v00 > 0, p10 = v10 > 0, p11 = v11 > 0, p01 = v01 > 0;
      const long bottom = p00 != p10 ? hid(ix, iy) : kNone;
      const long right = p10 != p11 ? vid(ix + 1, iy) : kNone;
      const long top = p01 != p11 ? hid(ix, iy + 1) : kNone;
      const long left = p00 != p01 ? vid(ix, iy) : kNone;
      std::array<long, 4> cross{};
      int n = 0;
      for (long e : {bottom, right, top, left}) {
        if (e != kNone) cross[static_cast<std::size_t>(n++)] = e;
      }
      if (n == 2) {
        segs.push_back({cross[0], cross[1]});
      } else if (n == 4) {
        const Point2 mid = lat.node(ix, iy) + 0.5 * Point2{lat.dx(), lat.dy()};
        const double c = center ? center(mid) : 0.25 * (v00 + v10 + v11 + v01);
        // Corners sharing the centre's sign are joined through the cell; the
        // other two corners are cut off.
        const bool cut_00_11 = (c > 0) != p00;
        if (cut_00_11) {
          segs.push_back({left, bottom});
          segs.push_back({right, top});
        } else {
          segs.push_back({bottom, right});
          segs.push_back({top, left});
        }
      }
    }
  }
  if (segs.empty()) return out;

  const std::size_t nedges = 2 * lat.nx * lat.ny;
  std::vector<std::array<long, 2>> at_edge(nedges, {kNone, kNone});
  for (std::size_t s = 0; s < segs.size(); ++s) {
    for (long e : segs[s]) {
      auto& slot = at_edge[static_cast<std::size_t>(e)];
      (slot[0] == kNone ? slot[0] : slot[1]) = static_cast<long>(s);
    }
  }
  std::vector<char> used(segs.size(), 0);
  const EdgeGeometry geo{lat};

  auto walk = [&](long start_edge, long first_seg, Polyline& line) {
    long edge = start_edge;
    long seg = first_seg;
    while (seg != kNone && !used[static_cast<std::size_t>(seg)]) {
      used[static_cast<std::size_t>(seg)] = 1;
      const auto& sg = segs[static_cast<std::size_t>(seg)];
      edge = sg[0] == edge ? sg[1] : sg[0];
      line.vertices.push_back(geo.crossing(edge));
      const auto& slot = at_edge[static_cast<std::size_t>(edge)];
      seg = slot[0] == seg ? slot[1] : slot[0];
    }
    return edge;
  };

  // Open chains start at edges with a single incident segment (lattice border).
  for (std::size_t e = 0; e < nedges; ++e) {
    const auto& slot = at_edge[e];
    if (slot[0] == kNone || slot[1] != kNone || used[static_cast<std::size_t>(slot[0])]) continue;
    Polyline line;
    line.vertices.push_back(geo.crossing(static_cast<long>(e)));
    walk(static_cast<long>(e), slot[0], line);
    drop_repeats(line);
    if (line.vertices.size() >= 2) out.push_back(std::move(line));
  }
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (used[s]) continue;
    Polyline line;
    line.closed = true;
    const long start = segs[s][0];
    line.vertices.push_back(geo.crossing(start));
    walk(start, static_cast<long>(s), line);
    drop_repeats(line);
    if (line.vertices.size() >= 2) out.push_back(std::move(line));
  }
  return out;
}

std::vector<Polyline> extract_zero_set(const Spline2D& g, const Rect& rect, double resolution) {
  const double limit = std::min(g.grid().x.delta(), g.grid().y.delta()) / 4.0;
  if (!(resolution > 0.0) || resolution > limit * (1.0 + 1e-12)) {
    throw std::invalid_argument("zero set: resolution " + std::to_string(resolution) +
                                " outside (0, delta/4 = " + std::to_string(limit) + "]");
  }
  auto f = [&g](Point2 p) { return g(p); };
  return contour_zero(sample_lattice(f, rect, resolution), f);
}

double dist_to_polylines(Point2 p, std::span<const Polyline> curves) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : curves) {
    if (c.vertices.size() == 1) best = std::min(best, distance(p, c.vertices[0]));
    for (std::size_t s = 0; s < c.segment_count(); ++s) {
      best = std::min(best, point_segment_distance(p, c.segment_start(s), c.segment_end(s)));
    }
  }
  return best;
}

SegmentLocator::SegmentLocator(std::span<const Polyline> curves, double cell) : cell_(cell) {
  if (!(cell > 0.0)) throw std::invalid_argument("segment locator: cell size must be positive");
  for (const auto& c : curves) {
    if (c.vertices.size() == 1) segments_.push_back({c.vertices[0], c.vertices[0]});
    for (std::size_t s = 0; s < c.segment_count(); ++s) {
      segments_.push_back({c.segment_start(s), c.segment_end(s)});
    }
  }
  if (segments_.empty()) return;
  double x1 = segments_[0].a.x, y1 = segments_[0].a.y;
  x0_ = x1;
  y0_ = y1;
  for (const auto& s : segments_) {
    x0_ = std::min({x0_, s.a.x, s.b.x});
    y0_ = std::min({y0_, s.a.y, s.b.y});
    x1 = std::max({x1, s.a.x, s.b.x});
    y1 = std::max({y1, s.a.y, s.b.y});
  }
  nx_ = static_cast<long>(std::floor((x1 - x0_) / cell_)) + 1;
  ny_ = static_cast<long>(std::floor((y1 - y0_) / cell_)) + 1;
  buckets_.assign(static_cast<std::size_t>(nx_ * ny_), {});
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    const long cx0 = std::clamp(static_cast<long>(std::floor((std::min(s.a.x, s.b.x) - x0_) / cell_)), 0L, nx_ - 1);
    const long cx1 = std::clamp(static_cast<long>(std::floor((std::max(s.a.x, s.b.x) - x0_) / cell_)), 0L, nx_ - 1);
    const long cy0 = std::clamp(static_cast<long>(std::floor((std::min(s.a.y, s.b.y) - y0_) / cell_)), 0L, ny_ - 1);
    const long cy1 = std::clamp(static_cast<long>(std::floor((std::max(s.a.y, s.b.y) - y0_) / cell_)), 0L, ny_ - 1);
    for (long cy = cy0; cy <= cy1; ++cy) {
      for (long cx = cx0; cx <= cx1; ++cx) buckets_[static_cast<std::size_t>(cx + nx_ * cy)].push_back(i);
    }
  }
}

bool SegmentLocator::within(Point2 p, double r) const {
  if (segments_.empty()) return false;
  const long cx0 = std::max(0L, static_cast<long>(std::floor((p.x - r - x0_) / cell_)));
  const long cx1 = std::min(nx_ - 1, static_cast<long>(std::floor((p.x + r - x0_) / cell_)));
  const long cy0 = std::max(0L, static_cast<long>(std::floor((p.y - r - y0_) / cell_)));
  const long cy1 = std::min(ny_ - 1, static_cast<long>(std::floor((p.y + r - y0_) / cell_)));
  for (long cy = cy0; cy <= cy1; ++cy) {
    for (long cx = cx0; cx <= cx1; ++cx) {
      for (auto i : buckets_[static_cast<std::size_t>(cx + nx_ * cy)]) {
        if (point_segment_distance(p, segments_[i].a, segments_[i].b) <= r) return true;
      }
    }
  }
  return false;
}

double SegmentLocator::distance(Point2 p) const {
  double best = std::numeric_limits<double>::infinity();
  if (segments_.empty()) return best;
  // Grow a search window around p until it provably contains the nearest
  // segment; past the grid extent fall back to a full scan.
  for (double r = cell_;; r *= 2.0) {
    const long cx0 = std::max(0L, static_cast<long>(std::floor((p.x - r - x0_) / cell_)));
    const long cx1 = std::min(nx_ - 1, static_cast<long>(std::floor((p.x + r - x0_) / cell_)));
    const long cy0 = std::max(0L, static_cast<long>(std::floor((p.y - r - y0_) / cell_)));
    const long cy1 = std::min(ny_ - 1, static_cast<long>(std::floor((p.y + r - y0_) / cell_)));
    const bool covers_all = cx0 == 0 && cy0 == 0 && cx1 == nx_ - 1 && cy1 == ny_ - 1;
    if (covers_all) {
      for (const auto& s : segments_) best = std::min(best, point_segment_distance(p, s.a, s.b));
      return best;
    }
    for (long cy = cy0; cy <= cy1; ++cy) {
      for (long cx = cx0; cx <= cx1; ++cx) {
        for (auto i : buckets_[static_cast<std::size_t>(cx + nx_ * cy)]) {
          best = std::min(best, point_segment_distance(p, segments_[i].a, segments_[i].b));
        }
      }
    }
    if (best <= r) return best;
  }
}

std::size_t Segmentation::count(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

std::vector<std::size_t> Segmentation::indices(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) out.push_back(i);
  }
  return out;
}

Segmentation classify_restricted(std::span<const Point2> sites, std::span<const double> g_values,
                                 std::span<const Polyline> zero_set, double h) {
  Segmentation seg;
  seg.labels.assign(sites.size(), Segmentation::excluded);
  const bool use_distance = h > 0.0;
  const SegmentLocator locator(zero_set, use_distance ? h : 1.0);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const double g = g_values[i];
    if (g == 0.0) continue;
    if (use_distance && locator.within(sites[i], h)) continue;
    seg.labels[i] = g > 0.0 ? kPlus : kMinus;
  }
  return seg;
}

Segmentation classify_restricted(const SampleSet& samples, const Spline2D& g_gamma, double h,
                                 double resolution) {
  const auto sites = samples.sites();
  std::vector<double> g(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) g[i] = g_gamma(sites[i]);
  std::vector<Polyline> zero;
  if (h > 0.0) {
    const double cap = std::min(g_gamma.grid().x.delta(), g_gamma.grid().y.delta()) / 4.0;
    if (!(resolution > 0.0)) resolution = std::min(samples.mesh_h() / 2.0, cap);
    zero = extract_zero_set(g_gamma, samples.domain(), resolution);
  }
  return classify_restricted(sites, g, zero, h);
}

Segmentation segment_by_max(const SampleSet& samples, std::span<const double> v1,
                            std::span<const double> v2, std::span<const double> v3,
                            const SegmentByMaxOptions& options) {
  const std::size_t n = samples.size();
  if (v1.size() != n || v2.size() != n || v3.size() != n) {
    throw std::invalid_argument("segment_by_max: value arrays do not match the sample count");
  }
  Segmentation seg;
  seg.labels.assign(n, Segmentation::excluded);
  std::vector<int> argmax(n, Segmentation::excluded);
  for (std::size_t i = 0; i < n; ++i) {
    const std::array<double, 3> v{v1[i], v2[i], v3[i]};
    int top = 0;
    for (int c = 1; c < 3; ++c) {
      if (v[static_cast<std::size_t>(c)] > v[static_cast<std::size_t>(top)]) top = c;
    }
    double second = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < 3; ++c) {
      if (c != top) second = std::max(second, v[static_cast<std::size_t>(c)]);
    }
    const double gap = v[static_cast<std::size_t>(top)] - second;
    if (gap > 0.0) argmax[i] = top;
    if (gap > options.band) seg.labels[i] = top;
  }
  if (options.exclude_label_boundaries && samples.layout()) {
    const auto& g = *samples.layout();
    for (std::size_t iy = 0; iy < g.ny; ++iy) {
      for (std::size_t ix = 0; ix < g.nx; ++ix) {
        const std::size_t i = g.at(ix, iy);
        if (seg.labels[i] == Segmentation::excluded) continue;
        auto differs = [&](std::size_t j) { return argmax[j] != argmax[i]; };
        if ((ix > 0 && differs(g.at(ix - 1, iy))) || (ix + 1 < g.nx && differs(g.at(ix + 1, iy))) ||
            (iy > 0 && differs(g.at(ix, iy - 1))) || (iy + 1 < g.ny && differs(g.at(ix, iy + 1)))) {
          seg.labels[i] = Segmentation::excluded;
        }
      }
    }
  }
  return seg;
}

Segmentation segment_by_max(const SampleSet& samples, const Spline2D& h1, const Spline2D& h2,
                            const Spline2D& h3, const SegmentByMaxOptions& options) {
  const auto sites = samples.sites();
  std::vector<double> a(sites.size()), b(sites.size()), c(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    a[i] = h1(sites[i]);
    b[i] = h2(sites[i]);
    c[i] = h3(sites[i]);
  }
  return segment_by_max(samples, a, b, c, options);
}

namespace {

// Counter-clockwise arc-length position of a boundary point, starting at the
// lower-left corner.
double perimeter_position(const Rect& r, Point2 p, double tol) {
  const double w = r.width(), h = r.height();
  if (std::abs(p.y - r.y0) <= tol) return std::clamp(p.x - r.x0, 0.0, w);
  if (std::abs(p.x - r.x1) <= tol) return w + std::clamp(p.y - r.y0, 0.0, h);
  if (std::abs(p.y - r.y1) <= tol) return w + h + std::clamp(r.x1 - p.x, 0.0, w);
  if (std::abs(p.x - r.x0) <= tol) return 2 * w + h + std::clamp(r.y1 - p.y, 0.0, h);
  return -1.0;
}

}  // namespace

CurveSides::CurveSides(const Polyline& curve, const Rect& rect) {
  if (curve.vertices.size() < 2) throw std::invalid_argument("curve sides: curve needs two vertices");
  polygon_ = curve.vertices;
  if (curve.closed) {
    if (curve.vertices.size() < 3) throw std::invalid_argument("curve sides: degenerate closed curve");
    return;
  }
  const double scale = std::max(rect.width(), rect.height());
  const double tol = 1e-6 * scale;
  const double s_start = perimeter_position(rect, curve.vertices.front(), tol);
  const double s_end = perimeter_position(rect, curve.vertices.back(), tol);
  if (s_start < 0.0 || s_end < 0.0) {
    throw std::invalid_argument("curve sides: open curve endpoints must lie on the domain boundary");
  }
  // Close the curve along a rectangle enlarged by `m`, so that samples on the
  // domain boundary never sit on the closing path.
  const double m = scale;
  const Rect big{rect.x0 - m, rect.x1 + m, rect.y0 - m, rect.y1 + m};
  const double w = rect.width(), h = rect.height();
  const double perimeter = 2 * (w + h);
  auto push_out = [&](Point2 p, double s) -> Point2 {
    if (s < w) return {p.x, big.y0};
    if (s < w + h) return {big.x1, p.y};
    if (s < 2 * w + h) return {p.x, big.y1};
    return {big.x0, p.y};
  };
  const std::array<std::pair<double, Point2>, 4> corners{{{0.0, {big.x0, big.y0}},
                                                          {w, {big.x1, big.y0}},
                                                          {w + h, {big.x1, big.y1}},
                                                          {2 * w + h, {big.x0, big.y1}}}};
  double span = s_start - s_end;
  if (span <= 0.0) span += perimeter;
  std::vector<std::pair<double, Point2>> passed;
  for (const auto& [s, c] : corners) {
    double d = s - s_end;
    if (d <= 0.0) d += perimeter;
    if (d < span) passed.emplace_back(d, c);
  }
  std::sort(passed.begin(), passed.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  polygon_.push_back(push_out(curve.vertices.back(), s_end));
  for (const auto& pc : passed) polygon_.push_back(pc.second);
  polygon_.push_back(push_out(curve.vertices.front(), s_start));
}

bool CurveSides::inside(Point2 p) const {
  bool in = false;
  const std::size_t n = polygon_.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2 a = polygon_[i], b = polygon_[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) in = !in;
    }
  }
  return in;
}

SampleSet signed_distance_samples(const Polyline& gamma, Point2 side_probe, const SampleSet& samples) {
  const Rect& rect = samples.domain();
  const CurveSides sides(gamma, rect);
  const std::array<Polyline, 1> curves{gamma};
  const double scale = std::max({rect.width(), rect.height(), 1.0});
  if (dist_to_polylines(side_probe, curves) <= 1e-12 * scale) {
    throw std::invalid_argument("signed distance: side probe lies on the curve");
  }
  const bool probe_inside = sides.inside(side_probe);
  const SegmentLocator locator(curves, samples.mesh_h());
  std::vector<double> values;
  values.reserve(samples.size());
  for (const auto& p : samples.sites()) {
    const double d = locator.distance(p);
    values.push_back(sides.inside(p) == probe_inside ? d : -d);
  }
  return samples.with_values(std::move(values));
}

double curve_deviation(std::span<const Polyline> approx, std::span<const Polyline> truth) {
  auto has_vertices = [](std::span<const Polyline> c) {
    return std::any_of(c.begin(), c.end(), [](const Polyline& p) { return !p.vertices.empty(); });
  };
  if (!has_vertices(approx) || !has_vertices(truth)) {
    throw std::invalid_argument("curve deviation: empty curve set");
  }
  auto one_sided = [](std::span<const Polyline> from, std::span<const Polyline> to) {
    double cell = 0.0;
    std::size_t nseg = 0;
    for (const auto& c : to) {
      for (std::size_t s = 0; s < c.segment_count(); ++s) {
        cell += distance(c.segment_start(s), c.segment_end(s));
        ++nseg;
      }
    }
    cell = nseg > 0 && cell > 0.0 ? 4.0 * cell / static_cast<double>(nseg) : 1.0;
    const SegmentLocator locator(to, cell);
    double worst = 0.0;
    for (const auto& c : from) {
      for (const auto& v : c.vertices) {
        worst = std::max(worst, locator.empty() ? dist_to_polylines(v, to) : locator.distance(v));
      }
    }
    return worst;
  };
  return std::max(one_sided(approx, truth), one_sided(truth, approx));
}

}  // namespace pws
