#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pws/geometry.hpp"

using namespace pws;

namespace {

Spline2D spline_of(const KnotGrid2D& grid, double (*f)(double, double)) {
  Eigen::MatrixXd c(grid.x.size(), grid.y.size());
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    for (std::size_t j = 0; j < grid.y.size(); ++j) c(i, j) = f(grid.x.knot(i), grid.y.knot(j));
  }
  return Spline2D(grid, c);
}

Polyline segment_line(Point2 a, Point2 b, int pieces) {
  Polyline p;
  for (int i = 0; i <= pieces; ++i) p.vertices.push_back(a + (static_cast<double>(i) / pieces) * (b - a));
  return p;
}

Polyline circle(double r, double spacing) {
  Polyline p;
  p.closed = true;
  const int n = static_cast<int>(std::ceil(2 * std::numbers::pi * r / spacing));
  for (int i = 0; i < n; ++i) {
    const double t = 2 * std::numbers::pi * i / n;
    p.vertices.push_back({r * std::cos(t), r * std::sin(t)});
  }
  return p;
}

SampleSet grid_samples(double lo, double hi, double h, double (*f)(double, double)) {
  std::vector<Point2> pts;
  std::vector<double> v;
  const int n = static_cast<int>(std::lround((hi - lo) / h));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const Point2 p{lo + i * h, lo + j * h};
      pts.push_back(p);
      v.push_back(f(p.x, p.y));
    }
  }
  return SampleSet::bivariate(pts, v, h);
}

double zero_fn(double, double) { return 0.0; }

}  // namespace

TEST_CASE("zero set of a linear function") {
  const auto grid = make_knot_grid_2d({-3, 3, -3, 3}, 1.0);
  const auto g = spline_of(grid, [](double, double y) { return y; });
  const auto curves = extract_zero_set(g, grid.rect(), 0.1);
  REQUIRE(curves.size() == 1);
  CHECK_FALSE(curves[0].closed);
  for (const auto& v : curves[0].vertices) CHECK(std::abs(v.y) < 1e-6);
  CHECK(curves[0].vertices.front().x == doctest::Approx(-3.0));
  CHECK(curves[0].vertices.back().x == doctest::Approx(3.0));
}

TEST_CASE("zero set of a circle") {
  const auto grid = make_knot_grid_2d({-3, 3, -3, 3}, 1.0);
  const auto g = spline_of(grid, [](double x, double y) { return x * x + y * y - 1.0; });
  const auto curves = extract_zero_set(g, grid.rect(), 0.05);
  REQUIRE(curves.size() == 1);
  CHECK(curves[0].closed);
  for (const auto& v : curves[0].vertices) CHECK(std::abs(norm(v) - 1.0) < 2e-3);

  // Each contour vertex satisfies |g(v)| < L * resolution for a sampled
  // Lipschitz bound L of g on the rectangle.
  double lip = 0.0;
  for (int i = 0; i <= 60; ++i) {
    for (int j = 0; j <= 60; ++j) {
      const double x = -3.0 + 0.1 * i, y = -3.0 + 0.1 * j;
      const double gx = (g(std::min(x + 1e-6, 3.0), y) - g(std::max(x - 1e-6, -3.0), y)) / 2e-6;
      const double gy = (g(x, std::min(y + 1e-6, 3.0)) - g(x, std::max(y - 1e-6, -3.0))) / 2e-6;
      lip = std::max(lip, std::hypot(gx, gy));
    }
  }
  for (const auto& v : curves[0].vertices) CHECK(std::abs(g(v)) < lip * 0.05);
}

TEST_CASE("zero set edge cases") {
  const auto grid = make_knot_grid_2d({-3, 3, -3, 3}, 1.0);
  const auto pos = spline_of(grid, [](double x, double y) { return 1.0 + x * x + y * y; });
  CHECK(extract_zero_set(pos, grid.rect(), 0.1).empty());
  CHECK_THROWS_AS(extract_zero_set(pos, grid.rect(), 0.5), std::invalid_argument);
  CHECK_THROWS_AS(extract_zero_set(pos, grid.rect(), 0.0), std::invalid_argument);

  // Two separate components.
  const auto two = spline_of(grid, [](double x, double) { return x * x - 1.0; });
  CHECK(extract_zero_set(two, grid.rect(), 0.1).size() == 2);
}

TEST_CASE("saddle cells follow the centre sign") {
  Lattice lat;
  lat.rect = {0, 1, 0, 1};
  lat.nx = lat.ny = 2;
  lat.values = {1.0, -1.0, -1.0, 1.0};  // (0,0)+ (1,0)- (0,1)- (1,1)+
  const auto joined = contour_zero(lat, [](Point2) { return 1.0; });
  REQUIRE(joined.size() == 2);
  // Positive centre: the negative corners are cut off.
  for (const auto& c : joined) {
    const Point2 mid = 0.5 * (c.vertices.front() + c.vertices.back());
    CHECK(((mid.x > 0.5) != (mid.y > 0.5)));
  }
  const auto split = contour_zero(lat, [](Point2) { return -1.0; });
  REQUIRE(split.size() == 2);
  for (const auto& c : split) {
    const Point2 mid = 0.5 * (c.vertices.front() + c.vertices.back());
    CHECK(((mid.x > 0.5) == (mid.y > 0.5)));
  }
}

TEST_CASE("distance to polylines") {
  const std::vector<Polyline> line{segment_line({-3, 0}, {3, 0}, 10)};
  CHECK(dist_to_polylines({0, 2}, line) == doctest::Approx(2.0));
  CHECK(dist_to_polylines(line[0].vertices[3], line) == 0.0);
  CHECK(std::isinf(dist_to_polylines({0, 0}, std::vector<Polyline>{})));

  const std::vector<Polyline> ring{circle(1.0, 0.05)};
  CHECK(std::abs(dist_to_polylines({3, 4}, ring) - 4.0) < 5e-3);

  // Orientation and vertex order do not matter.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  Polyline rev = ring[0];
  std::reverse(rev.vertices.begin(), rev.vertices.end());
  const std::vector<Polyline> ring_rev{rev};
  const SegmentLocator loc(ring, 0.3);
  for (int i = 0; i < 200; ++i) {
    const Point2 p{u(rng), u(rng)};
    CHECK(dist_to_polylines(p, ring) == dist_to_polylines(p, ring_rev));
    CHECK(loc.distance(p) == doctest::Approx(dist_to_polylines(p, ring)).epsilon(1e-14));
    const double d = dist_to_polylines(p, ring);
    CHECK(loc.within(p, 0.3) == (d <= 0.3));
  }
}

TEST_CASE("restricted classification") {
  const auto grid = make_knot_grid_2d({-3, 3, -3, 3}, 1.0);
  const auto gy = spline_of(grid, [](double, double y) { return y; });

  const auto near = SampleSet::bivariate({{0, 0.05}, {0, 1}, {1, -1}, {2, 0}}, {0, 0, 0, 0}, 0.1);
  const auto seg = classify_restricted(near, gy, 0.1, 0.05);
  CHECK(seg.labels[0] == Segmentation::excluded);
  CHECK(seg.labels[1] == kPlus);
  CHECK(seg.labels[2] == kMinus);
  CHECK(seg.labels[3] == Segmentation::excluded);  // g == 0

  SUBCASE("excluded count matches a brute-force test") {
    const auto gc = spline_of(grid, [](double x, double y) { return x * x + y * y - 2.25; });
    const auto samples = grid_samples(-3, 3, 0.125, zero_fn);
    const double h = 0.125;
    const auto s = classify_restricted(samples, gc, h);
    const auto zero = extract_zero_set(gc, samples.domain(), h / 2);
    std::size_t brute = 0;
    std::size_t plus = 0;
    for (const auto& p : samples.sites()) {
      const double g = gc(p);
      if (g == 0.0 || dist_to_polylines(p, zero) <= h) {
        ++brute;
      } else if (g > 0) {
        ++plus;
      }
    }
    CHECK(s.count(Segmentation::excluded) == brute);
    CHECK(s.count(kPlus) == plus);
    CHECK(brute > 0);
  }

  SUBCASE("zero band reproduces the sign") {
    const auto gc = spline_of(grid, [](double x, double y) { return x * x + 0.7 * y * y - 2.1 + 0.01 * x; });
    const auto samples = grid_samples(-3, 3, 0.125, zero_fn);
    const auto s = classify_restricted(samples, gc, 0.0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double g = gc(samples.sites()[i]);
      REQUIRE(g != 0.0);
      CHECK(s.labels[i] == (g > 0 ? kPlus : kMinus));
    }
  }
}

TEST_CASE("segmentation by max") {
  const auto samples = grid_samples(-2, 2, 0.25, zero_fn);
  const auto grid = make_knot_grid_2d({-2, 2, -2, 2}, 2.0);
  const auto one = spline_of(grid, [](double, double) { return 1.0; });
  const auto zero = spline_of(grid, [](double, double) { return 0.0; });
  const auto minus = spline_of(grid, [](double, double) { return -1.0; });

  const auto all1 = segment_by_max(samples, one, zero, minus);
  CHECK(all1.count(0) == samples.size());

  const auto ties = segment_by_max(samples, one, one, minus);
  CHECK(ties.count(Segmentation::excluded) == samples.size());

  const auto banded = segment_by_max(samples, one, zero, minus, {.band = 1.0});
  CHECK(banded.count(Segmentation::excluded) == samples.size());
}

TEST_CASE("segmentation by max agrees with brute-force argmax") {
  // Offset grid so no sample sits on the triple point.
  std::vector<Point2> pts;
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 40; ++j) pts.push_back({-1.97 + 0.1 * i, -1.93 + 0.1 * j});
  }
  const auto samples = SampleSet::bivariate(pts, std::vector<double>(pts.size(), 0.0));
  const auto grid = make_knot_grid_2d({-2, 2, -2, 2}, 2.0);
  constexpr double a1 = 0.3, a2 = 2.4, a3 = 4.4;
  const auto h1 = spline_of(grid, [](double x, double y) { return std::cos(a1) * x + std::sin(a1) * y; });
  const auto h2 = spline_of(grid, [](double x, double y) { return std::cos(a2) * x + std::sin(a2) * y; });
  const auto h3 = spline_of(grid, [](double x, double y) { return std::cos(a3) * x + std::sin(a3) * y; });
  const auto seg = segment_by_max(samples, h1, h2, h3);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double v[3] = {std::cos(a1) * pts[i].x + std::sin(a1) * pts[i].y,
                         std::cos(a2) * pts[i].x + std::sin(a2) * pts[i].y,
                         std::cos(a3) * pts[i].x + std::sin(a3) * pts[i].y};
    const int expect = static_cast<int>(std::max_element(v, v + 3) - v);
    CHECK(seg.labels[i] == expect);
  }

  SUBCASE("neighbourhood pass removes label boundaries") {
    const auto grid_data = grid_samples(-2, 2, 0.25, zero_fn);
    const auto s = segment_by_max(grid_data, h1, h2, h3, {.exclude_label_boundaries = true});
    const auto& layout = *grid_data.layout();
    for (std::size_t iy = 0; iy < layout.ny; ++iy) {
      for (std::size_t ix = 0; ix + 1 < layout.nx; ++ix) {
        const int l = s.labels[layout.at(ix, iy)];
        const int r = s.labels[layout.at(ix + 1, iy)];
        if (l != Segmentation::excluded && r != Segmentation::excluded) CHECK(l == r);
      }
    }
    CHECK(s.count(Segmentation::excluded) > 0);
    CHECK(s.count(Segmentation::excluded) < grid_data.size() / 4);
  }
}

TEST_CASE("signed distance samples") {
  const auto samples = grid_samples(-3, 3, 0.25, zero_fn);
  const Polyline line = segment_line({-3, 0}, {3, 0}, 12);
  const auto sd = signed_distance_samples(line, {0, 1}, samples);
  for (std::size_t i = 0; i < sd.size(); ++i) CHECK(sd.values()[i] == doctest::Approx(sd.sites()[i].y).epsilon(1e-12));

  const auto flipped = signed_distance_samples(line, {0.3, -2}, samples);
  for (std::size_t i = 0; i < sd.size(); ++i) CHECK(flipped.values()[i] == -sd.values()[i]);

  const Polyline ring = circle(1.0, 0.05);
  const auto sc = signed_distance_samples(ring, {0, 0}, samples);
  for (std::size_t i = 0; i < sc.size(); ++i) {
    CHECK(std::abs(sc.values()[i] - (1.0 - norm(sc.sites()[i]))) < 1e-3);
  }

  CHECK_THROWS_AS(signed_distance_samples(line, {0.5, 0}, samples), std::invalid_argument);
  CHECK_THROWS_AS(signed_distance_samples(segment_line({-1, 0}, {1, 0}, 3), {0, 1}, samples),
                  std::invalid_argument);
}

TEST_CASE("curve sides for a curve leaving through adjacent edges") {
  // Corner cut: from the bottom edge to the right edge.
  Polyline corner = segment_line({2, -3}, {3, -2}, 4);
  CurveSides sides(corner, {-3, 3, -3, 3});
  CHECK(sides.inside({2.9, -2.9}) != sides.inside({0, 0}));
  CHECK(sides.inside({0, 0}) == sides.inside({-2.9, 2.9}));
}

TEST_CASE("curve deviation") {
  const std::vector<Polyline> a{segment_line({-3, 0}, {3, 0}, 60)};
  const std::vector<Polyline> b{segment_line({-3, 0.3}, {3, 0.3}, 60)};
  CHECK(curve_deviation(a, a) == 0.0);
  CHECK(curve_deviation(a, b) == doctest::Approx(0.3));

  const std::vector<Polyline> c1{circle(1.0, 0.02)};
  const std::vector<Polyline> c2{circle(1.1, 0.02)};
  CHECK(std::abs(curve_deviation(c1, c2) - 0.1) < 1e-3);

  CHECK_THROWS_AS(curve_deviation(a, std::vector<Polyline>{}), std::invalid_argument);
}
