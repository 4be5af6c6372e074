#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <functional>

#include "pws/blending.hpp"

using namespace pws;

namespace {

// Cardinal coefficients are knot values; not-a-knot interpolation reproduces cubics.
Spline2D interpolant(const KnotGrid2D& grid, const std::function<double(Point2)>& f) {
  Eigen::MatrixXd c(grid.x.size(), grid.y.size());
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    for (std::size_t j = 0; j < grid.y.size(); ++j) c(i, j) = f({grid.x.knot(i), grid.y.knot(j)});
  }
  return Spline2D(grid, c);
}

const Rect kD1{-2, 2, -2, 2};
const Rect kD2{-2, 2, 1, 5};
const KnotGrid2D kG1 = make_knot_grid_2d(kD1, 2.0);
const KnotGrid2D kG2 = make_knot_grid_2d(kD2, 2.0);

PatchApprox triplet(const Rect& d, const KnotGrid2D& g, std::array<std::function<double(Point2)>, 3> f) {
  return {d, PatchKind::a, {interpolant(g, f[0]), interpolant(g, f[1]), interpolant(g, f[2])}, 0.125};
}

PatchApprox jump_patch(const Rect& d, const KnotGrid2D& g, std::function<double(Point2)> level, double plus,
                       double minus) {
  return {d,
          PatchKind::b,
          {interpolant(g, std::move(level)), interpolant(g, [plus](Point2 p) { return plus + 0.1 * p.x; }),
           interpolant(g, [minus](Point2 p) { return minus - 0.2 * p.y; })},
          0.125};
}

double sheet1(Point2 p) { return 0.8 * p.x + 0.1 * p.y; }
double sheet2(Point2 p) { return -0.7 * p.x + 0.2 * p.y; }
double sheet3(Point2 p) { return 0.05 * p.x * p.x - 0.6 * p.y - 1.0; }

// Same sheets with small perturbations, as a separate fit of the upper patch would give.
double sheet1b(Point2 p) { return sheet1(p) + 0.01 * p.y * p.y; }
double sheet2b(Point2 p) { return sheet2(p) - 0.02 * p.x; }
double sheet3b(Point2 p) { return sheet3(p) + 0.03; }

}  // namespace

TEST_CASE("C1 weight") {
  CHECK(c1_weight(0.0) == 0.0);
  CHECK(c1_weight(1.0) == 1.0);
  CHECK(c1_weight(0.5) == 0.5);
  CHECK(c1_weight(-3.0) == 0.0);
  CHECK(c1_weight(7.0) == 1.0);
  CHECK(c1_weight(0.25) == doctest::Approx(3 * 0.0625 - 2 * 0.015625).epsilon(1e-15));
  const double e = 1e-6;
  CHECK(std::abs((c1_weight(e) - c1_weight(0.0)) / e) < 1e-5);
  CHECK(std::abs((c1_weight(1.0) - c1_weight(1.0 - e)) / e) < 1e-5);
}

TEST_CASE("match_pairs: identity, swap and inactive spline") {
  const auto p = triplet(kD1, kG1, {sheet1, sheet2, sheet3});
  const Rect overlap{-2, 2, 1, 2};
  CHECK(match_pairs(p.splines, p.splines, overlap) == Permutation{0, 1, 2});
  const std::vector<Spline2D> swapped{p.splines[1], p.splines[0], p.splines[2]};
  CHECK(match_pairs(p.splines, swapped, overlap) == Permutation{1, 0, 2});

  // Third spline far below the others: brute-force scoring on the same probes.
  const auto low = [](Point2 q) { return -20.0 + q.x; };
  const auto a = triplet(kD1, kG1, {sheet1, sheet2, low});
  const auto b = triplet(kD2, kG2, {[low](Point2 q) { return low(q) + 1.0; }, sheet2b, sheet1b});
  const auto perm = match_pairs(a.splines, b.splines, overlap, 100);
  Permutation q{0, 1, 2}, brute = q;
  double best = 1e300;
  do {
    double cost = 0.0;
    for (int j = 0; j < 10; ++j) {
      for (int i = 0; i < 10; ++i) {
        const Point2 pt{-2.0 + 4.0 * i / 9.0, 1.0 + 1.0 * j / 9.0};
        for (int k = 0; k < 3; ++k) {
          const double d = a.splines[static_cast<std::size_t>(k)](pt) - b.splines[static_cast<std::size_t>(q[k])](pt);
          cost += d * d;
        }
      }
    }
    if (cost < best) {
      best = cost;
      brute = q;
    }
  } while (std::next_permutation(q.begin(), q.end()));
  CHECK(perm == brute);
  CHECK(perm == Permutation{2, 1, 0});
}

TEST_CASE("blend_a on two stacked square patches") {
  const auto p1 = triplet(kD1, kG1, {sheet1, sheet2, sheet3});
  const auto p2 = triplet(kD2, kG2, {sheet2b, sheet3b, sheet1b});
  const auto blend = blend_a(p1, p2, Axis::y);
  CHECK(blend.overlap() == Rect{-2, 2, 1, 2});
  CHECK(blend.pairing() == Permutation{2, 0, 1});

  for (int i = 0; i <= 40; ++i) {
    const double x = -2.0 + 0.1 * i;
    for (double y : {-2.0, -0.5, 0.99}) CHECK(blend({x, y}) == p1({x, y}));
    for (double y : {2.01, 3.0, 5.0}) CHECK(blend({x, y}) == p2({x, y}));
    CHECK(blend({x, 1.0}) == p1({x, 1.0}));
    CHECK(blend({x, 2.0}) == p2({x, 2.0}));
    for (double y : {1.1, 1.5, 1.93}) {
      const Point2 q{x, y};
      CHECK(blend(q) == std::max({blend.pair_value(0, q), blend.pair_value(1, q), blend.pair_value(2, q)}));
    }
  }
  // One-sided derivatives along y across both overlap edges; outside the overlap
  // pair k continues as spline k of p1 below and its partner in p2 above.
  const auto pair = [&](std::size_t k, Point2 q) {
    if (q.y < 1.0) return p1.splines[k](q);
    if (q.y > 2.0) return p2.splines[static_cast<std::size_t>(blend.pairing()[k])](q);
    return blend.pair_value(k, q);
  };
  const double s = 1e-5;
  for (int i = 0; i <= 8; ++i) {
    const double x = -2.0 + 0.5 * i;
    for (std::size_t k = 0; k < 3; ++k) {
      for (double edge : {1.0, 2.0}) {
        const double below = (pair(k, {x, edge}) - pair(k, {x, edge - s})) / s;
        const double above = (pair(k, {x, edge + s}) - pair(k, {x, edge})) / s;
        CHECK(std::abs(above - below) < 1e-4);
      }
    }
  }
  CHECK_THROWS_AS(blend({0, 6}), DomainError);
}

TEST_CASE("blend_a of a patch with itself") {
  const Rect d2{-2, 2, -1, 3};
  const auto g2 = make_knot_grid_2d({-2, 2, -1, 3}, 2.0);
  auto f1 = [](Point2 p) { return sheet1(p); };
  const auto p1 = triplet(kD1, kG1, {f1, sheet2, sheet3});
  const auto p2 = triplet(d2, g2, {f1, sheet2, sheet3});
  const auto blend = blend_a(p1, p2, Axis::y);
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 24; ++j) {
      const Point2 q{-2.0 + 0.2 * i, -2.0 + 0.2 * j};
      CHECK(blend(q) == doctest::Approx(q.y <= 2.0 ? p1(q) : p2(q)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(blend_a(p2, p1, Axis::y), std::invalid_argument);
  CHECK_THROWS_AS(blend_a(p1, triplet({3, 5, -2, 2}, make_knot_grid_2d({3, 5, -2, 2}, 2.0), {f1, sheet2, sheet3}), Axis::x),
                  std::invalid_argument);
}

TEST_CASE("scale_level_set: scaled, flipped and steeper copies") {
  auto level = [](Point2 p) { return p.y - 1.5 - 0.1 * p.x; };
  const auto p1 = jump_patch(kD1, kG1, level, 2, -1);
  const auto five = jump_patch(kD2, kG2, [&](Point2 p) { return 5.0 * level(p); }, 2, -1);
  const Rect overlap{-2, 2, 1, 2};
  const auto s5 = scale_level_set(p1, five, overlap);
  CHECK(std::abs(s5.alpha - 5.0) < 1e-10);
  CHECK_FALSE(s5.flipped);
  CHECK(s5.probes > 0);

  const auto neg = jump_patch(kD2, kG2, [&](Point2 p) { return -level(p); }, -1, 2);
  const auto sn = scale_level_set(p1, neg, overlap);
  CHECK(std::abs(sn.alpha + 1.0) < 1e-10);
  CHECK(sn.flipped);

  // Same zero line, gradient 1 against 2 across it, different curvature away from it.
  const auto steep = jump_patch(kD2, kG2, [&](Point2 p) { return 2.0 * level(p) + 0.3 * level(p) * level(p); }, 2, -1);
  CHECK(std::abs(scale_level_set(p1, steep, overlap).alpha - 2.0) < 0.1);

  const auto far = jump_patch(kD2, kG2, [](Point2 p) { return p.y + 10.0; }, 2, -1);
  const auto far1 = jump_patch(kD1, kG1, [](Point2 p) { return p.y + 10.0; }, 2, -1);
  CHECK_THROWS_AS(scale_level_set(far1, far, overlap), std::invalid_argument);
}

TEST_CASE("blend_b: identical, shifted and flipped patches") {
  auto level = [](Point2 p) { return p.y - 1.5; };
  const auto p1 = jump_patch(kD1, kG1, level, 2, -1);
  const auto same = jump_patch(kD2, kG2, level, 2, -1);
  const auto b0 = blend_b(p1, same, Axis::y);
  CHECK(b0.scale().alpha == 1.0);
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 35; ++j) {
      const Point2 q{-2.0 + 0.2 * i, -2.0 + 0.2 * j};
      const double expected = q.y <= 2.0 ? p1(q) : same(q);
      CHECK(b0(q) == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  // Zero lines y = 1.4 and y = 1.6 + 0.05x: the blended line lies between them and moves continuously.
  auto shifted = [](Point2 p) { return 2.0 * (p.y - 1.6 - 0.05 * p.x); };
  auto base = [](Point2 p) { return p.y - 1.4; };
  const auto q1 = jump_patch(kD1, kG1, base, 2, -1);
  const auto q2 = jump_patch(kD2, kG2, shifted, 2, -1);
  const auto b1 = blend_b(q1, q2, Axis::y);
  double prev = 0.0;
  for (int i = 0; i <= 40; ++i) {
    const double x = -2.0 + 0.1 * i;
    double lo = 1.0, hi = 2.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (b1.pair_value(0, {x, mid}) > 0.0 ? hi : lo) = mid;
    }
    const double y = 0.5 * (lo + hi);
    CHECK(y >= 1.4 - 1e-9);
    CHECK(y <= 1.6 + 0.05 * x + 1e-9);
    if (i > 0) CHECK(std::abs(y - prev) < 0.02);
    prev = y;
    CHECK(b1({x, 2.0}) == q2({x, 2.0}));
    CHECK(b1({x, 1.0}) == q1({x, 1.0}));
  }

  const auto flipped = jump_patch(kD2, kG2, [&](Point2 p) { return -level(p); }, -1, 2);
  const auto b2 = blend_b(p1, flipped, Axis::y);
  CHECK(b2.scale().flipped);
  for (int i = 0; i <= 20; ++i) {
    const double x = -2.0 + 0.2 * i;
    CHECK(b2({x, 1.0}) == p1({x, 1.0}));
    CHECK(b2({x, 2.0}) == flipped({x, 2.0}));
    // Above both zero lines: p1's plus piece paired with the flipped patch's minus piece.
    const double v = b2({x, 1.7});
    const double a = 2.0 + 0.1 * x, b = 2.0 - 0.2 * 1.7;
    CHECK(v >= std::min(a, b) - 1e-12);
    CHECK(v <= std::max(a, b) + 1e-12);
  }
}
