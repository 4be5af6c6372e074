#include "pws/blending.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pws {

namespace {

bool covers(const KnotGrid2D& g, const Rect& r) {
  return g.x.a() <= r.x0 && g.x.b() >= r.x1 && g.y.a() <= r.y0 && g.y.b() >= r.y1;
}

// Uniform grid of roughly `count` points over rect.
std::vector<Point2> probe_grid(const Rect& r, std::size_t count) {
  const double aspect = r.width() / r.height();
  const auto nx = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(std::sqrt(count * aspect))));
  const auto ny = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(static_cast<double>(count) / nx)));
  std::vector<Point2> out;
  out.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      out.push_back({r.x0 + r.width() * static_cast<double>(i) / static_cast<double>(nx - 1),
                     r.y0 + r.height() * static_cast<double>(j) / static_cast<double>(ny - 1)});
    }
  }
  return out;
}

double mix(double a, double b, double w) {
  if (w <= 0.0) return a;
  if (w >= 1.0) return b;
  return a + w * (b - a);
}

}  // namespace

double PatchApprox::operator()(Point2 p) const {
  if (kind == PatchKind::a) return std::max({splines[0](p), splines[1](p), splines[2](p)});
  return splines[0](p) > 0.0 ? splines[1](p) : splines[2](p);
}

void validate(const PatchApprox& patch) {
  if (patch.splines.size() != 3) throw std::invalid_argument("patch: expected three splines");
  if (patch.domain.empty()) throw std::invalid_argument("patch: empty domain");
  for (const auto& s : patch.splines) {
    if (!covers(s.grid(), patch.domain)) throw std::invalid_argument("patch: spline grid does not cover the domain");
  }
  if (patch.kind == PatchKind::b && !(patch.mesh_h > 0.0)) {
    throw std::invalid_argument("patch: kind B needs a positive mesh size");
  }
}

Permutation match_pairs(std::span<const Spline2D> t1, std::span<const Spline2D> t2, const Rect& overlap,
                        std::size_t probe_count) {
  if (t1.size() != 3 || t2.size() != 3) throw std::invalid_argument("match_pairs: triplets expected");
  if (overlap.empty()) throw std::invalid_argument("match_pairs: empty overlap");
  const auto probes = probe_grid(overlap, std::max<std::size_t>(probe_count, 4));
  // cost[i][j] = sum over probes of (t1_i - t2_j)^2
  double cost[3][3] = {};
  for (const auto& q : probes) {
    double a[3], b[3];
    for (int i = 0; i < 3; ++i) {
      a[i] = t1[static_cast<std::size_t>(i)](q);
      b[i] = t2[static_cast<std::size_t>(i)](q);
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) cost[i][j] += (a[i] - b[j]) * (a[i] - b[j]);
    }
  }
  Permutation perm{0, 1, 2}, best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    const double c = cost[0][perm[0]] + cost[1][perm[1]] + cost[2][perm[2]];
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double c1_weight(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

LevelScale scale_level_set(const PatchApprox& p1, const PatchApprox& p2, const Rect& overlap) {
  if (p1.kind != PatchKind::b || p2.kind != PatchKind::b) {
    throw std::invalid_argument("scale_level_set: both patches must be kind B");
  }
  if (overlap.empty()) throw std::invalid_argument("scale_level_set: empty overlap");
  const double h = std::max(p1.mesh_h, p2.mesh_h);
  const Spline2D& g1 = p1.splines[0];
  const Spline2D& g2 = p2.splines[0];
  auto resolution = [&](const Spline2D& g) {
    return std::min(h / 2.0, std::min(g.grid().x.delta(), g.grid().y.delta()) / 4.0);
  };
  std::vector<Polyline> zero = extract_zero_set(g1, overlap, resolution(g1));
  for (auto& c : extract_zero_set(g2, overlap, resolution(g2))) zero.push_back(std::move(c));
  const SegmentLocator near(zero, h);

  const double step = h / 2.0;
  const auto nx = static_cast<std::size_t>(std::ceil(overlap.width() / step)) + 1;
  const auto ny = static_cast<std::size_t>(std::ceil(overlap.height() / step)) + 1;
  double num = 0.0, den = 0.0;
  LevelScale out;
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const Point2 q{overlap.x0 + overlap.width() * static_cast<double>(i) / static_cast<double>(nx - 1),
                     overlap.y0 + overlap.height() * static_cast<double>(j) / static_cast<double>(ny - 1)};
      if (!near.within(q, 2.0 * h)) continue;
      const double a = g1(q), b = g2(q);
      num += a * b;
      den += a * a;
      ++out.probes;
    }
  }
  if (out.probes == 0 || !(den > 0.0)) {
    throw std::invalid_argument("scale_level_set: no probes near the zero curves in the overlap");
  }
  out.alpha = num / den;
  out.flipped = out.alpha < 0.0;
  return out;
}

Blend::Blend(PatchApprox p1, PatchApprox p2, Axis axis)
    : p1_(std::move(p1)), p2_(std::move(p2)), axis_(axis), overlap_(intersect(p1_.domain, p2_.domain)) {
  validate(p1_);
  validate(p2_);
  if (p1_.kind != p2_.kind) throw std::invalid_argument("blend: patch kinds differ");
  const bool along_x = axis_ == Axis::x;
  const double lo = along_x ? overlap_.x0 : overlap_.y0;
  const double hi = along_x ? overlap_.x1 : overlap_.y1;
  if (overlap_.empty() || !(hi > lo)) throw std::invalid_argument("blend: patches do not overlap");
  const double c1 = along_x ? p1_.domain.x0 + p1_.domain.x1 : p1_.domain.y0 + p1_.domain.y1;
  const double c2 = along_x ? p2_.domain.x0 + p2_.domain.x1 : p2_.domain.y0 + p2_.domain.y1;
  if (!(c1 < c2)) throw std::invalid_argument("blend: first patch must lie on the low side along the axis");
  if (p1_.kind == PatchKind::a) {
    perm_ = match_pairs(p1_.splines, p2_.splines, overlap_);
  } else {
    scale_ = scale_level_set(p1_, p2_, overlap_);
    // alpha < 0 turns p1's minus side into the plus side of alpha * g_gamma1.
    if (scale_.flipped) first_ = {0, 2, 1};
  }
}

double Blend::tau(Point2 p) const {
  if (axis_ == Axis::x) return (p.x - overlap_.x0) / overlap_.width();
  return (p.y - overlap_.y0) / overlap_.height();
}

double Blend::side1(std::size_t i, Point2 p) const {
  const double v = p1_.splines[static_cast<std::size_t>(first_[i])](p);
  return p1_.kind == PatchKind::b && i == 0 ? scale_.alpha * v : v;
}

double Blend::side2(std::size_t i, Point2 p) const {
  return p2_.splines[static_cast<std::size_t>(perm_[i])](p);
}

double Blend::pair_value(std::size_t i, Point2 p) const {
  if (i > 2) throw std::out_of_range("blend: pair index");
  return mix(side1(i, p), side2(i, p), c1_weight(tau(p)));
}

double Blend::operator()(Point2 p) const {
  if (!overlap_.contains(p)) {
    if (p1_.domain.contains(p)) return p1_(p);
    if (p2_.domain.contains(p)) return p2_(p);
    throw DomainError("blend: point outside both patches");
  }
  if (p1_.kind == PatchKind::a) return std::max({pair_value(0, p), pair_value(1, p), pair_value(2, p)});
  return pair_value(0, p) > 0.0 ? pair_value(1, p) : pair_value(2, p);
}

Blend blend_a(const PatchApprox& p1, const PatchApprox& p2, Axis axis) {
  if (p1.kind != PatchKind::a || p2.kind != PatchKind::a) throw std::invalid_argument("blend_a: kind A patches expected");
  return Blend(p1, p2, axis);
}

Blend blend_b(const PatchApprox& p1, const PatchApprox& p2, Axis axis) {
  if (p1.kind != PatchKind::b || p2.kind != PatchKind::b) throw std::invalid_argument("blend_b: kind B patches expected");
  return Blend(p1, p2, axis);
}

}  // namespace pws
