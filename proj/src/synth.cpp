#include "pws/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>

namespace pws {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

std::size_t steps(double span, double h, const char* what) {
  if (!(h > 0.0)) throw std::invalid_argument(std::string(what) + ": mesh size must be positive");
  const double n = span / h;
  const double rn = std::round(n);
  if (rn < 1.0 || std::abs(n - rn) > 1e-9 * std::max(1.0, n)) {
    throw std::invalid_argument(std::string(what) + ": extent is not a multiple of the mesh size");
  }
  return static_cast<std::size_t>(rn);
}

// Smooth seeded displacement on [t0, t1]: cubic spline through uniform
// random values, scaled so its largest size on a fine scan is `amplitude`.
std::function<double(double)> displacement(double t0, double t1, double amplitude, std::uint64_t seed,
                                           bool periodic) {
  if (amplitude <= 0.0) return [](double) { return 0.0; };
  constexpr int kIntervals = 8;
  constexpr int kScan = 256 * kIntervals;
  std::mt19937_64 rng(seed ^ 0x5bd1e9955bd1e995ULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(kIntervals + 1);
  for (auto& x : v) x = u(rng);
  if (periodic) v.back() = v.front();
  const KnotGrid1D grid(t0, t1, (t1 - t0) / kIntervals);
  const Spline1D raw(grid, v);
  double top = 0.0;
  for (int i = 0; i <= kScan; ++i) top = std::max(top, std::abs(raw(t0 + (t1 - t0) * i / kScan)));
  for (auto& x : v) x *= amplitude / top;
  auto spline = std::make_shared<Spline1D>(grid, v);
  return [spline, t0, t1](double t) { return (*spline)(std::clamp(t, t0, t1)); };
}

void check_noise(const NoiseSpec& noise) {
  if (noise.value_sigma < 0.0 || noise.curve_amplitude < 0.0) {
    throw std::invalid_argument("noise magnitudes must be non-negative");
  }
}

bool near_corner(Point2 p, const Rect& r) {
  const double tol = 1e-9 * std::max(r.width(), r.height());
  const bool on_x = std::abs(p.x - r.x0) <= tol || std::abs(p.x - r.x1) <= tol;
  const bool on_y = std::abs(p.y - r.y0) <= tol || std::abs(p.y - r.y1) <= tol;
  return on_x && on_y;
}

// Exit point of the ray c + t d (t > 0) from rect, c inside.
Point2 ray_exit(Point2 c, Point2 d, const Rect& r) {
  double t = std::numeric_limits<double>::infinity();
  if (d.x > 0) t = std::min(t, (r.x1 - c.x) / d.x);
  if (d.x < 0) t = std::min(t, (r.x0 - c.x) / d.x);
  if (d.y > 0) t = std::min(t, (r.y1 - c.y) / d.y);
  if (d.y < 0) t = std::min(t, (r.y0 - c.y) / d.y);
  Point2 e = c + t * d;
  e.x = std::clamp(e.x, r.x0, r.x1);
  e.y = std::clamp(e.y, r.y0, r.y1);
  return e;
}

Polyline ray_polyline(Point2 c, Point2 d, const Rect& r, double spacing) {
  const Point2 e = ray_exit(c, d, r);
  const double len = distance(c, e);
  const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
  Polyline pl;
  for (int i = 0; i <= n; ++i) pl.vertices.push_back(c + (static_cast<double>(i) / n) * (e - c));
  pl.vertices.back() = e;
  return pl;
}

// Boundary crossing on segment a (inside) -> b (outside).
Point2 clip_to(Point2 a, Point2 b, const Rect& r) {
  double t = 1.0;
  const Point2 d = b - a;
  if (b.x > r.x1) t = std::min(t, (r.x1 - a.x) / d.x);
  if (b.x < r.x0) t = std::min(t, (r.x0 - a.x) / d.x);
  if (b.y > r.y1) t = std::min(t, (r.y1 - a.y) / d.y);
  if (b.y < r.y0) t = std::min(t, (r.y0 - a.y) / d.y);
  Point2 p = a + t * d;
  p.x = std::clamp(p.x, r.x0, r.x1);
  p.y = std::clamp(p.y, r.y0, r.y1);
  return p;
}

// The single run of vertices inside r, extended to the boundary.
Polyline clip_polyline(const std::vector<Point2>& v, const Rect& r) {
  std::size_t first = v.size(), last = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (r.contains(v[i], 0.0)) {
      first = std::min(first, i);
      last = i;
    }
  }
  if (first >= v.size() || first == 0 || last + 1 >= v.size()) {
    throw std::invalid_argument("jump curve does not cross the domain");
  }
  for (std::size_t i = first; i <= last; ++i) {
    if (!r.contains(v[i], 0.0)) throw std::invalid_argument("jump curve crosses the domain boundary more than twice");
  }
  Polyline pl;
  pl.vertices.push_back(clip_to(v[first], v[first - 1], r));
  pl.vertices.insert(pl.vertices.end(), v.begin() + static_cast<long>(first), v.begin() + static_cast<long>(last) + 1);
  pl.vertices.push_back(clip_to(v[last], v[last + 1], r));
  return pl;
}

}  // namespace

double Polynomial::operator()(Point2 p) const {
  double s = 0.0;
  for (const auto& t : terms) s += t.coeff * ipow(p.x, t.px) * ipow(p.y, t.py);
  return s;
}

double eval_piece(const Piece& piece, Point2 p) {
  if (const auto* poly = std::get_if<Polynomial>(&piece)) return (*poly)(p);
  return std::get<Spline1D>(piece)(p.x);
}

std::vector<Point2> grid_sites(const Rect& rect, double mesh_h) {
  const auto nx = steps(rect.width(), mesh_h, "grid");
  const auto ny = steps(rect.height(), mesh_h, "grid");
  std::vector<Point2> pts;
  pts.reserve((nx + 1) * (ny + 1));
  for (std::size_t iy = 0; iy <= ny; ++iy) {
    const double y = iy == ny ? rect.y1 : rect.y0 + static_cast<double>(iy) * mesh_h;
    for (std::size_t ix = 0; ix <= nx; ++ix) {
      const double x = ix == nx ? rect.x1 : rect.x0 + static_cast<double>(ix) * mesh_h;
      pts.push_back({x, y});
    }
  }
  return pts;
}

SampleSet add_value_noise(const SampleSet& samples, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("noise sigma must be non-negative");
  if (sigma == 0.0) return samples;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<double> v(samples.values().begin(), samples.values().end());
  for (auto& x : v) x += n(rng);
  return samples.with_values(std::move(v));
}

SyntheticData gen_univariate(double a, double b, double step, CompositeMode mode,
                             const std::array<Piece, 2>& pieces, const NoiseSpec& noise) {
  check_noise(noise);
  if (noise.curve_amplitude > 0.0) throw std::invalid_argument("curve noise applies to jump data only");
  if (!(a < b)) throw std::invalid_argument("univariate: empty interval");
  const auto n = steps(b - a, step, "univariate");
  auto p0 = pieces[0], p1 = pieces[1];
  const bool use_min = mode == CompositeMode::min;
  auto f = [p0, p1, use_min](Point2 p) {
    const double u = eval_piece(p0, p), v = eval_piece(p1, p);
    return use_min ? std::min(u, v) : std::max(u, v);
  };

  std::vector<double> xs(n + 1), vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    xs[i] = i == n ? b : a + static_cast<double>(i) * step;
    vals[i] = f({xs[i], 0.0});
  }

  SyntheticData out{add_value_noise(SampleSet::univariate(xs, vals, step), noise.value_sigma, noise.seed), {}};
  auto& t = out.truth;
  t.f = f;
  t.region = [p0, p1, use_min](Point2 p) {
    const double u = eval_piece(p0, p), v = eval_piece(p1, p);
    return (use_min ? u <= v : u >= v) ? 0 : 1;
  };
  t.pieces = {p0, p1};

  // Sign changes of p0 - p1 on a fine scan, refined by bisection.
  auto diff = [&](double x) { return eval_piece(p0, {x, 0.0}) - eval_piece(p1, {x, 0.0}); };
  const std::size_t scan = 10 * n;
  double xl = a, dl = diff(a);
  if (dl == 0.0) t.breaks.push_back(a);
  for (std::size_t i = 1; i <= scan; ++i) {
    const double xr = i == scan ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(scan);
    const double dr = diff(xr);
    if (dr == 0.0) {
      t.breaks.push_back(xr);
    } else if (dl != 0.0 && (dl < 0.0) != (dr < 0.0)) {
      double lo = xl, hi = xr, flo = dl;
      for (int it = 0; it < 100 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = diff(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      t.breaks.push_back(0.5 * (lo + hi));
    }
    xl = xr;
    dl = dr;
  }
  t.smooth_warning = t.breaks.empty();
  return out;
}

SyntheticData gen_three_corner_continuous(const Rect& rect, double mesh_h, const std::array<Sheet, 3>& sheets,
                                          const NoiseSpec& noise) {
  check_noise(noise);
  if (noise.curve_amplitude > 0.0) throw std::invalid_argument("curve noise applies to jump data only");
  const Sheet &s0 = sheets[0], &s1 = sheets[1], &s2 = sheets[2];
  const double a11 = s0.a - s1.a, a12 = s0.b - s1.b, a21 = s0.a - s2.a, a22 = s0.b - s2.b;
  const double det = a11 * a22 - a12 * a21;
  if (std::abs(det) < 1e-12) throw std::invalid_argument("three-corner: sheets have no single common point");
  const double r1 = s1.c - s0.c, r2 = s2.c - s0.c;
  const Point2 triple{(r1 * a22 - a12 * r2) / det, (a11 * r2 - r1 * a21) / det};
  if (!rect.contains(triple, 0.0)) throw std::invalid_argument("three-corner: triple point lies outside the domain");

  auto argmax = [sheets](Point2 p) {
    int best = 0;
    for (int k = 1; k < 3; ++k) {
      if (sheets[k](p) > sheets[best](p)) best = k;
    }
    return best;
  };
  auto f = [sheets](Point2 p) { return std::max({sheets[0](p), sheets[1](p), sheets[2](p)}); };

  const auto sites = grid_sites(rect, mesh_h);
  std::vector<double> vals;
  vals.reserve(sites.size());
  for (const auto& p : sites) vals.push_back(f(p));

  SyntheticData out{add_value_noise(SampleSet::bivariate(sites, vals, mesh_h), noise.value_sigma, noise.seed), {}};
  auto& t = out.truth;
  t.f = f;
  t.region = argmax;
  for (const auto& s : sheets) t.pieces.push_back(Polynomial{{{s.c, 0, 0}, {s.a, 1, 0}, {s.b, 0, 1}}});
  const double spacing = std::min(0.01, mesh_h / 8.0);
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const int k = 3 - i - j;
      const Point2 d{-(sheets[i].b - sheets[j].b), sheets[i].a - sheets[j].a};
      const double gain = (sheets[i].a - sheets[k].a) * d.x + (sheets[i].b - sheets[k].b) * d.y;
      if (gain == 0.0) continue;
      const Point2 dir = (gain > 0 ? 1.0 : -1.0) / norm(d) * d;
      const Polyline ray = ray_polyline(triple, dir, rect, spacing);
      if (ray.vertices.size() >= 2 && distance(ray.vertices.front(), ray.vertices.back()) > 0.0) {
        t.curves.push_back(ray);
      }
    }
  }
  return out;
}

std::string to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::sinusoid: return "sinusoid";
    case CurveKind::circle: return "circle";
    case CurveKind::line: return "line";
  }
  return "unknown";
}

CurveKind curve_kind_from_string(const std::string& name) {
  for (auto k : {CurveKind::sinusoid, CurveKind::circle, CurveKind::line}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown curve kind '" + name + "'");
}

SyntheticData gen_jump(const Rect& rect, double mesh_h, const CurveSpec& c, const Piece& plus_piece,
                       const Piece& minus_piece, const NoiseSpec& noise) {
  check_noise(noise);
  const double amp = noise.curve_amplitude;
  const double spacing = std::min(0.01, mesh_h / 8.0);
  std::function<bool(Point2)> plus_side;
  Polyline curve;

  switch (c.kind) {
    case CurveKind::sinusoid: {
      const auto d = displacement(rect.x0, rect.x1, amp, noise.seed, false);
      auto y_of = [c, d](double x) { return c.amplitude * std::sin(c.frequency * x + c.phase) + c.offset + d(x); };
      const int n = static_cast<int>(std::ceil(rect.width() / spacing));
      for (int i = 0; i <= n; ++i) {
        const double x = i == n ? rect.x1 : rect.x0 + rect.width() * i / n;
        const double y = y_of(x);
        if (!(y > rect.y0 && y < rect.y1)) throw std::invalid_argument("sinusoid leaves the domain through its top or bottom");
        curve.vertices.push_back({x, y});
      }
      plus_side = [y_of](Point2 p) { return p.y > y_of(p.x); };
      break;
    }
    case CurveKind::circle: {
      if (!(c.radius > 0.0)) throw std::invalid_argument("circle radius must be positive");
      const Point2 ctr{c.cx, c.cy};
      const double reach = c.radius + amp;
      if (!(ctr.x - reach > rect.x0 && ctr.x + reach < rect.x1 && ctr.y - reach > rect.y0 && ctr.y + reach < rect.y1)) {
        throw std::invalid_argument("circle does not lie inside the domain");
      }
      const auto d = displacement(0.0, kTwoPi, amp, noise.seed, true);
      auto r_of = [c, d](double theta) { return c.radius + d(theta); };
      const int n = static_cast<int>(std::ceil(kTwoPi * reach / spacing));
      curve.closed = true;
      for (int i = 0; i < n; ++i) {
        const double th = kTwoPi * i / n;
        curve.vertices.push_back(ctr + r_of(th) * Point2{std::cos(th), std::sin(th)});
      }
      plus_side = [ctr, r_of](Point2 p) {
        const Point2 v = p - ctr;
        double th = std::atan2(v.y, v.x);
        if (th < 0.0) th += kTwoPi;
        return norm(v) < r_of(th);
      };
      break;
    }
    case CurveKind::line: {
      const Point2 ctr{c.cx, c.cy};
      const Point2 dir{std::cos(c.angle), std::sin(c.angle)};
      const Point2 nrm{-dir.y, dir.x};
      // Parameter range covering the domain with margin.
      const double reach = distance(ctr, {rect.x0, rect.y0});
      const double span = std::max({reach, distance(ctr, {rect.x1, rect.y0}), distance(ctr, {rect.x0, rect.y1}),
                                    distance(ctr, {rect.x1, rect.y1})}) + amp + 1.0;
      const auto d = displacement(-span, span, amp, noise.seed, false);
      const int n = static_cast<int>(std::ceil(2.0 * span / spacing));
      std::vector<Point2> v;
      for (int i = 0; i <= n; ++i) {
        const double t = -span + 2.0 * span * i / n;
        v.push_back(ctr + t * dir + d(t) * nrm);
      }
      curve = clip_polyline(v, rect);
      plus_side = [ctr, dir, nrm, d](Point2 p) {
        const Point2 q = p - ctr;
        return dot(q, nrm) > d(dot(q, dir));
      };
      break;
    }
  }
  if (!curve.closed && (near_corner(curve.vertices.front(), rect) || near_corner(curve.vertices.back(), rect))) {
    throw std::invalid_argument("jump curve leaves the domain through a corner");
  }

  auto region = [plus_side](Point2 p) { return plus_side(p) ? kPlus : kMinus; };
  auto f = [plus_side, plus_piece, minus_piece](Point2 p) {
    return plus_side(p) ? eval_piece(plus_piece, p) : eval_piece(minus_piece, p);
  };
  const auto sites = grid_sites(rect, mesh_h);
  std::vector<double> vals;
  vals.reserve(sites.size());
  for (const auto& p : sites) vals.push_back(f(p));

  SyntheticData out{add_value_noise(SampleSet::bivariate(sites, vals, mesh_h), noise.value_sigma, noise.seed), {}};
  out.truth.f = f;
  out.truth.region = region;
  out.truth.pieces = {plus_piece, minus_piece};
  out.truth.curves = {curve};
  return out;
}

SyntheticData gen_three_corner_jump(const Rect& rect, double mesh_h, const std::array<Piece, 3>& pieces,
                                    Point2 centre, const std::array<double, 3>& angles, const NoiseSpec& noise) {
  check_noise(noise);
  if (noise.curve_amplitude > 0.0) throw std::invalid_argument("curve noise applies to jump data only");
  if (!(centre.x > rect.x0 && centre.x < rect.x1 && centre.y > rect.y0 && centre.y < rect.y1)) {
    throw std::invalid_argument("three-corner: centre must lie inside the domain");
  }
  std::array<double, 3> th{};
  for (int i = 0; i < 3; ++i) {
    th[i] = std::fmod(angles[i], kTwoPi);
    if (th[i] < 0.0) th[i] += kTwoPi;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double gap = std::abs(th[i] - th[j]);
      if (std::min(gap, kTwoPi - gap) < 1e-9) throw std::invalid_argument("three-corner: rays overlap");
    }
  }
  // Counter-clockwise sweep from ray i to the next ray.
  auto sector = [th, centre](Point2 p) {
    const Point2 v = p - centre;
    double phi = std::atan2(v.y, v.x);
    if (phi < 0.0) phi += kTwoPi;
    int best = 0;
    double best_gap = kTwoPi + 1.0;
    for (int i = 0; i < 3; ++i) {
      double gap = phi - th[i];
      if (gap < 0.0) gap += kTwoPi;
      if (gap < best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    return best;
  };
  auto f = [sector, pieces](Point2 p) { return eval_piece(pieces[static_cast<std::size_t>(sector(p))], p); };

  const auto sites = grid_sites(rect, mesh_h);
  std::vector<double> vals;
  vals.reserve(sites.size());
  for (const auto& p : sites) vals.push_back(f(p));

  SyntheticData out{add_value_noise(SampleSet::bivariate(sites, vals, mesh_h), noise.value_sigma, noise.seed), {}};
  out.truth.f = f;
  out.truth.region = sector;
  out.truth.pieces = {pieces[0], pieces[1], pieces[2]};
  const double spacing = std::min(0.01, mesh_h / 8.0);
  for (double a : th) {
    const Polyline ray = ray_polyline(centre, {std::cos(a), std::sin(a)}, rect, spacing);
    if (near_corner(ray.vertices.back(), rect)) throw std::invalid_argument("three-corner: ray leaves through a corner");
    out.truth.curves.push_back(ray);
  }
  return out;
}

}  // namespace pws
