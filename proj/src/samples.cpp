#include "pws/samples.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pws {

namespace {

// Sorted distinct coordinates, merging values closer than tol.
std::vector<double> distinct(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) {
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  }
  return out;
}

bool uniform(const std::vector<double>& v, double tol) {
  if (v.size() < 2) return true;
  const double h = (v.back() - v.front()) / static_cast<double>(v.size() - 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::abs(v[i] - (v.front() + static_cast<double>(i) * h)) > tol) return false;
  }
  return true;
}

std::optional<GridLayout> detect_layout(std::span<const Point2> sites, const Rect& box) {
  if (sites.size() < 2) return std::nullopt;
  const double scale = std::max({box.width(), box.height(), 1.0});
  const double tol = 1e-9 * scale;
  std::vector<double> xs, ys;
  xs.reserve(sites.size());
  ys.reserve(sites.size());
  for (const auto& p : sites) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  const auto ux = distinct(std::move(xs), tol);
  const auto uy = distinct(std::move(ys), tol);
  if (ux.size() * uy.size() != sites.size()) return std::nullopt;
  if (!uniform(ux, 1e-6 * scale) || !uniform(uy, 1e-6 * scale)) return std::nullopt;

  GridLayout g;
  g.nx = ux.size();
  g.ny = uy.size();
  g.x0 = ux.front();
  g.y0 = uy.front();
  g.hx = g.nx > 1 ? (ux.back() - ux.front()) / static_cast<double>(g.nx - 1) : 0.0;
  g.hy = g.ny > 1 ? (uy.back() - uy.front()) / static_cast<double>(g.ny - 1) : 0.0;
  constexpr auto npos = std::numeric_limits<std::size_t>::max();
  g.index.assign(g.nx * g.ny, npos);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto ix = g.nx > 1 ? static_cast<std::size_t>(std::lround((sites[i].x - g.x0) / g.hx)) : 0;
    const auto iy = g.ny > 1 ? static_cast<std::size_t>(std::lround((sites[i].y - g.y0) / g.hy)) : 0;
    auto& slot = g.index[ix + g.nx * iy];
    if (slot != npos) return std::nullopt;
    slot = i;
  }
  return g;
}

}  // namespace

double median_nearest_neighbor_distance(std::span<const Point2> sites) {
  const std::size_t n = sites.size();
  if (n < 2) return 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return sites[a].x < sites[b].x; });
  std::vector<double> nn(n, std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < n; ++r) {
    const Point2 p = sites[order[r]];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = r + 1; s < n; ++s) {
      const Point2 q = sites[order[s]];
      if (q.x - p.x >= best) break;
      best = std::min(best, distance(p, q));
    }
    for (std::size_t s = r; s-- > 0;) {
      const Point2 q = sites[order[s]];
      if (p.x - q.x >= best) break;
      best = std::min(best, distance(p, q));
    }
    nn[r] = best;
  }
  auto mid = nn.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(nn.begin(), mid, nn.end());
  return *mid;
}

SampleSet SampleSet::univariate(std::vector<double> xs, std::vector<double> values,
                                double mesh_h) {
  SampleSet s;
  s.dim_ = 1;
  s.sites_.reserve(xs.size());
  for (double x : xs) s.sites_.push_back({x, 0.0});
  s.values_ = std::move(values);
  s.finalize(mesh_h);
  return s;
}

SampleSet SampleSet::bivariate(std::vector<Point2> sites, std::vector<double> values,
                               double mesh_h) {
  SampleSet s;
  s.dim_ = 2;
  s.sites_ = std::move(sites);
  s.values_ = std::move(values);
  s.finalize(mesh_h);
  return s;
}

void SampleSet::finalize(double mesh_h) {
  if (sites_.size() != values_.size()) {
    throw std::invalid_argument("sample set: " + std::to_string(sites_.size()) +
                                " sites but " + std::to_string(values_.size()) + " values");
  }
  if (sites_.empty()) throw std::invalid_argument("sample set: no samples");
  domain_ = {sites_[0].x, sites_[0].x, sites_[0].y, sites_[0].y};
  for (const auto& p : sites_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw std::invalid_argument("sample set: non-finite site");
    }
    domain_.x0 = std::min(domain_.x0, p.x);
    domain_.x1 = std::max(domain_.x1, p.x);
    domain_.y0 = std::min(domain_.y0, p.y);
    domain_.y1 = std::max(domain_.y1, p.y);
  }
  layout_ = detect_layout(sites_, domain_);
  if (mesh_h > 0.0) {
    mesh_h_ = mesh_h;
  } else if (layout_ && dim_ == 2 && layout_->nx > 1 && layout_->ny > 1) {
    mesh_h_ = std::min(layout_->hx, layout_->hy);
  } else if (layout_ && layout_->nx > 1) {
    mesh_h_ = layout_->hx;
  } else {
    mesh_h_ = median_nearest_neighbor_distance(sites_);
  }
  if (!(mesh_h_ > 0.0)) throw std::invalid_argument("sample set: mesh size must be positive");
}

std::vector<double> SampleSet::xs() const {
  std::vector<double> out;
  out.reserve(sites_.size());
  for (const auto& p : sites_) out.push_back(p.x);
  return out;
}

SampleSet SampleSet::with_values(std::vector<double> values) const {
  SampleSet s = *this;
  if (values.size() != sites_.size()) {
    throw std::invalid_argument("sample set: value count does not match site count");
  }
  s.values_ = std::move(values);
  return s;
}

SampleSet SampleSet::subset(std::span<const std::size_t> indices) const {
  std::vector<Point2> sites;
  std::vector<double> values;
  sites.reserve(indices.size());
  values.reserve(indices.size());
  for (auto i : indices) {
    sites.push_back(sites_.at(i));
    values.push_back(values_.at(i));
  }
  SampleSet s;
  s.dim_ = dim_;
  s.sites_ = std::move(sites);
  s.values_ = std::move(values);
  s.finalize(mesh_h_);
  return s;
}

}  // namespace pws
