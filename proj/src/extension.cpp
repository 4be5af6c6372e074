#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

#include "pws/objectives.hpp"

namespace pws {

namespace {

using Eigen::Index;

// Uniform bucket grid for k-nearest-neighbour queries.
class PointIndex {
 public:
  explicit PointIndex(std::span<const Point2> pts) : pts_(pts) {
    double x0 = pts[0].x, x1 = x0, y0 = pts[0].y, y1 = y0;
    for (const auto& p : pts) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    const double w = std::max(x1 - x0, y1 - y0);
    // About four points per cell for uniformly spread data.
    cell_ = w > 0.0 ? std::max(2.0 * std::sqrt((x1 - x0) * (y1 - y0) / static_cast<double>(pts.size())),
                               w / 1024.0)
                    : 1.0;
    x0_ = x0;
    y0_ = y0;
    nx_ = static_cast<long>((x1 - x0) / cell_) + 1;
    ny_ = static_cast<long>((y1 - y0) / cell_) + 1;
    buckets_.resize(static_cast<std::size_t>(nx_ * ny_));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      buckets_[static_cast<std::size_t>(clamp_x(pts[i].x) + nx_ * clamp_y(pts[i].y))].push_back(i);
    }
  }

  // Indices of the k nearest points, closest first.
  void nearest(Point2 p, std::size_t k, std::vector<std::pair<double, std::size_t>>& out) const {
    out.clear();
    k = std::min(k, pts_.size());
    const long cx = clamp_x(p.x), cy = clamp_y(p.y);
    // Distance from p to the outside of the searched block of cells.
    const double lx = std::min(p.x - (x0_ + cx * cell_), x0_ + (cx + 1) * cell_ - p.x);
    const double ly = std::min(p.y - (y0_ + cy * cell_), y0_ + (cy + 1) * cell_ - p.y);
    const double margin = std::max(0.0, std::min(lx, ly));
    const long max_ring = std::max({cx, nx_ - 1 - cx, cy, ny_ - 1 - cy});
    for (long ring = 0; ring <= max_ring; ++ring) {
      for (long iy = cy - ring; iy <= cy + ring; ++iy) {
        if (iy < 0 || iy >= ny_) continue;
        const bool edge_row = iy == cy - ring || iy == cy + ring;
        const long step = edge_row ? 1 : 2 * ring;
        for (long ix = cx - ring; ix <= cx + ring; ix += std::max(step, 1L)) {
          if (ix < 0 || ix >= nx_) continue;
          for (auto i : buckets_[static_cast<std::size_t>(ix + nx_ * iy)]) {
            out.emplace_back(distance(p, pts_[i]), i);
          }
        }
      }
      if (out.size() >= k) {
        std::nth_element(out.begin(), out.begin() + static_cast<long>(k) - 1, out.end());
        if (out[k - 1].first <= margin + static_cast<double>(ring) * cell_) break;
      }
    }
    std::sort(out.begin(), out.end());
    out.resize(k);
  }

 private:
  long clamp_x(double x) const {
    return std::clamp(static_cast<long>(std::floor((x - x0_) / cell_)), 0L, nx_ - 1);
  }
  long clamp_y(double y) const {
    return std::clamp(static_cast<long>(std::floor((y - y0_) / cell_)), 0L, ny_ - 1);
  }

  std::span<const Point2> pts_;
  double cell_ = 1.0;
  double x0_ = 0.0;
  double y0_ = 0.0;
  long nx_ = 1;
  long ny_ = 1;
  std::vector<std::vector<std::size_t>> buckets_;
};

std::size_t monomial_count(int degree) {
  return static_cast<std::size_t>((degree + 1) * (degree + 2) / 2);
}

// Monomials u^a v^b with a + b <= degree, the constant first.
void monomials(double u, double v, int degree, double* out) {
  double pu[4] = {1.0, u, u * u, u * u * u};
  double pv[4] = {1.0, v, v * v, v * v * v};
  std::size_t c = 0;
  for (int t = 0; t <= degree; ++t) {
    for (int a = t; a >= 0; --a) out[c++] = pu[a] * pv[t - a];
  }
}

// Constant term of the least-squares polynomial of the given degree through
// the neighbours, in coordinates centred at q and scaled by the farthest
// neighbour; empty when the local design is ill-posed.
std::optional<double> local_fit(std::span<const Point2> sites, std::span<const double> values,
                                const std::vector<std::pair<double, std::size_t>>& near, Point2 q,
                                int degree) {
  const auto m = static_cast<Index>(near.size());
  Eigen::VectorXd b(m);
  for (Index r = 0; r < m; ++r) b(r) = values[near[static_cast<std::size_t>(r)].second];
  if (degree == 0) return b.mean();
  const double scale = near.back().first > 0.0 ? near.back().first : 1.0;
  const auto ncol = static_cast<Index>(monomial_count(degree));
  using Design = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, Eigen::Dynamic, 10>;
  Design a(m, ncol);
  double row[10];
  for (Index r = 0; r < m; ++r) {
    const Point2 d = sites[near[static_cast<std::size_t>(r)].second] - q;
    monomials(d.x / scale, d.y / scale, degree, row);
    for (Index c = 0; c < ncol; ++c) a(r, c) = row[c];
  }
  Eigen::ColPivHouseholderQR<Design> qr(a);
  qr.setThreshold(kWellPosedRcond);
  if (qr.rank() < ncol) return std::nullopt;
  const Eigen::VectorXd coeffs = qr.solve(b);
  return coeffs(0);
}

}  // namespace

ExtensionResult extend_data(std::span<const Point2> side_sites, std::span<const double> side_values,
                            std::span<const Point2> targets, std::size_t neighborhood) {
  if (side_sites.empty()) throw std::invalid_argument("extend_data: empty side sample set");
  if (side_sites.size() != side_values.size()) {
    throw std::invalid_argument("extend_data: sites and values differ in length");
  }
  if (neighborhood == 0) throw std::invalid_argument("extend_data: neighborhood must be positive");

  ExtensionResult out;
  out.values.resize(targets.size());
  out.degree.resize(targets.size());
  const PointIndex index(side_sites);
  std::vector<std::pair<double, std::size_t>> near;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const Point2 q = targets[t];
    // Grid data next to a straight edge can put the nearest points on too few
    // rows for a cubic; widen the neighbourhood (up to 8x) before lowering
    // the degree.
    const std::size_t widest = std::min(side_sites.size(), 8 * neighborhood);
    std::size_t k = std::min(neighborhood, side_sites.size());
    int degree = 3;
    while (true) {
      index.nearest(q, k, near);
      degree = 3;
      while (degree > 0 && monomial_count(degree) > near.size()) --degree;
      const auto fit = local_fit(side_sites, side_values, near, q, degree);
      if (fit && degree == 3) {
        out.values[t] = *fit;
        break;
      }
      if (k < widest && near.size() >= monomial_count(3)) {
        k = std::min(2 * k, widest);
        continue;
      }
      if (fit) {
        out.values[t] = *fit;
        break;
      }
      for (--degree; degree >= 0; --degree) {
        if (const auto lower = local_fit(side_sites, side_values, near, q, degree)) {
          out.values[t] = *lower;
          break;
        }
      }
      break;
    }
    out.degree[t] = degree;
    if (degree < 3) out.degraded = true;
  }
  return out;
}

ExtensionResult extend_data(const SampleSet& side, std::span<const Point2> targets,
                            std::size_t neighborhood) {
  if (side.dim() != 2) throw std::invalid_argument("extend_data: side samples must be bivariate");
  return extend_data(side.sites(), side.values(), targets, neighborhood);
}

}  // namespace pws
