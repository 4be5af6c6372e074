#include "pws/spline.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace pws {

namespace {

std::string fmt_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Hermite form of the cubic on [t_s, t_s + delta] with end values y0, y1 and
// end slopes m0, m1.
Cubic hermite_to_cubic(double y0, double y1, double m0, double m1, double delta) {
  const double secant = (y1 - y0) / delta;
  return {y0, m0, (3.0 * secant - 2.0 * m0 - m1) / delta, (m0 + m1 - 2.0 * secant) / (delta * delta)};
}

// Lagrange basis polynomial j through nodes (given relative to the segment's
// left knot), expanded in powers of u.
Cubic lagrange_piece(const std::vector<double>& nodes, std::size_t j) {
  Cubic poly{1.0, 0.0, 0.0, 0.0};
  double denom = 1.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i == j) continue;
    // poly *= (u - nodes[i])
    Cubic next{0.0, 0.0, 0.0, 0.0};
    for (std::size_t p = 0; p < 3; ++p) {
      next[p + 1] += poly[p];
      next[p] -= nodes[i] * poly[p];
    }
    poly = next;
    denom *= nodes[j] - nodes[i];
  }
  for (auto& c : poly) c /= denom;
  return poly;
}

std::vector<Cubic> build_cardinal_pieces(std::size_t k, double delta) {
  const std::size_t segs = k - 1;
  std::vector<Cubic> pieces(segs * k);
  if (k <= 3) {
    for (std::size_t s = 0; s < segs; ++s) {
      std::vector<double> nodes(k);
      for (std::size_t i = 0; i < k; ++i) {
        nodes[i] = (static_cast<double>(i) - static_cast<double>(s)) * delta;
      }
      for (std::size_t j = 0; j < k; ++j) pieces[s * k + j] = lagrange_piece(nodes, j);
    }
    return pieces;
  }

  // Slopes m solve M m = R y: C2 continuity at interior knots plus third
  // derivative continuity across t_1 and t_{k-2}.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  const auto n = static_cast<Eigen::Index>(k);
  m(0, 0) = 1.0;
  m(0, 2) = -1.0;
  r(0, 0) = -2.0 / delta;
  r(0, 1) = 4.0 / delta;
  r(0, 2) = -2.0 / delta;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    m(i, i - 1) = 1.0;
    m(i, i) = 4.0;
    m(i, i + 1) = 1.0;
    r(i, i - 1) = -3.0 / delta;
    r(i, i + 1) = 3.0 / delta;
  }
  m(n - 1, n - 3) = 1.0;
  m(n - 1, n - 1) = -1.0;
  r(n - 1, n - 3) = -2.0 / delta;
  r(n - 1, n - 2) = 4.0 / delta;
  r(n - 1, n - 1) = -2.0 / delta;
  const Eigen::MatrixXd slopes = m.partialPivLu().solve(r);

  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t s = 0; s < segs; ++s) {
      const double y0 = (s == j) ? 1.0 : 0.0;
      const double y1 = (s + 1 == j) ? 1.0 : 0.0;
      const auto si = static_cast<Eigen::Index>(s);
      const auto ji = static_cast<Eigen::Index>(j);
      pieces[s * k + j] = hermite_to_cubic(y0, y1, slopes(si, ji), slopes(si + 1, ji), delta);
    }
  }
  return pieces;
}

}  // namespace

KnotGrid1D::KnotGrid1D(double a, double b, double delta) : a_(a), b_(b), delta_(delta), k_(0) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
    throw std::invalid_argument("knot grid: need a < b, got a=" + fmt_real(a) + " b=" + fmt_real(b));
  }
  if (!std::isfinite(delta) || !(delta > 0.0)) {
    throw std::invalid_argument("knot grid: knot spacing must be positive, got " + fmt_real(delta));
  }
  const double ratio = (b - a) / delta;
  const double residual = ratio - std::round(ratio);
  if (std::abs(residual) > 1e-9 * std::max(1.0, std::abs(ratio))) {
    throw std::invalid_argument("knot grid: span " + fmt_real(b - a) + " is not a multiple of " +
                                fmt_real(delta) + " (residual " + fmt_real(residual) + ")");
  }
  k_ = static_cast<std::size_t>(std::llround(ratio)) + 1;
  if (k_ < 2) throw std::invalid_argument("knot grid: fewer than two knots");
  pieces_ = std::make_shared<const std::vector<Cubic>>(build_cardinal_pieces(k_, delta_));
}

double KnotGrid1D::knot(std::size_t j) const {
  if (j + 1 == k_) return b_;
  return a_ + static_cast<double>(j) * delta_;
}

std::vector<double> KnotGrid1D::knots() const {
  std::vector<double> t(k_);
  for (std::size_t j = 0; j < k_; ++j) t[j] = knot(j);
  return t;
}

bool KnotGrid1D::contains(double x) const {
  const double tol = 1e-10 * (b_ - a_);
  return x >= a_ - tol && x <= b_ + tol;
}

std::size_t KnotGrid1D::locate(double x) const {
  if (!contains(x)) {
    throw DomainError("spline: x=" + fmt_real(x) + " outside [" + fmt_real(a_) + ", " + fmt_real(b_) + "]");
  }
  const double pos = std::floor((x - a_) / delta_);
  if (pos <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(pos), k_ - 2);
}

double KnotGrid1D::basis(std::size_t j, double x) const {
  if (j >= k_) throw std::out_of_range("knot grid: basis index out of range");
  const std::size_t s = locate(x);
  return eval_cubic(piece(s, j), x - knot(s));
}

void KnotGrid1D::basis_values(double x, std::span<double> out) const {
  const std::size_t s = locate(x);
  const double u = x - knot(s);
  for (std::size_t j = 0; j < k_; ++j) out[j] = eval_cubic(piece(s, j), u);
}

KnotGrid2D make_knot_grid_2d(const Rect& rect, double delta) {
  return {KnotGrid1D(rect.x0, rect.x1, delta), KnotGrid1D(rect.y0, rect.y1, delta)};
}

Spline1D::Spline1D(KnotGrid1D grid, std::vector<double> coeffs)
    : grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
  const std::size_t k = grid_.size();
  if (coeffs_.size() != k) {
    throw std::invalid_argument("spline: expected " + std::to_string(k) + " coefficients, got " +
                                std::to_string(coeffs_.size()));
  }
  pieces_.assign(grid_.segment_count(), Cubic{0.0, 0.0, 0.0, 0.0});
  for (std::size_t s = 0; s < pieces_.size(); ++s) {
    for (std::size_t j = 0; j < k; ++j) {
      const Cubic& b = grid_.piece(s, j);
      for (std::size_t p = 0; p < 4; ++p) pieces_[s][p] += coeffs_[j] * b[p];
    }
  }
}

double Spline1D::operator()(double x) const {
  const std::size_t s = grid_.locate(x);
  return eval_cubic(pieces_[s], x - grid_.knot(s));
}

Spline2D::Spline2D(KnotGrid2D grid, Eigen::MatrixXd coeffs)
    : grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
  if (static_cast<std::size_t>(coeffs_.rows()) != grid_.x.size() ||
      static_cast<std::size_t>(coeffs_.cols()) != grid_.y.size()) {
    throw std::invalid_argument("spline: coefficient matrix is " + std::to_string(coeffs_.rows()) +
                                "x" + std::to_string(coeffs_.cols()) + ", grid needs " +
                                std::to_string(grid_.x.size()) + "x" + std::to_string(grid_.y.size()));
  }
  build_cells();
}

Spline2D::Spline2D(KnotGrid2D grid, std::span<const double> flat) : grid_(std::move(grid)) {
  const std::size_t kx = grid_.x.size();
  const std::size_t ky = grid_.y.size();
  if (flat.size() != kx * ky) {
    throw std::invalid_argument("spline: expected " + std::to_string(kx * ky) +
                                " coefficients, got " + std::to_string(flat.size()));
  }
  coeffs_.resize(static_cast<Eigen::Index>(kx), static_cast<Eigen::Index>(ky));
  for (std::size_t i = 0; i < kx; ++i) {
    for (std::size_t j = 0; j < ky; ++j) {
      coeffs_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[i * ky + j];
    }
  }
  build_cells();
}

std::vector<double> Spline2D::flat_coeffs() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(coeffs_.size()));
  for (Eigen::Index i = 0; i < coeffs_.rows(); ++i) {
    for (Eigen::Index j = 0; j < coeffs_.cols(); ++j) out.push_back(coeffs_(i, j));
  }
  return out;
}

void Spline2D::build_cells() {
  const std::size_t kx = grid_.x.size();
  const std::size_t ky = grid_.y.size();
  const std::size_t sx_count = grid_.x.segment_count();
  const std::size_t sy_count = grid_.y.segment_count();
  cells_.assign(sx_count * sy_count, {});
  Eigen::MatrixXd ax(static_cast<Eigen::Index>(kx), 4);
  Eigen::MatrixXd ay(static_cast<Eigen::Index>(ky), 4);
  for (std::size_t sy = 0; sy < sy_count; ++sy) {
    for (std::size_t j = 0; j < ky; ++j) {
      for (std::size_t b = 0; b < 4; ++b) {
        ay(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b)) = grid_.y.piece(sy, j)[b];
      }
    }
    const Eigen::MatrixXd t = coeffs_ * ay;  // kx x 4
    for (std::size_t sx = 0; sx < sx_count; ++sx) {
      for (std::size_t i = 0; i < kx; ++i) {
        for (std::size_t a = 0; a < 4; ++a) {
          ax(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = grid_.x.piece(sx, i)[a];
        }
      }
      const Eigen::Matrix4d p = ax.transpose() * t;
      auto& cell = cells_[sx * sy_count + sy];
      for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
          cell[a * 4 + b] = p(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
      }
    }
  }
}

double Spline2D::operator()(Point2 p) const {
  const std::size_t sx = grid_.x.locate(p.x);
  const std::size_t sy = grid_.y.locate(p.y);
  const auto& c = cells_[sx * grid_.y.segment_count() + sy];
  const double u = p.x - grid_.x.knot(sx);
  const double v = p.y - grid_.y.knot(sy);
  double acc = 0.0;
  for (std::size_t a = 4; a-- > 0;) {
    const double row = ((c[a * 4 + 3] * v + c[a * 4 + 2]) * v + c[a * 4 + 1]) * v + c[a * 4];
    acc = acc * u + row;
  }
  return acc;
}

Eigen::MatrixXd design_matrix(const KnotGrid1D& grid, std::span<const double> xs) {
  const auto k = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd a(static_cast<Eigen::Index>(xs.size()), k);
  std::vector<double> row(grid.size());
  for (std::size_t r = 0; r < xs.size(); ++r) {
    grid.basis_values(xs[r], row);
    for (Eigen::Index j = 0; j < k; ++j) a(static_cast<Eigen::Index>(r), j) = row[static_cast<std::size_t>(j)];
  }
  return a;
}

Eigen::MatrixXd design_matrix(const KnotGrid2D& grid, std::span<const Point2> pts) {
  const std::size_t kx = grid.x.size();
  const std::size_t ky = grid.y.size();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(kx * ky));
  std::vector<double> bx(kx), by(ky);
  for (std::size_t r = 0; r < pts.size(); ++r) {
    grid.x.basis_values(pts[r].x, bx);
    grid.y.basis_values(pts[r].y, by);
    for (std::size_t i = 0; i < kx; ++i) {
      for (std::size_t j = 0; j < ky; ++j) {
        a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i * ky + j)) = bx[i] * by[j];
      }
    }
  }
  return a;
}

LeastSquaresSolution solve_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                         bool minimum_norm, double truncation) {
  LeastSquaresSolution out;
  if (a.rows() < a.cols() || a.cols() == 0) return out;
  const auto n = a.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  const unsigned vectors = minimum_norm ? Eigen::ComputeThinU | Eigen::ComputeThinV : 0u;
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(r, vectors);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(n - 1);
  out.rcond = smax > 0.0 ? smin / smax : 0.0;
  out.well_posed = std::isfinite(out.rcond) && out.rcond > kWellPosedRcond;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sv(i) > truncation * smax) ++out.rank;
  }
  const bool truncate = minimum_norm && !(out.rcond > truncation);
  if (out.well_posed && !truncate) {
    out.coeffs = qr.solve(b);
  } else if (truncate && out.rank > 0 && std::isfinite(smax)) {
    const Eigen::VectorXd qtb = (qr.householderQ().transpose() * b).head(n);
    const auto k = static_cast<Eigen::Index>(out.rank);
    const Eigen::VectorXd w = (svd.matrixU().leftCols(k).transpose() * qtb).cwiseQuotient(sv.head(k));
    out.coeffs = svd.matrixV().leftCols(k) * w;
  } else {
    return out;
  }
  out.residual_sse = (a * out.coeffs - b).squaredNorm();
  return out;
}

namespace {

template <class S, class G, class Sites>
SplineFit<S> fit_impl(const SampleSet& samples, const G& grid, const Sites& sites, std::size_t ncoef) {
  if (samples.size() < ncoef) {
    throw IllPosedError("least squares: " + std::to_string(samples.size()) +
                            " samples for " + std::to_string(ncoef) + " coefficients",
                        0.0);
  }
  const Eigen::MatrixXd a = design_matrix(grid, sites);
  const auto vals = samples.values();
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  const auto sol = solve_least_squares(a, b);
  if (!sol.well_posed) {
    throw IllPosedError("least squares: rank-deficient design (relative singular value " +
                            fmt_real(sol.rcond) + ")",
                        sol.rcond);
  }
  std::vector<double> c(sol.coeffs.data(), sol.coeffs.data() + sol.coeffs.size());
  return {S(grid, std::move(c)), std::sqrt(sol.residual_sse / static_cast<double>(samples.size())),
          sol.rcond, true};
}

}  // namespace

SplineFit<Spline1D> fit_spline_lsq(const SampleSet& samples, const KnotGrid1D& grid) {
  return fit_impl<Spline1D>(samples, grid, samples.xs(), grid.size());
}

SplineFit<Spline2D> fit_spline_lsq(const SampleSet& samples, const KnotGrid2D& grid) {
  return fit_impl<Spline2D>(samples, grid, samples.sites(), grid.size());
}

}  // namespace pws
