#pragma once

// Uniform-knot cardinal cubic splines (1D) and their tensor-product extension
// (2D), plus linear least-squares fitting in those spaces.
//
// The cardinal basis B_j satisfies B_j(t_i) = delta_ij, so a spline's
// coefficients are its values at the knots. For k >= 4 knots B_j is the
// not-a-knot cubic interpolant of the j-th unit vector; for k = 2 and k = 3
// it is the linear / quadratic Lagrange polynomial.

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "pws/point.hpp"
#include "pws/samples.hpp"

namespace pws {

/// Local cubic c0 + c1*u + c2*u^2 + c3*u^3 with u = x - (segment left knot).
using Cubic = std::array<double, 4>;

inline double eval_cubic(const Cubic& c, double u) {
  return ((c[3] * u + c[2]) * u + c[1]) * u + c[0];
}

class KnotGrid1D {
 public:
  /// Knots t_j = a + j*delta, j = 0..k-1. Throws std::invalid_argument when
  /// a >= b, delta <= 0, or (b - a) / delta is not an integer within 1e-9.
  KnotGrid1D(double a, double b, double delta);

  double a() const { return a_; }
  double b() const { return b_; }
  double delta() const { return delta_; }
  std::size_t size() const { return k_; }
  std::size_t segment_count() const { return k_ - 1; }
  double knot(std::size_t j) const;
  std::vector<double> knots() const;

  bool contains(double x) const;
  /// Segment s with t_s <= x <= t_{s+1}; throws DomainError outside [a, b].
  std::size_t locate(double x) const;

  /// Piece of basis function j on segment s.
  const Cubic& piece(std::size_t s, std::size_t j) const { return (*pieces_)[s * k_ + j]; }

  double basis(std::size_t j, double x) const;
  /// All k basis values at x.
  void basis_values(double x, std::span<double> out) const;

  friend bool operator==(const KnotGrid1D& l, const KnotGrid1D& r) {
    return l.a_ == r.a_ && l.b_ == r.b_ && l.delta_ == r.delta_;
  }

 private:
  double a_;
  double b_;
  double delta_;
  std::size_t k_;
  std::shared_ptr<const std::vector<Cubic>> pieces_;
};

struct KnotGrid2D {
  KnotGrid1D x;
  KnotGrid1D y;

  std::size_t size() const { return x.size() * y.size(); }
  Rect rect() const { return {x.a(), x.b(), y.a(), y.b()}; }
  bool contains(Point2 p) const { return x.contains(p.x) && y.contains(p.y); }

  friend bool operator==(const KnotGrid2D&, const KnotGrid2D&) = default;
};

/// Square knot lattice of spacing delta on a rectangle.
KnotGrid2D make_knot_grid_2d(const Rect& rect, double delta);

class Spline1D {
 public:
  Spline1D(KnotGrid1D grid, std::vector<double> coeffs);

  const KnotGrid1D& grid() const { return grid_; }
  std::span<const double> coeffs() const { return coeffs_; }

  /// Throws DomainError outside [a, b].
  double operator()(double x) const;

 private:
  KnotGrid1D grid_;
  std::vector<double> coeffs_;
  std::vector<Cubic> pieces_;
};

/// Tensor-product spline; coefficient (i, j) is the value at knot (x_i, y_j).
/// Flat coefficient vectors use index i * ky + j.
class Spline2D {
 public:
  Spline2D(KnotGrid2D grid, Eigen::MatrixXd coeffs);
  Spline2D(KnotGrid2D grid, std::span<const double> flat_coeffs);

  const KnotGrid2D& grid() const { return grid_; }
  const Eigen::MatrixXd& coeffs() const { return coeffs_; }
  std::vector<double> flat_coeffs() const;

  /// Throws DomainError outside the knot rectangle.
  double operator()(Point2 p) const;
  double operator()(double x, double y) const { return (*this)({x, y}); }

 private:
  void build_cells();

  KnotGrid2D grid_;
  Eigen::MatrixXd coeffs_;
  // Per cell (sx, sy): 4x4 monomial coefficients in (u, v), column-major.
  std::vector<std::array<double, 16>> cells_;
};

/// Row r holds the basis values at xs[r].
Eigen::MatrixXd design_matrix(const KnotGrid1D& grid, std::span<const double> xs);
/// Row r holds B_i(p.x) * B_j(p.y) at column i * ky + j.
Eigen::MatrixXd design_matrix(const KnotGrid2D& grid, std::span<const Point2> pts);

/// Relative singular-value threshold below which a design is ill-posed.
inline constexpr double kWellPosedRcond = 1e-8;

struct LeastSquaresSolution {
  Eigen::VectorXd coeffs;
  double residual_sse = 0.0;
  /// Smallest over largest singular value of the design (0 when rows < cols).
  double rcond = 0.0;
  bool well_posed = false;
  /// Number of singular values above truncation * largest.
  std::size_t rank = 0;
};

/// Minimizes ||a c - b||_2 through a Householder QR of `a`; never throws.
/// When the design is ill-posed the coefficients are left empty, unless
/// `minimum_norm` is set: then the minimum-norm solution over the numerical
/// range is returned whenever rcond <= truncation (singular values of R below
/// truncation * largest are dropped). Fewer rows than columns always leaves
/// the coefficients empty.
LeastSquaresSolution solve_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                         bool minimum_norm = false, double truncation = kWellPosedRcond);

class IllPosedError : public std::runtime_error {
 public:
  IllPosedError(const std::string& what, double rcond)
      : std::runtime_error(what), rcond_(rcond) {}
  double rcond() const { return rcond_; }

 private:
  double rcond_;
};

template <class S>
struct SplineFit {
  S spline;
  double rms = 0.0;
  double rcond = 0.0;
  bool well_posed = true;
};

/// Least-squares spline fits; throw IllPosedError for rank-deficient designs
/// and DomainError when a site lies outside the knot range.
SplineFit<Spline1D> fit_spline_lsq(const SampleSet& samples, const KnotGrid1D& grid);
SplineFit<Spline2D> fit_spline_lsq(const SampleSet& samples, const KnotGrid2D& grid);

}  // namespace pws
