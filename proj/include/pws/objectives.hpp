#pragma once

// Cost functionals for the univariate min/max/plus-part compositions and the
// bivariate max-of-three, jump (sign-segmented) and three-region problems.
//
// Parameter layout: the coefficient blocks of the unknown splines are
// concatenated, each block in the spline's flat order (see Spline2D).

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pws/geometry.hpp"
#include "pws/samples.hpp"
#include "pws/spline.hpp"

namespace pws {

enum class ProblemKind { univ_min, univ_max, univ_plus_part, a_max3, b_jump, c_three_corner };

/// Which samples feed the inner fits of the jump problem: all samples by sign
/// (full), samples farther than h from the zero set (restricted), or the
/// restricted samples plus locally extrapolated values in the band (extended).
enum class JumpVariant { full, restricted, extended };

struct ProblemSpec {
  ProblemKind kind;
  SampleSet samples;
  std::variant<KnotGrid1D, KnotGrid2D> grid;
  JumpVariant variant = JumpVariant::restricted;
  /// Exclusion distance for the restricted sets, in units of samples.mesh_h.
  double distance_multiplier = 1.0;
  /// Problem C: top-two gap at or below which a sample is excluded.
  double band = 0.0;
  /// Problem C: drop grid samples whose 4-neighbourhood changes label.
  bool exclude_label_boundaries = true;
  std::size_t extension_neighbors = 16;
  /// Jump problem: report the inner least-squares value instead of the
  /// sign-segmented residual over all samples.
  bool outer_uses_fit_sets = false;
  /// Jump and three-region problems: accept rank-deficient inner fits through
  /// their minimum-norm solution instead of returning the penalty. Needed when
  /// a side region does not determine every spline coefficient (grids with
  /// more than four knots per axis).
  bool minimum_norm_fits = false;
  /// Relative singular-value cutoff of the minimum-norm fits. Raise it for
  /// noisy data so that barely determined directions do not amplify noise.
  double fit_truncation = kWellPosedRcond;
};

struct ObjectiveValue {
  double value = 0.0;
  /// g_plus, g_minus (jump) or g_1, g_2, g_3 (three-region); empty when ill-posed.
  std::vector<Spline2D> inner_fits;
  Segmentation segmentation;
  /// Zero set of g_gamma (restricted / extended jump variants only).
  std::vector<Polyline> zero_set;
  bool well_posed = true;
  /// False when some inner fit was rank-deficient (minimum_norm_fits only).
  bool full_rank = true;
};

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& name);
std::string to_string(JumpVariant variant);
JumpVariant jump_variant_from_string(const std::string& name);

/// A validated problem with its design matrix precomputed. Evaluation is
/// const and allocates its own workspaces, so one Problem can be shared
/// between threads.
class Problem {
 public:
  explicit Problem(ProblemSpec spec);

  const ProblemSpec& spec() const { return spec_; }
  const SampleSet& samples() const { return spec_.samples; }
  ProblemKind kind() const { return spec_.kind; }
  /// Number of unknowns seen by the optimizer.
  std::size_t dimension() const;
  /// Coefficients of one spline on the problem grid.
  std::size_t block_size() const { return block_; }
  /// Number of spline blocks in the parameter vector.
  std::size_t block_count() const;
  const Eigen::MatrixXd& design() const { return design_; }
  const KnotGrid2D& grid2d() const;
  const KnotGrid1D& grid1d() const;
  /// Value returned for ill-posed inner fits: 10 * sum f_i^2.
  double penalty() const { return penalty_; }

  /// Objective value only (optimizer inner loop).
  double value(std::span<const double> params) const;
  /// Objective value with inner fits and segmentation.
  ObjectiveValue evaluate(std::span<const double> params) const;

  /// Values of every parameter block at every sample (N x blocks).
  Eigen::MatrixXd block_values(std::span<const double> params) const;

 private:
  void check_length(std::span<const double> params) const;
  ObjectiveValue jump(std::span<const double> params, bool details) const;
  ObjectiveValue three_region(std::span<const double> params, bool details) const;

  ProblemSpec spec_;
  Eigen::MatrixXd design_;
  Eigen::VectorXd f_;
  std::size_t block_ = 0;
  double penalty_ = 0.0;
};

/// (t)_+ = max(t, 0).
inline double plus_part(double t) { return t > 0.0 ? t : 0.0; }

/// Sum of squared residuals of min(g1, g2) (max for ProblemKind::univ_max).
double f1_min(std::span<const double> params, const Problem& problem);
/// Sum of squared residuals of g1 - (g2)_+.
double f2_pluspart(std::span<const double> params, const Problem& problem);
/// Sum of squared residuals of max(g1, g2, g3).
double fa_max3(std::span<const double> params, const Problem& problem);
/// Jump problem: params are the coefficients of g_gamma.
ObjectiveValue fb(std::span<const double> params, const Problem& problem);
/// Three-region problem: params are the label splines h_1, h_2, h_3.
ObjectiveValue fc(std::span<const double> params, const Problem& problem);

struct ExtensionResult {
  std::vector<double> values;
  /// Total degree of the local polynomial used per target (3 unless degraded).
  std::vector<int> degree;
  bool degraded = false;
};

/// Predicts values at `targets` from the least-squares total-degree-3
/// polynomial through the `neighborhood` nearest side samples of each target.
/// A rank-deficient local fit first widens the neighbourhood (up to 8x), then
/// falls back to lower degrees.
/// Throws std::invalid_argument when `side` is empty.
ExtensionResult extend_data(std::span<const Point2> side_sites, std::span<const double> side_values,
                            std::span<const Point2> targets, std::size_t neighborhood = 16);
ExtensionResult extend_data(const SampleSet& side, std::span<const Point2> targets,
                            std::size_t neighborhood = 16);

}  // namespace pws
