#pragma once

// Merging two overlapping patch approximations with a C1 weight along one axis.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "pws/geometry.hpp"
#include "pws/spline.hpp"

namespace pws {

enum class PatchKind { a, b };
enum class Axis { x, y };

/// One patch fit. Kind A holds the triplet g1, g2, g3; kind B holds
/// g_gamma, g_plus, g_minus.
struct PatchApprox {
  Rect domain;
  PatchKind kind = PatchKind::a;
  std::vector<Spline2D> splines;
  /// Sample mesh of the patch data (used for the near-curve probe band).
  double mesh_h = 0.0;

  /// The patch's own approximation: max of the triplet (A) or g_plus / g_minus
  /// by the sign of g_gamma (B).
  double operator()(Point2 p) const;
};

/// Throws std::invalid_argument when the splines do not match the kind or
/// their knot rectangles do not cover the domain.
void validate(const PatchApprox& patch);

using Permutation = std::array<int, 3>;

/// perm[i] is the spline of t2 paired with spline i of t1: the permutation
/// minimizing the summed squared differences on a probe grid of about
/// probe_count points in the overlap. Ties keep the first permutation in
/// lexicographic order.
Permutation match_pairs(std::span<const Spline2D> t1, std::span<const Spline2D> t2, const Rect& overlap,
                        std::size_t probe_count = 400);

/// 0 for t <= 0, 3t^2 - 2t^3 on (0, 1), 1 for t >= 1.
double c1_weight(double t);

struct LevelScale {
  double alpha = 1.0;
  /// alpha < 0: the two zero curves are oriented oppositely.
  bool flipped = false;
  std::size_t probes = 0;
};

/// Least-squares alpha with alpha * g_gamma1 ~ g_gamma2 on overlap probes
/// within 2 * mesh_h of either zero curve. Throws std::invalid_argument when
/// no probe qualifies.
LevelScale scale_level_set(const PatchApprox& p1, const PatchApprox& p2, const Rect& overlap);

/// Blend of two patches along `axis`; p1 is the patch on the low side of the
/// overlap. Outside the overlap each patch is returned unchanged.
class Blend {
 public:
  Blend(PatchApprox p1, PatchApprox p2, Axis axis);

  double operator()(Point2 p) const;
  /// Blended pair i (A: g~_i; B: 0 = g_gamma, 1 = g_plus, 2 = g_minus).
  double pair_value(std::size_t i, Point2 p) const;
  /// Overlap coordinate: 0 on the p1 edge, 1 on the p2 edge.
  double tau(Point2 p) const;

  const Rect& overlap() const { return overlap_; }
  /// A: spline of p2 paired with spline i of p1. B: identity.
  const Permutation& pairing() const { return perm_; }
  const LevelScale& scale() const { return scale_; }
  PatchKind kind() const { return p1_.kind; }

 private:
  double side1(std::size_t i, Point2 p) const;
  double side2(std::size_t i, Point2 p) const;

  PatchApprox p1_;
  PatchApprox p2_;
  Axis axis_;
  Rect overlap_;
  Permutation perm_{0, 1, 2};
  Permutation first_{0, 1, 2};
  LevelScale scale_;
};

/// Throws std::invalid_argument for an empty overlap or kinds other than A.
Blend blend_a(const PatchApprox& p1, const PatchApprox& p2, Axis axis);
/// As blend_a for kind B.
Blend blend_b(const PatchApprox& p1, const PatchApprox& p2, Axis axis);

}  // namespace pws
