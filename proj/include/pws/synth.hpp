#pragma once

// Synthetic test data: univariate min/max composites, the max-of-sheets
// ridge, jumps across a curve and the three-sector jump.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "pws/geometry.hpp"
#include "pws/samples.hpp"
#include "pws/spline.hpp"

namespace pws {

struct NoiseSpec {
  double value_sigma = 0.0;
  /// Largest normal displacement of the jump curve.
  double curve_amplitude = 0.0;
  std::uint64_t seed = 1;
};

struct Monomial {
  double coeff = 0.0;
  int px = 0;
  int py = 0;
  friend bool operator==(const Monomial&, const Monomial&) = default;
};

struct Polynomial {
  std::vector<Monomial> terms;
  double operator()(Point2 p) const;
  friend bool operator==(const Polynomial&, const Polynomial&) = default;
};

/// A smooth piece: a polynomial in (x, y) or a univariate spline in x.
using Piece = std::variant<Polynomial, Spline1D>;
double eval_piece(const Piece& piece, Point2 p);

struct GroundTruth {
  std::function<double(Point2)> f;
  /// Region of a point: index into `pieces` (jump: kPlus / kMinus).
  std::function<int(Point2)> region;
  std::vector<Piece> pieces;
  std::vector<Polyline> curves;
  /// Univariate break points.
  std::vector<double> breaks;
  /// Univariate pieces that never cross: the composite is smooth.
  bool smooth_warning = false;
};

struct SyntheticData {
  SampleSet samples;
  GroundTruth truth;
};

enum class CompositeMode { min, max };

/// Samples a + i * step up to b of min/max(piece0, piece1).
SyntheticData gen_univariate(double a, double b, double step, CompositeMode mode,
                             const std::array<Piece, 2>& pieces, const NoiseSpec& noise = {});

/// Affine sheet z = a x + b y + c.
struct Sheet {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double operator()(Point2 p) const { return a * p.x + b * p.y + c; }
  friend bool operator==(const Sheet&, const Sheet&) = default;
};

/// Grid samples of max(sheets) over rect. Throws std::invalid_argument when
/// the sheets have no common point inside rect.
SyntheticData gen_three_corner_continuous(const Rect& rect, double mesh_h, const std::array<Sheet, 3>& sheets,
                                          const NoiseSpec& noise = {});

enum class CurveKind { sinusoid, circle, line };

/// sinusoid: y = amplitude * sin(frequency * x + phase) + offset, plus side above.
/// circle: centred at (cx, cy) with `radius`, plus side inside.
/// line: through (cx, cy) at `angle` (radians), plus side to the left.
struct CurveSpec {
  CurveKind kind = CurveKind::sinusoid;
  double amplitude = 0.7;
  double frequency = 1.2;
  double phase = 0.0;
  double offset = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double radius = 1.5;
  double angle = 0.0;
  friend bool operator==(const CurveSpec&, const CurveSpec&) = default;
};

std::string to_string(CurveKind kind);
CurveKind curve_kind_from_string(const std::string& name);

/// Grid samples of plus_piece on the plus side of the (optionally perturbed)
/// curve and minus_piece elsewhere. Throws std::invalid_argument when the
/// curve does not partition rect or leaves it through a corner.
SyntheticData gen_jump(const Rect& rect, double mesh_h, const CurveSpec& curve, const Piece& plus_piece,
                       const Piece& minus_piece, const NoiseSpec& noise = {});

/// Rays from `centre` at the given angles (radians) split rect into three
/// sectors; sector i lies counter-clockwise between ray i and the next ray.
SyntheticData gen_three_corner_jump(const Rect& rect, double mesh_h, const std::array<Piece, 3>& pieces,
                                    Point2 centre, const std::array<double, 3>& angles,
                                    const NoiseSpec& noise = {});

SampleSet add_value_noise(const SampleSet& samples, double sigma, std::uint64_t seed);

/// Sites of a uniform grid with spacing mesh_h covering rect, row-major in x.
std::vector<Point2> grid_sites(const Rect& rect, double mesh_h);

}  // namespace pws
