#pragma once

// CSV and JSON artifacts: samples, polylines, dense grids and spline blocks.

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pws/geometry.hpp"
#include "pws/samples.hpp"
#include "pws/spline.hpp"

namespace pws {

/// Unreadable or malformed input, failed writes.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// Header `x,f` (dim 1) or `x,y,f` (dim 2), one sample per row.
void write_samples_csv(std::ostream& os, const SampleSet& samples);
std::string samples_csv(const SampleSet& samples);
/// Throws IoError on a missing header, short rows or unparsable numbers.
SampleSet read_samples_csv(std::istream& is, double mesh_h = 0.0);
SampleSet read_samples_file(const std::string& path, double mesh_h = 0.0);

/// Header `x,y`; components separated by one blank line. A closed curve
/// repeats its first vertex at the end.
std::string polylines_csv(const std::vector<Polyline>& curves);
std::vector<Polyline> read_polylines_csv(std::istream& is);

/// Points a, a + w/(n-1), ..., b with the fewest n giving spacing at most
/// step; the last point is exactly b.
std::vector<double> lattice(double a, double b, double step);
/// Tensor lattice over rect, row-major in x.
std::vector<Point2> lattice(const Rect& rect, double step);

/// `x,y,value` rows on the lattice of `rect` with spacing at most `step`,
/// row-major in x. Points where `f` is undefined (returns NaN) are skipped.
std::string grid_csv(const Rect& rect, double step, const std::function<double(Point2)>& f);
/// `x,value` rows from a to b with spacing at most step.
std::string line_csv(double a, double b, double step, const std::function<double(double)>& f);

nlohmann::json to_json(const KnotGrid1D& grid);
KnotGrid1D knot_grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Spline2D& s);
Spline2D spline2d_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Rect& r);
Rect rect_from_json(const nlohmann::json& j);

std::string read_text_file(const std::string& path);
/// Writes the whole string; throws IoError on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace pws
