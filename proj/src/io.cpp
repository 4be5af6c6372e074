#include "pws/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace pws {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, std::size_t line) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || cell.empty()) {
    throw IoError("line " + std::to_string(line) + ": not a number: '" + cell + "'");
  }
  return v;
}

std::size_t lattice_count(double width, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid: step must be positive");
  return static_cast<std::size_t>(std::ceil(width / step - 1e-9)) + 1;
}

double lattice_coord(double a, double width, std::size_t i, std::size_t n) {
  if (n < 2) return a;
  if (i + 1 == n) return a + width;
  return a + width * static_cast<double>(i) / static_cast<double>(n - 1);
}

}  // namespace

std::vector<double> lattice(double a, double b, double step) {
  const std::size_t n = lattice_count(b - a, step);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lattice_coord(a, b - a, i, n);
  return out;
}

std::vector<Point2> lattice(const Rect& rect, double step) {
  const auto xs = lattice(rect.x0, rect.x1, step);
  const auto ys = lattice(rect.y0, rect.y1, step);
  std::vector<Point2> out;
  out.reserve(xs.size() * ys.size());
  for (double y : ys) {
    for (double x : xs) out.push_back({x, y});
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw IoError("format_double: conversion failed");
  return std::string(buf, ptr);
}

void write_samples_csv(std::ostream& os, const SampleSet& samples) {
  const bool two = samples.dim() == 2;
  os << (two ? "x,y,f\n" : "x,f\n");
  const auto sites = samples.sites();
  const auto values = samples.values();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    os << format_double(sites[i].x) << ',';
    if (two) os << format_double(sites[i].y) << ',';
    os << format_double(values[i]) << '\n';
  }
}

std::string samples_csv(const SampleSet& samples) {
  std::ostringstream os;
  write_samples_csv(os, samples);
  return os.str();
}

SampleSet read_samples_csv(std::istream& is, double mesh_h) {
  std::string line;
  std::size_t n = 0;
  std::string header;
  while (header.empty() && std::getline(is, line)) {
    ++n;
    header = trim(line);
  }
  const auto cols = split(header);
  int dim = 0;
  if (cols == std::vector<std::string>{"x", "f"}) dim = 1;
  if (cols == std::vector<std::string>{"x", "y", "f"}) dim = 2;
  if (dim == 0) throw IoError("samples: header must be 'x,f' or 'x,y,f'");
  std::vector<Point2> sites;
  std::vector<double> values;
  while (std::getline(is, line)) {
    ++n;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != static_cast<std::size_t>(dim + 1)) {
      throw IoError("line " + std::to_string(n) + ": expected " + std::to_string(dim + 1) + " columns");
    }
    const double x = parse_number(cells[0], n);
    const double y = dim == 2 ? parse_number(cells[1], n) : 0.0;
    sites.push_back({x, y});
    values.push_back(parse_number(cells.back(), n));
  }
  if (sites.empty()) throw IoError("samples: no rows");
  if (dim == 1) {
    std::vector<double> xs;
    xs.reserve(sites.size());
    for (const auto& p : sites) xs.push_back(p.x);
    return SampleSet::univariate(std::move(xs), std::move(values), mesh_h);
  }
  return SampleSet::bivariate(std::move(sites), std::move(values), mesh_h);
}

SampleSet read_samples_file(const std::string& path, double mesh_h) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return read_samples_csv(in, mesh_h);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::string polylines_csv(const std::vector<Polyline>& curves) {
  std::ostringstream os;
  os << "x,y\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    if (c > 0) os << '\n';
    const auto& v = curves[c].vertices;
    for (const auto& p : v) os << format_double(p.x) << ',' << format_double(p.y) << '\n';
    if (curves[c].closed && !v.empty()) os << format_double(v.front().x) << ',' << format_double(v.front().y) << '\n';
  }
  return os.str();
}

std::vector<Polyline> read_polylines_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || split(trim(line)) != std::vector<std::string>{"x", "y"}) {
    throw IoError("polylines: header must be 'x,y'");
  }
  std::vector<Polyline> out;
  Polyline cur;
  std::size_t n = 1;
  auto flush = [&] {
    if (cur.vertices.empty()) return;
    if (cur.vertices.size() > 2 && cur.vertices.front() == cur.vertices.back()) {
      cur.vertices.pop_back();
      cur.closed = true;
    }
    out.push_back(std::move(cur));
    cur = {};
  };
  while (std::getline(is, line)) {
    ++n;
    if (trim(line).empty()) {
      flush();
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != 2) throw IoError("line " + std::to_string(n) + ": expected 2 columns");
    cur.vertices.push_back({parse_number(cells[0], n), parse_number(cells[1], n)});
  }
  flush();
  return out;
}

std::string grid_csv(const Rect& rect, double step, const std::function<double(Point2)>& f) {
  const std::size_t nx = lattice_count(rect.width(), step);
  const std::size_t ny = lattice_count(rect.height(), step);
  std::ostringstream os;
  os << "x,y,value\n";
  for (std::size_t j = 0; j < ny; ++j) {
    const double y = lattice_coord(rect.y0, rect.height(), j, ny);
    for (std::size_t i = 0; i < nx; ++i) {
      const double x = lattice_coord(rect.x0, rect.width(), i, nx);
      const double v = f({x, y});
      if (std::isnan(v)) continue;
      os << format_double(x) << ',' << format_double(y) << ',' << format_double(v) << '\n';
    }
  }
  return os.str();
}

std::string line_csv(double a, double b, double step, const std::function<double(double)>& f) {
  const std::size_t n = lattice_count(b - a, step);
  std::ostringstream os;
  os << "x,value\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lattice_coord(a, b - a, i, n);
    os << format_double(x) << ',' << format_double(f(x)) << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const KnotGrid1D& grid) { return {grid.a(), grid.b(), grid.delta()}; }

KnotGrid1D knot_grid_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw IoError("knot grid: expected [a, b, delta]");
  return KnotGrid1D(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

nlohmann::json to_json(const Spline2D& s) {
  return {{"x", to_json(s.grid().x)}, {"y", to_json(s.grid().y)}, {"coeffs", s.flat_coeffs()}};
}

Spline2D spline2d_from_json(const nlohmann::json& j) {
  KnotGrid2D grid{knot_grid_from_json(j.at("x")), knot_grid_from_json(j.at("y"))};
  const auto c = j.at("coeffs").get<std::vector<double>>();
  if (c.size() != grid.size()) throw IoError("spline: coefficient count does not match the knot grid");
  return Spline2D(grid, std::span<const double>(c));
}

nlohmann::json to_json(const Rect& r) { return {r.x0, r.x1, r.y0, r.y1}; }

Rect rect_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw IoError("rectangle: expected [x0, x1, y0, y1]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out.flush()) throw IoError("write failed: " + path);
}

}  // namespace pws
