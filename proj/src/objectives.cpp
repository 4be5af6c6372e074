#include "pws/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pws {

namespace {

using Eigen::Index;

Eigen::VectorXd as_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

bool is_univariate(ProblemKind k) {
  return k == ProblemKind::univ_min || k == ProblemKind::univ_max || k == ProblemKind::univ_plus_part;
}

// Rows of `a` at `rows`, gathered column by column.
Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& a, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), a.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    const double* col = a.col(j).data();
    double* dst = out.col(j).data();
    for (std::size_t r = 0; r < rows.size(); ++r) dst[r] = col[rows[r]];
  }
  return out;
}

struct SideFit {
  Eigen::VectorXd coeffs;
  double sse = 0.0;
  bool well_posed = true;
  bool full_rank = true;
};

// Least squares on the given rows. An empty side is trivially well posed
// (zero spline, no residual); a non-empty side needs a full-rank design
// unless the minimum-norm solution is accepted.
SideFit fit_rows(const Eigen::MatrixXd& design, std::span<const std::size_t> rows,
                 const Eigen::VectorXd& rhs, bool minimum_norm, double truncation) {
  SideFit out;
  if (rows.empty()) {
    out.coeffs = Eigen::VectorXd::Zero(design.cols());
    return out;
  }
  const auto sol = solve_least_squares(gather_rows(design, rows), rhs, minimum_norm, truncation);
  if (sol.coeffs.size() == 0) {
    out.well_posed = false;
    return out;
  }
  out.full_rank = sol.well_posed;
  out.coeffs = sol.coeffs;
  out.sse = sol.residual_sse;
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, std::span<const std::size_t> rows) {
  Eigen::VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Index>(r)) = v(static_cast<Index>(rows[r]));
  return out;
}

}  // namespace

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::univ_min: return "univ_min";
    case ProblemKind::univ_max: return "univ_max";
    case ProblemKind::univ_plus_part: return "univ_plus_part";
    case ProblemKind::a_max3: return "a_max3";
    case ProblemKind::b_jump: return "b_jump";
    case ProblemKind::c_three_corner: return "c_three_corner";
  }
  return "unknown";
}

ProblemKind problem_kind_from_string(const std::string& name) {
  for (auto k : {ProblemKind::univ_min, ProblemKind::univ_max, ProblemKind::univ_plus_part,
                 ProblemKind::a_max3, ProblemKind::b_jump, ProblemKind::c_three_corner}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown problem kind '" + name + "'");
}

std::string to_string(JumpVariant variant) {
  switch (variant) {
    case JumpVariant::full: return "full";
    case JumpVariant::restricted: return "restricted";
    case JumpVariant::extended: return "extended";
  }
  return "unknown";
}

JumpVariant jump_variant_from_string(const std::string& name) {
  for (auto v : {JumpVariant::full, JumpVariant::restricted, JumpVariant::extended}) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("unknown jump variant '" + name + "'");
}

Problem::Problem(ProblemSpec spec) : spec_(std::move(spec)) {
  const auto& s = spec_.samples;
  if (s.size() == 0) throw std::invalid_argument("problem: empty sample set");
  const bool univ = is_univariate(spec_.kind);
  if (univ) {
    if (s.dim() != 1) throw std::invalid_argument("problem: univariate kind needs univariate samples");
    const auto* g = std::get_if<KnotGrid1D>(&spec_.grid);
    if (!g) throw std::invalid_argument("problem: univariate kind needs a 1D knot grid");
    for (double x : s.xs()) {
      if (!g->contains(x)) throw std::invalid_argument("problem: knot grid does not cover the samples");
    }
    design_ = design_matrix(*g, s.xs());
    block_ = g->size();
  } else {
    if (s.dim() != 2) throw std::invalid_argument("problem: bivariate kind needs bivariate samples");
    const auto* g = std::get_if<KnotGrid2D>(&spec_.grid);
    if (!g) throw std::invalid_argument("problem: bivariate kind needs a 2D knot grid");
    for (const auto& p : s.sites()) {
      if (!g->contains(p)) throw std::invalid_argument("problem: knot grid does not cover the samples");
    }
    design_ = design_matrix(*g, s.sites());
    block_ = g->size();
  }
  if (spec_.distance_multiplier < 0.0) throw std::invalid_argument("problem: negative distance multiplier");
  if (spec_.band < 0.0) throw std::invalid_argument("problem: negative band");
  if (spec_.extension_neighbors == 0) throw std::invalid_argument("problem: extension needs neighbours");
  f_ = as_vector(s.values());
  penalty_ = 10.0 * f_.squaredNorm();
}

std::size_t Problem::block_count() const {
  switch (spec_.kind) {
    case ProblemKind::b_jump: return 1;
    case ProblemKind::a_max3:
    case ProblemKind::c_three_corner: return 3;
    default: return 2;
  }
}

std::size_t Problem::dimension() const { return block_ * block_count(); }

const KnotGrid2D& Problem::grid2d() const {
  const auto* g = std::get_if<KnotGrid2D>(&spec_.grid);
  if (!g) throw std::logic_error("problem has no 2D grid");
  return *g;
}

const KnotGrid1D& Problem::grid1d() const {
  const auto* g = std::get_if<KnotGrid1D>(&spec_.grid);
  if (!g) throw std::logic_error("problem has no 1D grid");
  return *g;
}

void Problem::check_length(std::span<const double> params) const {
  if (params.size() != dimension()) {
    throw std::invalid_argument("objective: expected " + std::to_string(dimension()) +
                                " parameters, got " + std::to_string(params.size()));
  }
}

Eigen::MatrixXd Problem::block_values(std::span<const double> params) const {
  check_length(params);
  const Eigen::Map<const Eigen::MatrixXd> p(params.data(), static_cast<Index>(block_),
                                            static_cast<Index>(block_count()));
  return design_ * p;
}

double Problem::value(std::span<const double> params) const {
  switch (spec_.kind) {
    case ProblemKind::univ_min:
    case ProblemKind::univ_max: return f1_min(params, *this);
    case ProblemKind::univ_plus_part: return f2_pluspart(params, *this);
    case ProblemKind::a_max3: return fa_max3(params, *this);
    case ProblemKind::b_jump: return jump(params, false).value;
    case ProblemKind::c_three_corner: return three_region(params, false).value;
  }
  return 0.0;
}

ObjectiveValue Problem::evaluate(std::span<const double> params) const {
  switch (spec_.kind) {
    case ProblemKind::b_jump: return jump(params, true);
    case ProblemKind::c_three_corner: return three_region(params, true);
    default: {
      ObjectiveValue out;
      out.value = value(params);
      return out;
    }
  }
}

double f1_min(std::span<const double> params, const Problem& problem) {
  if (!is_univariate(problem.kind()) || problem.kind() == ProblemKind::univ_plus_part) {
    throw std::invalid_argument("f1_min: problem kind is " + to_string(problem.kind()));
  }
  const Eigen::MatrixXd g = problem.block_values(params);
  const auto f = problem.samples().values();
  const bool use_max = problem.kind() == ProblemKind::univ_max;
  double sum = 0.0;
  for (Index i = 0; i < g.rows(); ++i) {
    const double v = use_max ? std::max(g(i, 0), g(i, 1)) : std::min(g(i, 0), g(i, 1));
    const double r = f[static_cast<std::size_t>(i)] - v;
    sum += r * r;
  }
  return sum;
}

double f2_pluspart(std::span<const double> params, const Problem& problem) {
  if (!is_univariate(problem.kind())) {
    throw std::invalid_argument("f2_pluspart: problem kind is " + to_string(problem.kind()));
  }
  const Eigen::MatrixXd g = problem.block_values(params);
  const auto f = problem.samples().values();
  double sum = 0.0;
  for (Index i = 0; i < g.rows(); ++i) {
    const double r = f[static_cast<std::size_t>(i)] - (g(i, 0) - plus_part(g(i, 1)));
    sum += r * r;
  }
  return sum;
}

double fa_max3(std::span<const double> params, const Problem& problem) {
  if (problem.kind() != ProblemKind::a_max3) {
    throw std::invalid_argument("fa_max3: problem kind is " + to_string(problem.kind()));
  }
  const Eigen::MatrixXd g = problem.block_values(params);
  const auto f = problem.samples().values();
  double sum = 0.0;
  for (Index i = 0; i < g.rows(); ++i) {
    const double r = f[static_cast<std::size_t>(i)] - std::max({g(i, 0), g(i, 1), g(i, 2)});
    sum += r * r;
  }
  return sum;
}

ObjectiveValue fb(std::span<const double> params, const Problem& problem) {
  if (problem.kind() != ProblemKind::b_jump) {
    throw std::invalid_argument("fb: problem kind is " + to_string(problem.kind()));
  }
  return problem.evaluate(params);
}

ObjectiveValue fc(std::span<const double> params, const Problem& problem) {
  if (problem.kind() != ProblemKind::c_three_corner) {
    throw std::invalid_argument("fc: problem kind is " + to_string(problem.kind()));
  }
  return problem.evaluate(params);
}

ObjectiveValue Problem::jump(std::span<const double> params, bool details) const {
  check_length(params);
  const auto& s = spec_.samples;
  const auto sites = s.sites();
  const Eigen::VectorXd g = design_ * as_vector(params);
  const std::span<const double> gs(g.data(), static_cast<std::size_t>(g.size()));

  ObjectiveValue out;
  if (spec_.variant == JumpVariant::full) {
    out.segmentation = classify_restricted(sites, gs, {}, 0.0);
  } else {
    const Spline2D gamma(grid2d(), params);
    const double res = std::min(s.mesh_h() / 2.0, std::min(grid2d().x.delta(), grid2d().y.delta()) / 4.0);
    out.zero_set = extract_zero_set(gamma, s.domain(), res);
    out.segmentation = classify_restricted(sites, gs, out.zero_set, spec_.distance_multiplier * s.mesh_h());
  }
  const auto plus = out.segmentation.indices(kPlus);
  const auto minus = out.segmentation.indices(kMinus);

  SideFit fits[2];
  if (spec_.variant == JumpVariant::extended) {
    const auto band = out.segmentation.indices(Segmentation::excluded);
    std::vector<Point2> targets;
    targets.reserve(band.size());
    for (auto i : band) targets.push_back(sites[i]);
    const std::span<const std::size_t> sides[2] = {plus, minus};
    for (int k = 0; k < 2; ++k) {
      const auto& side = sides[k];
      if (side.empty()) {
        fits[k] = fit_rows(design_, {}, {}, false, kWellPosedRcond);
        continue;
      }
      std::vector<std::size_t> rows(side.begin(), side.end());
      rows.insert(rows.end(), band.begin(), band.end());
      Eigen::VectorXd rhs(static_cast<Index>(rows.size()));
      std::vector<Point2> side_sites;
      std::vector<double> side_values;
      side_sites.reserve(side.size());
      side_values.reserve(side.size());
      for (std::size_t r = 0; r < side.size(); ++r) {
        side_sites.push_back(sites[side[r]]);
        side_values.push_back(f_(static_cast<Index>(side[r])));
        rhs(static_cast<Index>(r)) = side_values.back();
      }
      if (!targets.empty()) {
        const auto ext = extend_data(side_sites, side_values, targets, spec_.extension_neighbors);
        for (std::size_t t = 0; t < targets.size(); ++t) {
          rhs(static_cast<Index>(side.size() + t)) = ext.values[t];
        }
      }
      fits[k] = fit_rows(design_, rows, rhs, spec_.minimum_norm_fits, spec_.fit_truncation);
    }
  } else {
    fits[0] = fit_rows(design_, plus, gather(f_, plus), spec_.minimum_norm_fits, spec_.fit_truncation);
    fits[1] = fit_rows(design_, minus, gather(f_, minus), spec_.minimum_norm_fits, spec_.fit_truncation);
  }

  if (!fits[0].well_posed || !fits[1].well_posed) {
    out.value = penalty_;
    out.well_posed = false;
    return out;
  }

  out.full_rank = fits[0].full_rank && fits[1].full_rank;
  if (spec_.outer_uses_fit_sets) {
    out.value = fits[0].sse + fits[1].sse;
  } else {
    const Eigen::VectorXd vp = design_ * fits[0].coeffs;
    const Eigen::VectorXd vm = design_ * fits[1].coeffs;
    double sum = 0.0;
    for (Index i = 0; i < g.size(); ++i) {
      double r = 0.0;
      if (g(i) > 0.0) {
        r = f_(i) - vp(i);
      } else if (g(i) < 0.0) {
        r = f_(i) - vm(i);
      }
      sum += r * r;
    }
    out.value = sum;
  }
  if (details) {
    for (const auto& fit : fits) {
      out.inner_fits.emplace_back(grid2d(), std::span<const double>(fit.coeffs.data(), block_));
    }
  }
  return out;
}

ObjectiveValue Problem::three_region(std::span<const double> params, bool details) const {
  const Eigen::MatrixXd h = block_values(params);
  const auto n = static_cast<std::size_t>(h.rows());
  std::span<const double> cols[3];
  for (int k = 0; k < 3; ++k) cols[k] = std::span<const double>(h.col(k).data(), n);

  ObjectiveValue out;
  out.segmentation = segment_by_max(spec_.samples, cols[0], cols[1], cols[2],
                                    {spec_.band, spec_.exclude_label_boundaries});
  SideFit fits[3];
  for (int k = 0; k < 3; ++k) {
    const auto rows = out.segmentation.indices(k);
    fits[k] = fit_rows(design_, rows, gather(f_, rows), spec_.minimum_norm_fits, spec_.fit_truncation);
    if (!fits[k].well_posed) {
      out.value = penalty_;
      out.well_posed = false;
      return out;
    }
    out.value += fits[k].sse;
    out.full_rank = out.full_rank && fits[k].full_rank;
  }
  if (details) {
    for (const auto& fit : fits) {
      out.inner_fits.emplace_back(grid2d(), std::span<const double>(fit.coeffs.data(), block_));
    }
  }
  return out;
}

}  // namespace pws
