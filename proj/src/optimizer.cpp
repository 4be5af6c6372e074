#include "pws/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace pws {

namespace {

using Eigen::Index;

double finite_or_inf(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

bool is_univariate(ProblemKind k) {
  return k == ProblemKind::univ_min || k == ProblemKind::univ_max || k == ProblemKind::univ_plus_part;
}

std::vector<double> global_fit_coeffs(const Problem& problem) {
  if (is_univariate(problem.kind())) {
    const auto c = fit_spline_lsq(problem.samples(), problem.grid1d()).spline.coeffs();
    return {c.begin(), c.end()};
  }
  return fit_spline_lsq(problem.samples(), problem.grid2d()).spline.flat_coeffs();
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<long>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

}  // namespace

std::size_t effective_population(const DEConfig& config, std::size_t dim) {
  if (config.population > 0) return config.population;
  return std::max<std::size_t>(4, std::min<std::size_t>(10 * dim, 200));
}

void validate(const DEConfig& config, std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("DE: dimension must be positive");
  if (effective_population(config, dim) < 4) throw std::invalid_argument("DE: population must be at least 4");
  if (!(config.weight > 0.0 && config.weight < 2.0)) throw std::invalid_argument("DE: weight must lie in (0, 2)");
  if (!(config.crossover >= 0.0 && config.crossover <= 1.0)) {
    throw std::invalid_argument("DE: crossover must lie in [0, 1]");
  }
  if (!(config.init_spread >= 0.0)) throw std::invalid_argument("DE: init_spread must be non-negative");
  if (config.lo.size() != dim || config.hi.size() != dim) {
    throw std::invalid_argument("DE: bounds need " + std::to_string(dim) + " entries");
  }
  for (std::size_t j = 0; j < dim; ++j) {
    if (!(config.lo[j] < config.hi[j])) throw std::invalid_argument("DE: empty bounds in dimension " + std::to_string(j));
  }
}

namespace {

Eigen::MatrixXd seed_from(std::mt19937_64& rng, std::span<const double> guess, const DEConfig& config) {
  const std::size_t dim = guess.size();
  validate(config, dim);
  const auto np = static_cast<Index>(effective_population(config, dim));
  Eigen::MatrixXd pop(np, static_cast<Index>(dim));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t j = 0; j < dim; ++j) pop(0, static_cast<Index>(j)) = std::clamp(guess[j], config.lo[j], config.hi[j]);
  for (Index i = 1; i < np; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double half = 0.5 * (config.hi[j] - config.lo[j]);
      const double v = pop(0, static_cast<Index>(j)) + u(rng) * config.init_spread * half;
      pop(i, static_cast<Index>(j)) = std::clamp(v, config.lo[j], config.hi[j]);
    }
  }
  return pop;
}

}  // namespace

Eigen::MatrixXd seed_population(std::span<const double> guess, const DEConfig& config) {
  std::mt19937_64 rng(config.seed);
  return seed_from(rng, guess, config);
}

FitResult de_minimize(const Objective& objective, std::size_t dim, std::span<const double> guess,
                      const DEConfig& config) {
  if (guess.size() != dim) throw std::invalid_argument("DE: guess length differs from dimension");
  // One sequential stream: the initial population, then every generation's
  // draws, made before that generation is evaluated.
  std::mt19937_64 rng(config.seed);
  Eigen::MatrixXd pop = seed_from(rng, guess, config);
  const Index np = pop.rows();
  const auto d = static_cast<Index>(dim);

  FitResult out;
  std::vector<double> cost(static_cast<std::size_t>(np));
  std::vector<double> row(dim);
  auto eval = [&](const Eigen::MatrixXd& m, Index i) {
    for (Index j = 0; j < d; ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    ++out.evaluations;
    return finite_or_inf(objective(row));
  };
  for (Index i = 0; i < np; ++i) cost[static_cast<std::size_t>(i)] = eval(pop, i);

  Index best = 0;
  auto update_best = [&] {
    for (Index i = 0; i < np; ++i) {
      if (cost[static_cast<std::size_t>(i)] < cost[static_cast<std::size_t>(best)]) best = i;
    }
    out.trace.push_back({cost[static_cast<std::size_t>(best)], out.evaluations});
  };
  update_best();

  std::uniform_int_distribution<Index> pick(0, np - 1);
  std::uniform_int_distribution<Index> pick_dim(0, d - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Eigen::MatrixXd trial(np, d);

  for (std::size_t gen = 0; gen < config.max_generations; ++gen) {
    if (cost[static_cast<std::size_t>(best)] <= config.target_value) break;
    for (Index i = 0; i < np; ++i) {
      Index a, b, c;
      do a = pick(rng); while (a == i);
      do b = pick(rng); while (b == i || b == a);
      do c = pick(rng); while (c == i || c == a || c == b);
      const Index forced = pick_dim(rng);
      for (Index j = 0; j < d; ++j) {
        const bool cross = u01(rng) < config.crossover || j == forced;
        if (cross) {
          const double v = pop(a, j) + config.weight * (pop(b, j) - pop(c, j));
          trial(i, j) = std::clamp(v, config.lo[static_cast<std::size_t>(j)], config.hi[static_cast<std::size_t>(j)]);
        } else {
          trial(i, j) = pop(i, j);
        }
      }
    }
    for (Index i = 0; i < np; ++i) {
      const double v = eval(trial, i);
      // Ties move the population across plateaus of piecewise-constant costs.
      if (v <= cost[static_cast<std::size_t>(i)]) {
        pop.row(i) = trial.row(i);
        cost[static_cast<std::size_t>(i)] = v;
      }
    }
    update_best();
  }

  out.best_value = cost[static_cast<std::size_t>(best)];
  out.best_params.resize(dim);
  for (Index j = 0; j < d; ++j) out.best_params[static_cast<std::size_t>(j)] = pop(best, j);
  out.converged = out.best_value <= config.target_value;
  return out;
}

std::vector<double> initial_guess(const Problem& problem, const GuessOptions& options) {
  if (options.params) {
    if (options.params->size() != problem.dimension()) {
      throw std::invalid_argument("guess: expected " + std::to_string(problem.dimension()) + " parameters");
    }
    return *options.params;
  }
  const auto& s = problem.samples();
  switch (problem.kind()) {
    case ProblemKind::univ_min:
    case ProblemKind::univ_max:
    case ProblemKind::univ_plus_part: {
      // Data values at the samples nearest to the knots, for both splines.
      const auto& grid = problem.grid1d();
      const auto xs = s.xs();
      std::vector<double> g(grid.size());
      for (std::size_t j = 0; j < grid.size(); ++j) {
        std::size_t nearest = 0;
        for (std::size_t i = 1; i < xs.size(); ++i) {
          if (std::abs(xs[i] - grid.knot(j)) < std::abs(xs[nearest] - grid.knot(j))) nearest = i;
        }
        g[j] = s.values()[nearest];
      }
      std::vector<double> out = g;
      if (problem.kind() == ProblemKind::univ_plus_part) {
        out.resize(2 * g.size(), 0.0);
      } else {
        out.insert(out.end(), g.begin(), g.end());
      }
      return out;
    }
    case ProblemKind::a_max3: {
      const auto c = global_fit_coeffs(problem);
      std::vector<double> out;
      for (int k = 0; k < 3; ++k) out.insert(out.end(), c.begin(), c.end());
      return out;
    }
    case ProblemKind::b_jump: {
      const auto& grid = problem.grid2d();
      if (options.curve) {
        const auto sd = signed_distance_samples(*options.curve, options.side_probe, s);
        return fit_spline_lsq(sd, grid).spline.flat_coeffs();
      }
      auto c = global_fit_coeffs(problem);
      const Eigen::VectorXd fitted = problem.design() * Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Index>(c.size()));
      std::vector<double> v(fitted.data(), fitted.data() + fitted.size());
      double level = 0.0;
      if (options.midrange) {
        const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        level = 0.5 * (*mn + *mx);
      } else {
        level = median(v);
      }
      // The cardinal basis sums to one, so shifting coefficients shifts the spline.
      for (auto& x : c) x -= level;
      if (!options.redistance) return c;
      const Spline2D shifted(grid, c);
      const double res = std::min(s.mesh_h() / 2.0, std::min(grid.x.delta(), grid.y.delta()) / 4.0);
      const auto zero = extract_zero_set(shifted, s.domain(), res);
      if (zero.empty()) return c;
      if (options.dominant_curve && zero.size() > 1) {
        auto length = [](const Polyline& p) {
          double l = 0.0;
          for (std::size_t k = 0; k < p.segment_count(); ++k) l += distance(p.segment_start(k), p.segment_end(k));
          return l;
        };
        const auto longest = *std::max_element(zero.begin(), zero.end(), [&](const Polyline& a, const Polyline& b) {
          return length(a) < length(b);
        });
        const auto probe = std::max_element(v.begin(), v.end()) - v.begin();
        const auto sd = signed_distance_samples(longest, s.sites()[static_cast<std::size_t>(probe)], s);
        return fit_spline_lsq(sd, grid).spline.flat_coeffs();
      }
      const SegmentLocator locator(zero, s.mesh_h());
      const auto sites = s.sites();
      std::vector<double> sd(sites.size());
      for (std::size_t i = 0; i < sites.size(); ++i) {
        const double d = locator.distance(sites[i]);
        sd[i] = fitted(static_cast<Index>(i)) - level < 0.0 ? -d : d;
      }
      return fit_spline_lsq(s.with_values(std::move(sd)), grid)
          .spline.flat_coeffs();
    }
    case ProblemKind::c_three_corner: {
      // Three affine label functions whose argmax splits the domain into
      // 120-degree sectors about its centre.
      const auto& grid = problem.grid2d();
      const Rect r = s.domain();
      const Point2 centre{0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1)};
      const double half = 0.5 * std::max(r.width(), r.height());
      const auto vals = s.values();
      const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
      const double amp = *mx > *mn ? 0.5 * (*mx - *mn) : 1.0;
      std::vector<double> out;
      for (int k = 0; k < 3; ++k) {
        const double t = std::numbers::pi / 2 + 2 * std::numbers::pi * k / 3;
        for (std::size_t i = 0; i < grid.x.size(); ++i) {
          for (std::size_t j = 0; j < grid.y.size(); ++j) {
            const double dx = grid.x.knot(i) - centre.x, dy = grid.y.knot(j) - centre.y;
            out.push_back(amp * (dx * std::cos(t) + dy * std::sin(t)) / half);
          }
        }
      }
      return out;
    }
  }
  return {};
}

void default_bounds(const Problem& problem, std::span<const double> guess, std::vector<double>& lo,
                    std::vector<double>& hi) {
  const auto vals = problem.samples().values();
  const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
  double range = *mx - *mn;
  if (!(range > 0.0)) range = std::max(1.0, std::abs(*mx));
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(vals.size());

  const std::size_t dim = problem.dimension();
  lo.assign(dim, 0.0);
  hi.assign(dim, 0.0);
  const bool level_unknowns = problem.kind() == ProblemKind::b_jump || problem.kind() == ProblemKind::c_three_corner;
  if (level_unknowns) {
    double w = 3.0 * range;
    for (double g : guess) w = std::max(w, 1.5 * std::abs(g));
    std::fill(lo.begin(), lo.end(), -w);
    std::fill(hi.begin(), hi.end(), w);
  } else {
    std::fill(lo.begin(), lo.end(), mean - 3.0 * range);
    std::fill(hi.begin(), hi.end(), mean + 3.0 * range);
  }
}

ProblemFit fit_problem(const Problem& problem, DEConfig config, const GuessOptions& guess_options) {
  ProblemFit out;
  out.guess = initial_guess(problem, guess_options);
  if (config.lo.empty() && config.hi.empty()) default_bounds(problem, out.guess, config.lo, config.hi);
  out.lo = config.lo;
  out.hi = config.hi;
  out.result = de_minimize([&](std::span<const double> p) { return problem.value(p); }, problem.dimension(),
                           out.guess, config);
  const auto& best = out.result.best_params;
  out.detail = problem.evaluate(best);

  const std::size_t k = problem.block_size();
  for (std::size_t b = 0; b < problem.block_count(); ++b) {
    const std::span<const double> block(best.data() + b * k, k);
    if (is_univariate(problem.kind())) {
      out.blocks1d.emplace_back(problem.grid1d(), std::vector<double>(block.begin(), block.end()));
    } else {
      out.blocks2d.emplace_back(problem.grid2d(), block);
    }
  }
  if (problem.kind() == ProblemKind::b_jump) {
    if (problem.spec().variant != JumpVariant::full) {
      out.zero_set = out.detail.zero_set;
    } else {
      const auto& s = problem.samples();
      const auto& g = problem.grid2d();
      const double res = std::min(s.mesh_h() / 2.0, std::min(g.x.delta(), g.y.delta()) / 4.0);
      out.zero_set = extract_zero_set(out.blocks2d[0], s.domain(), res);
    }
  }
  return out;
}

double evaluate_model(const Problem& problem, const ProblemFit& fit, Point2 p) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  switch (problem.kind()) {
    case ProblemKind::univ_min: return std::min(fit.blocks1d[0](p.x), fit.blocks1d[1](p.x));
    case ProblemKind::univ_max: return std::max(fit.blocks1d[0](p.x), fit.blocks1d[1](p.x));
    case ProblemKind::univ_plus_part: return fit.blocks1d[0](p.x) - plus_part(fit.blocks1d[1](p.x));
    case ProblemKind::a_max3: return std::max({fit.blocks2d[0](p), fit.blocks2d[1](p), fit.blocks2d[2](p)});
    case ProblemKind::b_jump: {
      if (fit.detail.inner_fits.size() != 2) return nan;
      return fit.blocks2d[0](p) > 0.0 ? fit.detail.inner_fits[0](p) : fit.detail.inner_fits[1](p);
    }
    case ProblemKind::c_three_corner: {
      if (fit.detail.inner_fits.size() != 3) return nan;
      int label = 0;
      double top = fit.blocks2d[0](p);
      for (int k = 1; k < 3; ++k) {
        const double v = fit.blocks2d[k](p);
        if (v > top) {
          top = v;
          label = k;
        }
      }
      return fit.detail.inner_fits[label](p);
    }
  }
  return nan;
}

}  // namespace pws
