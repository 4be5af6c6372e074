#pragma once

// Differential evolution (DE/rand/1/bin) and the fit pipeline that seeds it.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pws/geometry.hpp"
#include "pws/objectives.hpp"

namespace pws {

struct DEConfig {
  /// 0 selects 10 * dim, capped at 200.
  std::size_t population = 0;
  double weight = 0.7;
  double crossover = 0.9;
  std::size_t max_generations = 400;
  /// Stop as soon as the best value is at or below this.
  double target_value = 0.0;
  std::uint64_t seed = 1;
  /// Per-dimension box; fit_problem fills these when empty.
  std::vector<double> lo;
  std::vector<double> hi;
  /// Initial members are guess + U(-1, 1) * init_spread * (hi - lo) / 2.
  double init_spread = 0.1;
};

std::size_t effective_population(const DEConfig& config, std::size_t dim);
/// Throws std::invalid_argument for inconsistent settings.
void validate(const DEConfig& config, std::size_t dim);

struct TraceEntry {
  double best_value;
  std::size_t evaluations;
};

struct FitResult {
  std::vector<double> best_params;
  double best_value = 0.0;
  /// Entry 0 is the initial population, then one entry per generation.
  std::vector<TraceEntry> trace;
  std::size_t evaluations = 0;
  /// best_value reached target_value.
  bool converged = false;
};

/// NP x dim population; row 0 is the (clamped) guess.
Eigen::MatrixXd seed_population(std::span<const double> guess, const DEConfig& config);

using Objective = std::function<double(std::span<const double>)>;

/// Non-finite objective values count as +infinity. All random draws of a
/// generation are made before any evaluation.
FitResult de_minimize(const Objective& objective, std::size_t dim, std::span<const double> guess,
                      const DEConfig& config);

/// Optional overrides for the starting point of fit_problem.
struct GuessOptions {
  /// Jump problem: start g_gamma as the spline fit of the signed distance to
  /// this curve, positive on the side of `side_probe`.
  std::optional<Polyline> curve;
  Point2 side_probe{};
  /// Jump problem: start at the midrange level of the global fit instead of
  /// its median level.
  bool midrange = false;
  /// Jump problem: replace the level guess by a spline fit of the signed
  /// distance to its zero set (same curve, distance-like magnitude).
  bool redistance = true;
  /// With redistance: keep only the longest zero-set component, dropping
  /// small islands of the level guess.
  bool dominant_curve = false;
  /// Explicit starting parameters (any kind); overrides everything else.
  std::optional<std::vector<double>> params;
};

/// Default starting parameters for a problem (see GuessOptions).
std::vector<double> initial_guess(const Problem& problem, const GuessOptions& options = {});

/// Default box: data-valued unknowns (univariate, max-of-three) get
/// [mean - 3R, mean + 3R] with R the data range; level and label unknowns
/// (jump, three-region) get [-W, W] with W = 3R widened to contain the guess.
void default_bounds(const Problem& problem, std::span<const double> guess, std::vector<double>& lo,
                    std::vector<double>& hi);

struct ProblemFit {
  FitResult result;
  std::vector<double> guess;
  std::vector<double> lo;
  std::vector<double> hi;
  /// Objective details at the best parameters (inner fits, segmentation).
  ObjectiveValue detail;
  /// The optimized spline blocks: (g1, g2) univariate; g1..g3 (A); g_gamma
  /// (B); h1..h3 (C).
  std::vector<Spline1D> blocks1d;
  std::vector<Spline2D> blocks2d;
  /// Jump problem: zero set of g_gamma over the sample domain.
  std::vector<Polyline> zero_set;
};

ProblemFit fit_problem(const Problem& problem, DEConfig config, const GuessOptions& guess = {});

/// Value of the fitted model at p: the composed univariate function, the
/// max of three sheets, the jump function g_+ / g_- by the sign of g_gamma, or
/// the inner fit of the argmax label.
double evaluate_model(const Problem& problem, const ProblemFit& fit, Point2 p);

}  // namespace pws
