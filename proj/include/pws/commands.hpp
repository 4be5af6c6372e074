#pragma once

// The four commands behind `pws`: synth, fit, blend and study. Each returns
// its artifacts in memory; nothing touches the disk until write_artifacts.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pws/blending.hpp"
#include "pws/config.hpp"
#include "pws/optimizer.hpp"
#include "pws/synth.hpp"

namespace pws {

inline constexpr const char* kReportSchema = "pws.report/1";
inline constexpr const char* kCoefficientSchema = "pws.coefficients/1";

struct Artifacts {
  /// File name (relative to the output directory) -> contents.
  std::map<std::string, std::string> files;
  nlohmann::json report;
  std::vector<std::string> warnings;
  /// 0 success, 1 fit-quality threshold exceeded.
  int exit_code = 0;
};

/// Throws IoError when the directory cannot be created or a file not written.
void write_artifacts(const Artifacts& artifacts, const std::string& out_dir);

SyntheticData generate(const SynthConfig& config);

/// Samples inside the problem window (all samples without one).
SampleSet apply_window(const ProblemConfig& config, const SampleSet& samples);

/// Problem spec over `samples` with the knot grid from the problem section.
ProblemSpec make_problem_spec(const ProblemConfig& config, const SampleSet& samples);
GuessOptions make_guess_options(const ProblemConfig& config);

struct RegionError {
  int region = 0;
  std::size_t points = 0;
  double sup = 0.0;
  double rms = 0.0;
  /// Same, over points farther than the band from the truth curves.
  std::size_t points_outside_band = 0;
  double sup_outside_band = 0.0;
  double rms_outside_band = 0.0;
};

struct MisclassCensus {
  std::size_t total = 0;
  std::size_t count = 0;
  /// Largest distance of a misclassified sample to the truth curves (0 if none).
  double max_distance = 0.0;
  std::size_t beyond_band = 0;
};

/// Fit quality against the generator's ground truth, measured on a lattice of
/// spacing mesh_h / oversample.
struct TruthAssessment {
  double band = 0.0;
  double step = 0.0;
  /// Fitted model against f, per true region.
  std::vector<RegionError> model;
  /// Fitted component matched to each true region against that region's
  /// piece (empty for the plus-part form and for ill-posed fits).
  std::vector<RegionError> piece;
  /// Model label matched to each true region.
  std::vector<int> label_of_region;
  MisclassCensus census;
  /// Jump problem: deviation of the zero set of g_gamma from the truth curve.
  std::optional<double> curve_deviation;
};

TruthAssessment assess_fit(const Problem& problem, const ProblemFit& fit, const GroundTruth& truth,
                           const ReportConfig& config);

/// Label of the fitted model at p (index of the active component).
int model_label(const Problem& problem, const ProblemFit& fit, Point2 p);

nlohmann::json to_json(const TruthAssessment& a);
nlohmann::json coefficients_json(const Problem& problem, const ProblemFit& fit);
/// Rebuilds a blendable patch from a coefficient document (kinds a_max3 and b_jump).
PatchApprox patch_from_json(const nlohmann::json& j);

Artifacts cmd_synth(const RunConfig& config);
Artifacts cmd_fit(const RunConfig& config);
Artifacts cmd_blend(const RunConfig& config);
Artifacts cmd_study(const RunConfig& config);

struct SlopeEstimate {
  /// ok | floor | insufficient
  std::string status;
  double slope = 0.0;
  /// Standard error of the slope; absent with fewer than three points.
  std::optional<double> stderr_slope;
  std::size_t points = 0;
};

/// Least-squares slope of log2(error) against log2(h).
SlopeEstimate loglog_slope(const std::vector<double>& h, const std::vector<double>& error, double floor);

/// Throws ConfigError unless there are at least three mesh sizes with a
/// constant ratio (relative tolerance 1e-9).
void validate_geometric(const std::vector<double>& h);

}  // namespace pws
