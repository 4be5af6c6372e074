#pragma once

// One JSON document per run: data generation, problem, optimizer, report,
// blend and study settings. Unknown keys are rejected.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pws/optimizer.hpp"
#include "pws/synth.hpp"

namespace pws {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SynthConfig {
  /// univariate | ridge | jump | sectors
  std::string generator = "univariate";
  /// Univariate data use [x0, x1] only.
  Rect domain{-3, 3, -3, 3};
  double mesh_h = 0.02;
  /// Univariate composite: min | max.
  std::string mode = "min";
  /// Empty selects the generator's default pieces.
  std::vector<Piece> pieces;
  std::array<Sheet, 3> sheets{Sheet{0.8, 0.3, 0.0}, Sheet{-0.7, 0.4, 0.1}, Sheet{0.1, -0.9, -0.2}};
  CurveSpec curve;
  Point2 centre{};
  std::array<double, 3> angles_deg{90.0, 210.0, 330.0};
  NoiseSpec noise;
};

struct ProblemConfig {
  std::string kind = "univ_min";
  /// Samples CSV; empty generates the data from the synth section.
  std::string samples;
  /// Keep only samples inside this rectangle (one patch of a larger data set).
  std::optional<Rect> window;
  /// Mesh size of file input; 0 estimates it from the sites.
  double mesh_h = 0.0;
  double delta = 1.5;
  /// Knot rectangle; defaults to the bounding box of the samples.
  std::optional<Rect> grid_domain;
  std::string variant = "restricted";
  double distance_multiplier = 1.0;
  double band = 0.0;
  bool exclude_label_boundaries = true;
  std::size_t extension_neighbors = 16;
  bool outer_uses_fit_sets = false;
  bool minimum_norm_fits = false;
  double fit_truncation = 1e-8;
  bool redistance = true;
  bool midrange = false;
  bool dominant_curve = false;
  /// Jump problem: polyline CSV whose first curve seeds g_gamma, positive on
  /// the side of guess_side. Empty uses the level guess.
  std::string guess_curve;
  Point2 guess_side{};
};

struct ReportConfig {
  /// Evaluation grid spacing is mesh_h / oversample.
  double oversample = 4.0;
  /// Errors are also reported excluding this many mesh sizes around the truth curves.
  double band_multiplier = 2.0;
  /// Exit code 1 when the largest region sup error (outside the band) exceeds this.
  std::optional<double> fail_above;
  bool write_grid = true;
};

struct BlendConfig {
  /// Coefficient JSON files written by `fit`; `first` lies on the low side.
  std::string first;
  std::string second;
  std::string axis = "y";
  /// Output grid spacing; 0 uses a quarter of the smaller patch mesh.
  double step = 0.0;
};

struct StudyConfig {
  /// Mesh sizes, at least three, in geometric progression.
  std::vector<double> h;
  std::vector<std::uint64_t> seeds{1};
  /// Start each level from the previous level's best parameters.
  bool warm_start = true;
  /// init_spread factor applied per level when warm starting.
  double spread_decay = 0.5;
  /// Generations per level; empty uses de.max_generations throughout.
  std::vector<std::size_t> generations;
  /// Errors below this count as the representation floor.
  double floor = 1e-9;
};

struct RunConfig {
  SynthConfig synth;
  ProblemConfig problem;
  DEConfig de;
  ReportConfig report;
  BlendConfig blend;
  StudyConfig study;
};

nlohmann::json to_json(const RunConfig& config);
/// Missing keys keep their defaults. Throws ConfigError for unknown keys and
/// ill-typed values.
RunConfig run_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Piece& piece);
Piece piece_from_json(const nlohmann::json& j);

/// Applies `key.path=value` to a config document. The value is read as JSON
/// when it parses, else as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Reads the file (empty path: defaults), applies overrides, validates.
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides);

/// Default pieces of a generator (univariate: two splines on the knot grid
/// (-3, 3, 1.5); jump: low-degree polynomials; sectors: constants 0, 5, 10).
std::vector<Piece> default_pieces(const std::string& generator);

}  // namespace pws
