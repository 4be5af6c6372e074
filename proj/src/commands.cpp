#include "pws/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "pws/io.hpp"

namespace pws {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

bool is_univariate(ProblemKind k) {
  return k == ProblemKind::univ_min || k == ProblemKind::univ_max || k == ProblemKind::univ_plus_part;
}

std::size_t component_count(ProblemKind k) {
  switch (k) {
    case ProblemKind::univ_min:
    case ProblemKind::univ_max:
    case ProblemKind::univ_plus_part:
    case ProblemKind::b_jump: return 2;
    case ProblemKind::a_max3:
    case ProblemKind::c_three_corner: return 3;
  }
  return 0;
}

// Value of fitted component `label` (the piece active where the model label
// equals `label`); NaN when the component does not exist.
double component_value(const Problem& problem, const ProblemFit& fit, int label, Point2 p) {
  const auto l = static_cast<std::size_t>(label);
  switch (problem.kind()) {
    case ProblemKind::univ_min:
    case ProblemKind::univ_max: return fit.blocks1d[l](p.x);
    case ProblemKind::univ_plus_part: return kNaN;
    case ProblemKind::a_max3: return fit.blocks2d[l](p);
    case ProblemKind::b_jump:
    case ProblemKind::c_three_corner:
      return l < fit.detail.inner_fits.size() ? fit.detail.inner_fits[l](p) : kNaN;
  }
  return kNaN;
}

// Largest-agreement assignment of model labels to true regions.
std::vector<int> match_labels(const std::vector<std::vector<std::size_t>>& counts, std::size_t labels) {
  const std::size_t regions = counts.size();
  std::vector<int> perm(labels);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(std::min(regions, labels)));
  if (regions != labels) return best;
  std::size_t best_score = 0;
  bool first = true;
  do {
    std::size_t score = 0;
    for (std::size_t r = 0; r < regions; ++r) score += counts[r][static_cast<std::size_t>(perm[r])];
    if (first || score > best_score) {
      best_score = score;
      best = perm;
      first = false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

struct Accumulator {
  std::size_t n = 0;
  double sup = 0.0;
  double sq = 0.0;
  bool invalid = false;

  void add(double e) {
    if (!std::isfinite(e)) {
      invalid = true;
      return;
    }
    ++n;
    sup = std::max(sup, e);
    sq += e * e;
  }
  double sup_value() const { return invalid ? kNaN : sup; }
  double rms_value() const { return invalid ? kNaN : (n ? std::sqrt(sq / static_cast<double>(n)) : 0.0); }
};

json region_json(const RegionError& e) {
  return {{"region", e.region},
          {"points", e.points},
          {"sup", finite_or_null(e.sup)},
          {"rms", finite_or_null(e.rms)},
          {"points_outside_band", e.points_outside_band},
          {"sup_outside_band", finite_or_null(e.sup_outside_band)},
          {"rms_outside_band", finite_or_null(e.rms_outside_band)}};
}

// Worst region error outside the band, preferring the matched components.
double worst_error(const TruthAssessment& a) {
  const auto& rows = a.piece.empty() ? a.model : a.piece;
  double worst = 0.0;
  for (const auto& r : rows) {
    if (!std::isfinite(r.sup_outside_band)) return kInf;
    worst = std::max(worst, r.sup_outside_band);
  }
  return worst;
}

std::string trace_csv(const FitResult& r) {
  std::ostringstream os;
  os << "generation,best_value,evaluations\n";
  for (std::size_t g = 0; g < r.trace.size(); ++g) {
    os << g << ',' << format_double(r.trace[g].best_value) << ',' << r.trace[g].evaluations << '\n';
  }
  return os.str();
}

bool trace_nonincreasing(const FitResult& r) {
  for (std::size_t g = 1; g < r.trace.size(); ++g) {
    if (r.trace[g].best_value > r.trace[g - 1].best_value) return false;
  }
  return true;
}

std::string segmentation_csv(const SampleSet& samples, const Segmentation& seg) {
  std::ostringstream os;
  os << "x,y,label\n";
  const auto sites = samples.sites();
  for (std::size_t i = 0; i < seg.labels.size() && i < sites.size(); ++i) {
    os << format_double(sites[i].x) << ',' << format_double(sites[i].y) << ',' << seg.labels[i] << '\n';
  }
  return os.str();
}

json synth_sidecar(const SynthConfig& config, const SyntheticData& data) {
  RunConfig c;
  c.synth = config;
  if (c.synth.pieces.empty()) c.synth.pieces = default_pieces(config.generator);
  json j = {{"schema", "pws.synth/1"},
            {"synth", to_json(c)["synth"]},
            {"samples", data.samples.size()},
            {"dim", data.samples.dim()},
            {"mesh_h", data.samples.mesh_h()},
            {"curves", data.truth.curves.size()},
            {"breaks", data.truth.breaks},
            {"smooth_warning", data.truth.smooth_warning}};
  return j;
}

Axis axis_from(const std::string& s) { return s == "x" ? Axis::x : Axis::y; }

}  // namespace

void write_artifacts(const Artifacts& artifacts, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  for (const auto& [name, text] : artifacts.files) write_text_file((std::filesystem::path(out_dir) / name).string(), text);
}

SyntheticData generate(const SynthConfig& c) {
  const auto pieces = c.pieces.empty() ? default_pieces(c.generator) : c.pieces;
  auto need = [&](std::size_t n) {
    if (pieces.size() != n) {
      throw ConfigError("synth.pieces: generator '" + c.generator + "' needs " + std::to_string(n) + " pieces");
    }
  };
  if (c.generator == "univariate") {
    need(2);
    const auto mode = c.mode == "max" ? CompositeMode::max : CompositeMode::min;
    return gen_univariate(c.domain.x0, c.domain.x1, c.mesh_h, mode, {pieces[0], pieces[1]}, c.noise);
  }
  if (c.generator == "ridge") return gen_three_corner_continuous(c.domain, c.mesh_h, c.sheets, c.noise);
  if (c.generator == "jump") {
    need(2);
    return gen_jump(c.domain, c.mesh_h, c.curve, pieces[0], pieces[1], c.noise);
  }
  if (c.generator == "sectors") {
    need(3);
    constexpr double deg = std::numbers::pi / 180.0;
    const std::array<double, 3> angles{c.angles_deg[0] * deg, c.angles_deg[1] * deg, c.angles_deg[2] * deg};
    return gen_three_corner_jump(c.domain, c.mesh_h, {pieces[0], pieces[1], pieces[2]}, c.centre, angles, c.noise);
  }
  throw ConfigError("synth.generator: unknown generator '" + c.generator + "'");
}

SampleSet apply_window(const ProblemConfig& config, const SampleSet& samples) {
  if (!config.window) return samples;
  std::vector<std::size_t> keep;
  const auto sites = samples.sites();
  const double tol = 1e-9 * std::max(1.0, samples.mesh_h());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (config.window->contains(sites[i], tol)) keep.push_back(i);
  }
  if (keep.empty()) throw ConfigError("problem.window: no samples inside the window");
  return samples.subset(keep);
}

ProblemSpec make_problem_spec(const ProblemConfig& c, const SampleSet& samples) {
  const ProblemKind kind = problem_kind_from_string(c.kind);
  const Rect box = c.grid_domain.value_or(samples.domain());
  if (is_univariate(kind) != (samples.dim() == 1)) {
    throw ConfigError("problem.kind '" + c.kind + "' does not match " + std::to_string(samples.dim()) + "-D samples");
  }
  std::variant<KnotGrid1D, KnotGrid2D> grid = is_univariate(kind)
                                                  ? std::variant<KnotGrid1D, KnotGrid2D>(KnotGrid1D(box.x0, box.x1, c.delta))
                                                  : std::variant<KnotGrid1D, KnotGrid2D>(make_knot_grid_2d(box, c.delta));
  ProblemSpec spec{kind, samples, grid};
  spec.variant = jump_variant_from_string(c.variant);
  spec.distance_multiplier = c.distance_multiplier;
  spec.band = c.band;
  spec.exclude_label_boundaries = c.exclude_label_boundaries;
  spec.extension_neighbors = c.extension_neighbors;
  spec.outer_uses_fit_sets = c.outer_uses_fit_sets;
  spec.minimum_norm_fits = c.minimum_norm_fits;
  spec.fit_truncation = c.fit_truncation;
  return spec;
}

GuessOptions make_guess_options(const ProblemConfig& c) {
  GuessOptions g;
  g.redistance = c.redistance;
  g.midrange = c.midrange;
  g.dominant_curve = c.dominant_curve;
  if (!c.guess_curve.empty()) {
    std::istringstream in(read_text_file(c.guess_curve));
    auto curves = read_polylines_csv(in);
    if (curves.empty()) throw IoError(c.guess_curve + ": no curve");
    g.curve = std::move(curves.front());
    g.side_probe = c.guess_side;
  }
  return g;
}

int model_label(const Problem& problem, const ProblemFit& fit, Point2 p) {
  switch (problem.kind()) {
    case ProblemKind::univ_min: return fit.blocks1d[1](p.x) < fit.blocks1d[0](p.x) ? 1 : 0;
    case ProblemKind::univ_max: return fit.blocks1d[1](p.x) > fit.blocks1d[0](p.x) ? 1 : 0;
    case ProblemKind::univ_plus_part: return fit.blocks1d[1](p.x) > 0.0 ? 1 : 0;
    case ProblemKind::b_jump: return fit.blocks2d[0](p) > 0.0 ? kPlus : kMinus;
    case ProblemKind::a_max3:
    case ProblemKind::c_three_corner: {
      int label = 0;
      double top = fit.blocks2d[0](p);
      for (int k = 1; k < 3; ++k) {
        const double v = fit.blocks2d[static_cast<std::size_t>(k)](p);
        if (v > top) {
          top = v;
          label = k;
        }
      }
      return label;
    }
  }
  return 0;
}

TruthAssessment assess_fit(const Problem& problem, const ProblemFit& fit, const GroundTruth& truth,
                           const ReportConfig& config) {
  const SampleSet& samples = problem.samples();
  const double h = samples.mesh_h();
  TruthAssessment out;
  out.band = config.band_multiplier * h;
  out.step = h / config.oversample;

  std::optional<SegmentLocator> locator;
  if (!truth.curves.empty()) locator.emplace(truth.curves, std::max(h, 1e-3));
  auto distance = [&](Point2 p) {
    if (samples.dim() == 1) {
      double d = kInf;
      for (double b : truth.breaks) d = std::min(d, std::abs(p.x - b));
      return d;
    }
    return locator ? locator->distance(p) : kInf;
  };

  const std::size_t regions = truth.pieces.size();
  const std::size_t labels = component_count(problem.kind());

  // Label matching on the samples.
  std::vector<std::vector<std::size_t>> counts(regions, std::vector<std::size_t>(labels, 0));
  const auto sites = samples.sites();
  std::vector<int> sample_label(sites.size()), sample_region(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    sample_label[i] = model_label(problem, fit, sites[i]);
    sample_region[i] = truth.region(sites[i]);
    const auto r = static_cast<std::size_t>(sample_region[i]);
    if (r < regions) ++counts[r][static_cast<std::size_t>(sample_label[i])];
  }
  const bool fixed = problem.kind() == ProblemKind::b_jump || problem.kind() == ProblemKind::univ_plus_part;
  if (fixed) {
    out.label_of_region.resize(std::min(regions, labels));
    std::iota(out.label_of_region.begin(), out.label_of_region.end(), 0);
  } else {
    out.label_of_region = match_labels(counts, labels);
  }

  out.census.total = sites.size();
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto r = static_cast<std::size_t>(sample_region[i]);
    const bool right = r < out.label_of_region.size() && out.label_of_region[r] == sample_label[i];
    if (right) continue;
    ++out.census.count;
    const double d = distance(sites[i]);
    out.census.max_distance = std::max(out.census.max_distance, d);
    if (d > out.band) ++out.census.beyond_band;
  }

  // Errors on the oversampled lattice.
  std::vector<Point2> points;
  if (samples.dim() == 1) {
    for (double x : lattice(samples.domain().x0, samples.domain().x1, out.step)) points.push_back({x, 0.0});
  } else {
    points = lattice(samples.domain(), out.step);
  }
  const bool pieces_ok = problem.kind() != ProblemKind::univ_plus_part &&
                         (problem.kind() != ProblemKind::b_jump || fit.detail.inner_fits.size() == 2) &&
                         (problem.kind() != ProblemKind::c_three_corner || fit.detail.inner_fits.size() == 3) &&
                         out.label_of_region.size() == regions;
  std::vector<Accumulator> model_all(regions), model_out(regions), piece_all(regions), piece_out(regions);
  for (const auto& p : points) {
    const auto r = static_cast<std::size_t>(truth.region(p));
    if (r >= regions) continue;
    const bool outside = distance(p) > out.band;
    const double em = std::abs(evaluate_model(problem, fit, p) - truth.f(p));
    model_all[r].add(em);
    if (outside) model_out[r].add(em);
    if (pieces_ok) {
      const double ep = std::abs(component_value(problem, fit, out.label_of_region[r], p) - eval_piece(truth.pieces[r], p));
      piece_all[r].add(ep);
      if (outside) piece_out[r].add(ep);
    }
  }
  auto rows = [&](const std::vector<Accumulator>& all, const std::vector<Accumulator>& outside) {
    std::vector<RegionError> v;
    for (std::size_t r = 0; r < regions; ++r) {
      v.push_back({static_cast<int>(r), all[r].n, all[r].sup_value(), all[r].rms_value(), outside[r].n,
                   outside[r].sup_value(), outside[r].rms_value()});
    }
    return v;
  };
  out.model = rows(model_all, model_out);
  if (pieces_ok) out.piece = rows(piece_all, piece_out);

  if (problem.kind() == ProblemKind::b_jump && !fit.zero_set.empty() && !truth.curves.empty()) {
    out.curve_deviation = curve_deviation(fit.zero_set, truth.curves);
  }
  return out;
}

json to_json(const TruthAssessment& a) {
  json model = json::array(), piece = json::array();
  for (const auto& e : a.model) model.push_back(region_json(e));
  for (const auto& e : a.piece) piece.push_back(region_json(e));
  return {{"band", a.band},
          {"grid_step", a.step},
          {"model_errors", model},
          {"piece_errors", piece},
          {"label_of_region", a.label_of_region},
          {"misclassified",
           {{"total", a.census.total},
            {"count", a.census.count},
            {"max_distance", finite_or_null(a.census.max_distance)},
            {"beyond_band", a.census.beyond_band}}},
          {"curve_deviation", a.curve_deviation ? finite_or_null(*a.curve_deviation) : json(nullptr)}};
}

json coefficients_json(const Problem& problem, const ProblemFit& fit) {
  const SampleSet& s = problem.samples();
  json blocks = json::array();
  json grid;
  if (is_univariate(problem.kind())) {
    grid = {{"x", to_json(problem.grid1d())}};
    for (const auto& b : fit.blocks1d) blocks.push_back(std::vector<double>(b.coeffs().begin(), b.coeffs().end()));
  } else {
    grid = {{"x", to_json(problem.grid2d().x)}, {"y", to_json(problem.grid2d().y)}};
    for (const auto& b : fit.blocks2d) blocks.push_back(b.flat_coeffs());
  }
  json inner = json::array();
  for (const auto& f : fit.detail.inner_fits) inner.push_back(to_json(f));
  return {{"schema", kCoefficientSchema},
          {"kind", to_string(problem.kind())},
          {"domain", to_json(s.domain())},
          {"mesh_h", s.mesh_h()},
          {"grid", grid},
          {"blocks", blocks},
          {"inner_fits", inner},
          {"best_value", fit.result.best_value}};
}

PatchApprox patch_from_json(const json& j) {
  try {
    if (j.at("schema") != kCoefficientSchema) throw IoError("coefficients: unexpected schema");
    const ProblemKind kind = problem_kind_from_string(j.at("kind").get<std::string>());
    if (kind != ProblemKind::a_max3 && kind != ProblemKind::b_jump) {
      throw IoError("coefficients: only a_max3 and b_jump fits can be blended");
    }
    const KnotGrid2D grid{knot_grid_from_json(j.at("grid").at("x")), knot_grid_from_json(j.at("grid").at("y"))};
    PatchApprox p;
    p.domain = rect_from_json(j.at("domain"));
    p.mesh_h = j.at("mesh_h").get<double>();
    const auto& blocks = j.at("blocks");
    if (kind == ProblemKind::a_max3) {
      p.kind = PatchKind::a;
      if (blocks.size() != 3) throw IoError("coefficients: a_max3 needs three blocks");
      for (const auto& b : blocks) {
        const auto c = b.get<std::vector<double>>();
        if (c.size() != grid.size()) throw IoError("coefficients: block size does not match the grid");
        p.splines.emplace_back(grid, std::span<const double>(c));
      }
    } else {
      p.kind = PatchKind::b;
      const auto& inner = j.at("inner_fits");
      if (blocks.size() != 1 || inner.size() != 2) throw IoError("coefficients: b_jump needs g_gamma and two inner fits");
      const auto c = blocks[0].get<std::vector<double>>();
      if (c.size() != grid.size()) throw IoError("coefficients: block size does not match the grid");
      p.splines.emplace_back(grid, std::span<const double>(c));
      p.splines.push_back(spline2d_from_json(inner[0]));
      p.splines.push_back(spline2d_from_json(inner[1]));
    }
    validate(p);
    return p;
  } catch (const json::exception& e) {
    throw IoError(std::string("coefficients: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("coefficients: ") + e.what());
  }
}

Artifacts cmd_synth(const RunConfig& config) {
  const auto t0 = Clock::now();
  const SyntheticData data = generate(config.synth);
  Artifacts a;
  a.files["samples.csv"] = samples_csv(data.samples);
  if (!data.truth.curves.empty()) a.files["truth.csv"] = polylines_csv(data.truth.curves);
  json sidecar = synth_sidecar(config.synth, data);
  a.files["synth.json"] = sidecar.dump(2) + "\n";
  if (data.truth.smooth_warning) a.warnings.push_back("pieces never cross: the composite is smooth");
  a.report = {{"schema", kReportSchema},
              {"command", "synth"},
              {"samples", data.samples.size()},
              {"warnings", a.warnings},
              {"seeds", {{"noise", config.synth.noise.seed}}},
              {"config", to_json(config)},
              {"timing", {{"total_seconds", seconds_since(t0)}}}};
  a.files["report.json"] = a.report.dump(2) + "\n";
  return a;
}

Artifacts cmd_fit(const RunConfig& config) {
  const auto t0 = Clock::now();
  Artifacts a;
  std::optional<SyntheticData> data;
  std::optional<SampleSet> loaded;
  if (!config.problem.samples.empty()) {
    loaded = read_samples_file(config.problem.samples, config.problem.mesh_h);
  } else {
    data = generate(config.synth);
  }
  const SampleSet samples = apply_window(config.problem, data ? data->samples : *loaded);
  const Problem problem(make_problem_spec(config.problem, samples));

  if (problem.kind() == ProblemKind::b_jump) {
    const double m = std::get<KnotGrid2D>(problem.spec().grid).x.delta() / samples.mesh_h();
    if (m <= 3.0) {
      a.warnings.push_back("delta / mesh_h = " + format_double(m) + " <= 3: the knot grid is too fine for the data");
    }
  }

  const auto t_fit = Clock::now();
  const ProblemFit fit = fit_problem(problem, config.de, make_guess_options(config.problem));
  const double fit_seconds = seconds_since(t_fit);
  if (!fit.detail.well_posed) a.warnings.push_back("inner least-squares problem ill-posed at the best parameters");
  if (!fit.detail.full_rank) a.warnings.push_back("rank-deficient inner fit solved by its minimum-norm solution");
  if (!fit.result.converged && config.de.target_value > 0.0) a.warnings.push_back("target value not reached");

  std::optional<TruthAssessment> assessment;
  if (data) assessment = assess_fit(problem, fit, data->truth, config.report);

  json seg = nullptr;
  if (!fit.detail.segmentation.labels.empty()) {
    seg = json::object();
    seg["excluded"] = fit.detail.segmentation.count(Segmentation::excluded);
    for (int l = 0; l < 3; ++l) seg["label_" + std::to_string(l)] = fit.detail.segmentation.count(l);
  }
  json grid = is_univariate(problem.kind()) ? json{{"x", to_json(problem.grid1d())}}
                                            : json{{"x", to_json(problem.grid2d().x)}, {"y", to_json(problem.grid2d().y)}};
  json problem_json = {{"kind", to_string(problem.kind())},
                       {"dimension", problem.dimension()},
                       {"blocks", problem.block_count()},
                       {"block_size", problem.block_size()},
                       {"samples", samples.size()},
                       {"mesh_h", samples.mesh_h()},
                       {"grid", grid}};
  if (problem.kind() == ProblemKind::b_jump) problem_json["variant"] = to_string(problem.spec().variant);

  double quality = kNaN;
  if (assessment) {
    quality = worst_error(*assessment);
  } else if (samples.size() > 0) {
    quality = std::sqrt(fit.result.best_value / static_cast<double>(samples.size()));
  }
  if (config.report.fail_above && !(quality <= *config.report.fail_above)) a.exit_code = 1;

  a.report = {{"schema", kReportSchema},
              {"command", "fit"},
              {"problem", problem_json},
              {"optimizer",
               {{"best_value", finite_or_null(fit.result.best_value)},
                {"guess_value", finite_or_null(problem.value(fit.guess))},
                {"evaluations", fit.result.evaluations},
                {"generations", fit.result.trace.empty() ? 0 : fit.result.trace.size() - 1},
                {"converged", fit.result.converged},
                {"trace_nonincreasing", trace_nonincreasing(fit.result)}}},
              {"fit", {{"well_posed", fit.detail.well_posed}, {"full_rank", fit.detail.full_rank}, {"segmentation", seg}}},
              {"truth", assessment ? to_json(*assessment) : json(nullptr)},
              {"quality", {{"value", finite_or_null(quality)}, {"fail_above", config.report.fail_above ? json(*config.report.fail_above) : json(nullptr)}}},
              {"warnings", a.warnings},
              {"seeds", {{"de", config.de.seed}, {"noise", config.synth.noise.seed}}},
              {"config", to_json(config)},
              {"timing", {{"fit_seconds", fit_seconds}, {"total_seconds", seconds_since(t0)}}}};

  a.files["report.json"] = a.report.dump(2) + "\n";
  a.files["coefficients.json"] = coefficients_json(problem, fit).dump(2) + "\n";
  a.files["trace.csv"] = trace_csv(fit.result);
  if (config.report.write_grid) {
    const double step = samples.mesh_h() / config.report.oversample;
    const Rect& box = samples.domain();
    if (samples.dim() == 1) {
      a.files["grid.csv"] = line_csv(box.x0, box.x1, step, [&](double x) { return evaluate_model(problem, fit, {x, 0.0}); });
    } else {
      a.files["grid.csv"] = grid_csv(box, step, [&](Point2 p) { return evaluate_model(problem, fit, p); });
    }
  }
  if (problem.kind() == ProblemKind::b_jump) a.files["zero_set.csv"] = polylines_csv(fit.zero_set);
  if (problem.kind() == ProblemKind::b_jump || problem.kind() == ProblemKind::c_three_corner) {
    a.files["segmentation.csv"] = segmentation_csv(samples, fit.detail.segmentation);
  }
  if (data) {
    a.files["samples.csv"] = samples_csv(samples);
    if (!data->truth.curves.empty()) a.files["truth.csv"] = polylines_csv(data->truth.curves);
  }
  return a;
}

Artifacts cmd_blend(const RunConfig& config) {
  const auto t0 = Clock::now();
  if (config.blend.first.empty() || config.blend.second.empty()) {
    throw ConfigError("blend.first and blend.second must name coefficient files");
  }
  auto load = [](const std::string& path) {
    const json j = json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded()) throw IoError(path + ": invalid JSON");
    try {
      return patch_from_json(j);
    } catch (const IoError& e) {
      throw IoError(path + ": " + e.what());
    }
  };
  const PatchApprox p1 = load(config.blend.first);
  const PatchApprox p2 = load(config.blend.second);
  if (p1.kind != p2.kind) throw ConfigError("blend: patch kinds differ");
  Blend blend = [&] {
    try {
      const Axis axis = axis_from(config.blend.axis);
      return p1.kind == PatchKind::a ? blend_a(p1, p2, axis) : blend_b(p1, p2, axis);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("blend: ") + e.what());
    }
  }();

  const double step = config.blend.step > 0.0 ? config.blend.step : std::min(p1.mesh_h, p2.mesh_h) / 4.0;
  const Rect box{std::min(p1.domain.x0, p2.domain.x0), std::max(p1.domain.x1, p2.domain.x1),
                 std::min(p1.domain.y0, p2.domain.y0), std::max(p1.domain.y1, p2.domain.y1)};
  Artifacts a;
  a.files["blend.csv"] = grid_csv(box, step, [&](Point2 p) {
    if (!p1.domain.contains(p) && !p2.domain.contains(p)) return kNaN;
    return blend(p);
  });
  json diag = {{"kind", p1.kind == PatchKind::a ? "a_max3" : "b_jump"},
               {"axis", config.blend.axis},
               {"overlap", to_json(blend.overlap())},
               {"grid_step", step}};
  if (p1.kind == PatchKind::a) {
    diag["pairing"] = blend.pairing();
  } else {
    diag["alpha"] = blend.scale().alpha;
    diag["flipped"] = blend.scale().flipped;
    diag["probes"] = blend.scale().probes;
  }
  a.report = {{"schema", kReportSchema},
              {"command", "blend"},
              {"blend", diag},
              {"warnings", a.warnings},
              {"config", to_json(config)},
              {"timing", {{"total_seconds", seconds_since(t0)}}}};
  a.files["report.json"] = a.report.dump(2) + "\n";
  return a;
}

void validate_geometric(const std::vector<double>& h) {
  if (h.size() < 3) throw ConfigError("study.h: at least three mesh sizes required");
  for (double v : h) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("study.h: mesh sizes must be positive");
  }
  const double ratio = h[1] / h[0];
  if (ratio == 1.0) throw ConfigError("study.h: mesh sizes must differ");
  for (std::size_t i = 2; i < h.size(); ++i) {
    if (std::abs(h[i] / h[i - 1] - ratio) > 1e-9 * ratio) throw ConfigError("study.h: not a geometric progression");
  }
}

SlopeEstimate loglog_slope(const std::vector<double>& h, const std::vector<double>& error, double floor) {
  SlopeEstimate s;
  std::vector<double> x, y;
  bool all_floor = !error.empty();
  for (std::size_t i = 0; i < h.size() && i < error.size(); ++i) {
    if (!std::isfinite(error[i])) {
      all_floor = false;
      continue;
    }
    if (error[i] > floor) {
      all_floor = false;
      x.push_back(std::log2(h[i]));
      y.push_back(std::log2(error[i]));
    }
  }
  s.points = x.size();
  if (all_floor) {
    s.status = "floor";
    return s;
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  if (x.size() >= 2) {
    mx /= n;
    my /= n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (x.size() < 2 || !(sxx > 0.0)) {
    s.status = "insufficient";
    return s;
  }
  s.status = "ok";
  s.slope = sxy / sxx;
  if (x.size() >= 3) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - (my + s.slope * (x[i] - mx));
      ssr += r * r;
    }
    s.stderr_slope = std::sqrt(ssr / (n - 2.0) / sxx);
  }
  return s;
}

Artifacts cmd_study(const RunConfig& config) {
  const auto t0 = Clock::now();
  const StudyConfig& st = config.study;
  validate_geometric(st.h);
  if (st.seeds.empty()) throw ConfigError("study.seeds: at least one seed required");
  if (!st.generations.empty() && st.generations.size() != st.h.size()) {
    throw ConfigError("study.generations: one entry per mesh size required");
  }

  struct Row {
    std::uint64_t seed;
    std::size_t level;
    double h;
    TruthAssessment assessment;
    double best_value;
    bool well_posed;
    bool full_rank;
    std::size_t evaluations;
  };
  std::vector<Row> rows;
  Artifacts a;
  for (const std::uint64_t seed : st.seeds) {
    std::optional<std::vector<double>> previous;
    for (std::size_t l = 0; l < st.h.size(); ++l) {
      SynthConfig sc = config.synth;
      sc.mesh_h = st.h[l];
      sc.noise.value_sigma = 0.0;
      sc.noise.curve_amplitude = 0.0;
      const SyntheticData data = generate(sc);
      const Problem problem(make_problem_spec(config.problem, apply_window(config.problem, data.samples)));

      DEConfig de = config.de;
      de.seed = seed * 1000 + l;
      if (!st.generations.empty()) de.max_generations = st.generations[l];
      GuessOptions guess = make_guess_options(config.problem);
      if (st.warm_start && previous && previous->size() == problem.dimension()) {
        guess.params = previous;
        de.init_spread = config.de.init_spread * std::pow(st.spread_decay, static_cast<double>(l));
      }
      const ProblemFit fit = fit_problem(problem, de, guess);
      previous = fit.result.best_params;
      rows.push_back({seed, l, st.h[l], assess_fit(problem, fit, data.truth, config.report), fit.result.best_value,
                      fit.detail.well_posed, fit.detail.full_rank, fit.result.evaluations});
    }
  }

  std::ostringstream table;
  table << "seed,h,region,sup_error,rms_error,points,misclassified,max_misclassified_distance,beyond_band,"
           "curve_deviation,best_value,well_posed\n";
  json levels = json::array();
  std::size_t regions = 0;
  for (const auto& r : rows) {
    const auto& errs = r.assessment.piece.empty() ? r.assessment.model : r.assessment.piece;
    regions = std::max(regions, errs.size());
    for (const auto& e : errs) {
      table << r.seed << ',' << format_double(r.h) << ',' << e.region << ',' << format_double(e.sup_outside_band) << ','
            << format_double(e.rms_outside_band) << ',' << e.points_outside_band << ',' << r.assessment.census.count
            << ',' << format_double(r.assessment.census.max_distance) << ',' << r.assessment.census.beyond_band << ','
            << (r.assessment.curve_deviation ? format_double(*r.assessment.curve_deviation) : std::string("nan")) << ','
            << format_double(r.best_value) << ',' << (r.well_posed ? 1 : 0) << '\n';
    }
    levels.push_back({{"seed", r.seed},
                      {"h", r.h},
                      {"best_value", finite_or_null(r.best_value)},
                      {"well_posed", r.well_posed},
                      {"full_rank", r.full_rank},
                      {"evaluations", r.evaluations},
                      {"truth", to_json(r.assessment)}});
  }

  std::ostringstream slopes_csv;
  slopes_csv << "region,slope,stderr,points\n";
  json slopes = json::array();
  double worst = 0.0;
  for (std::size_t region = 0; region < regions; ++region) {
    std::vector<double> hs, es;
    for (const auto& r : rows) {
      const auto& errs = r.assessment.piece.empty() ? r.assessment.model : r.assessment.piece;
      if (region >= errs.size()) continue;
      const double e = errs[region].sup_outside_band;
      worst = std::max(worst, std::isfinite(e) ? e : kInf);
      if (!r.well_posed) continue;
      hs.push_back(r.h);
      es.push_back(e);
    }
    const SlopeEstimate s = loglog_slope(hs, es, st.floor);
    std::string slope_cell = s.status == "ok" ? format_double(s.slope) : s.status;
    slopes_csv << region << ',' << slope_cell << ','
               << (s.stderr_slope ? format_double(*s.stderr_slope) : std::string("nan")) << ',' << s.points << '\n';
    slopes.push_back({{"region", region},
                      {"status", s.status},
                      {"slope", s.status == "ok" ? json(s.slope) : json(nullptr)},
                      {"stderr", s.stderr_slope ? finite_or_null(*s.stderr_slope) : json(nullptr)},
                      {"points", s.points}});
  }
  if (config.report.fail_above && !(worst <= *config.report.fail_above)) a.exit_code = 1;

  a.report = {{"schema", kReportSchema},
              {"command", "study"},
              {"levels", levels},
              {"slopes", slopes},
              {"warnings", a.warnings},
              {"seeds", {{"study", st.seeds}, {"de_derivation", "seed * 1000 + level"}}},
              {"config", to_json(config)},
              {"timing", {{"total_seconds", seconds_since(t0)}}}};
  a.files["study.csv"] = table.str();
  a.files["slopes.csv"] = slopes_csv.str();
  a.files["report.json"] = a.report.dump(2) + "\n";
  return a;
}

}  // namespace pws
