#include "pws/config.hpp"

#include <set>

#include "pws/io.hpp"

namespace pws {

using nlohmann::json;

namespace {

// Reads the keys of one JSON object and rejects whatever is left over.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }

  template <class T>
  void get(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(name_ + ": unknown key '" + item.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

Rect rect_value(const json& j, const std::string& name) {
  try {
    return rect_from_json(j);
  } catch (const std::exception& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

json sheet_json(const Sheet& s) { return {s.a, s.b, s.c}; }

json curve_json(const CurveSpec& c) {
  return {{"kind", to_string(c.kind)}, {"amplitude", c.amplitude}, {"frequency", c.frequency},
          {"phase", c.phase},           {"offset", c.offset},       {"cx", c.cx},
          {"cy", c.cy},                 {"radius", c.radius},       {"angle", c.angle}};
}

CurveSpec curve_from(const json& j) {
  CurveSpec c;
  Section s(j, "synth.curve");
  std::string kind = to_string(c.kind);
  s.get("kind", kind);
  try {
    c.kind = curve_kind_from_string(kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("synth.curve.kind: ") + e.what());
  }
  s.get("amplitude", c.amplitude);
  s.get("frequency", c.frequency);
  s.get("phase", c.phase);
  s.get("offset", c.offset);
  s.get("cx", c.cx);
  s.get("cy", c.cy);
  s.get("radius", c.radius);
  s.get("angle", c.angle);
  s.finish();
  return c;
}

SynthConfig synth_from(const json& j) {
  SynthConfig c;
  Section s(j, "synth");
  s.get("generator", c.generator);
  if (const auto* d = s.child("domain")) c.domain = rect_value(*d, "synth.domain");
  s.get("mesh_h", c.mesh_h);
  s.get("mode", c.mode);
  if (const auto* p = s.child("pieces")) {
    if (!p->is_array()) throw ConfigError("synth.pieces: expected an array");
    c.pieces.clear();
    for (const auto& e : *p) c.pieces.push_back(piece_from_json(e));
  }
  if (const auto* sh = s.child("sheets")) {
    if (!sh->is_array() || sh->size() != 3) throw ConfigError("synth.sheets: expected three [a, b, c] triples");
    for (std::size_t i = 0; i < 3; ++i) {
      const auto v = (*sh)[i].get<std::vector<double>>();
      if (v.size() != 3) throw ConfigError("synth.sheets: expected three [a, b, c] triples");
      c.sheets[i] = Sheet{v[0], v[1], v[2]};
    }
  }
  if (const auto* cu = s.child("curve")) c.curve = curve_from(*cu);
  if (const auto* ce = s.child("centre")) {
    const auto v = ce->get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("synth.centre: expected [x, y]");
    c.centre = {v[0], v[1]};
  }
  s.get("angles_deg", c.angles_deg);
  if (const auto* n = s.child("noise")) {
    Section ns(*n, "synth.noise");
    ns.get("value_sigma", c.noise.value_sigma);
    ns.get("curve_amplitude", c.noise.curve_amplitude);
    ns.get("seed", c.noise.seed);
    ns.finish();
  }
  s.finish();

  static const std::set<std::string> generators{"univariate", "ridge", "jump", "sectors"};
  if (!generators.count(c.generator)) throw ConfigError("synth.generator: unknown generator '" + c.generator + "'");
  if (c.mode != "min" && c.mode != "max") throw ConfigError("synth.mode: expected 'min' or 'max'");
  if (!(c.mesh_h > 0.0)) throw ConfigError("synth.mesh_h: must be positive");
  if (c.noise.value_sigma < 0.0 || c.noise.curve_amplitude < 0.0) throw ConfigError("synth.noise: negative amplitude");
  return c;
}

ProblemConfig problem_from(const json& j) {
  ProblemConfig c;
  Section s(j, "problem");
  s.get("kind", c.kind);
  s.get("samples", c.samples);
  if (const auto* w = s.child("window")) {
    if (w->is_null()) {
      c.window.reset();
    } else {
      c.window = rect_value(*w, "problem.window");
    }
  }
  s.get("mesh_h", c.mesh_h);
  s.get("delta", c.delta);
  if (const auto* g = s.child("grid_domain")) {
    if (g->is_null()) {
      c.grid_domain.reset();
    } else {
      c.grid_domain = rect_value(*g, "problem.grid_domain");
    }
  }
  s.get("variant", c.variant);
  s.get("distance_multiplier", c.distance_multiplier);
  s.get("band", c.band);
  s.get("exclude_label_boundaries", c.exclude_label_boundaries);
  s.get("extension_neighbors", c.extension_neighbors);
  s.get("outer_uses_fit_sets", c.outer_uses_fit_sets);
  s.get("minimum_norm_fits", c.minimum_norm_fits);
  s.get("fit_truncation", c.fit_truncation);
  s.get("redistance", c.redistance);
  s.get("midrange", c.midrange);
  s.get("dominant_curve", c.dominant_curve);
  s.get("guess_curve", c.guess_curve);
  if (const auto* g = s.child("guess_side")) {
    const auto v = g->get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("problem.guess_side: expected [x, y]");
    c.guess_side = {v[0], v[1]};
  }
  s.finish();
  try {
    problem_kind_from_string(c.kind);
    jump_variant_from_string(c.variant);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
  if (!(c.delta > 0.0)) throw ConfigError("problem.delta: must be positive");
  if (!(c.fit_truncation > 0.0 && c.fit_truncation < 1.0)) throw ConfigError("problem.fit_truncation: must lie in (0, 1)");
  return c;
}

DEConfig de_from(const json& j) {
  DEConfig c;
  Section s(j, "de");
  s.get("population", c.population);
  s.get("weight", c.weight);
  s.get("crossover", c.crossover);
  s.get("max_generations", c.max_generations);
  s.get("target_value", c.target_value);
  s.get("seed", c.seed);
  s.get("init_spread", c.init_spread);
  s.finish();
  return c;
}

ReportConfig report_from(const json& j) {
  ReportConfig c;
  Section s(j, "report");
  s.get("oversample", c.oversample);
  s.get("band_multiplier", c.band_multiplier);
  s.get("fail_above", c.fail_above);
  s.get("write_grid", c.write_grid);
  s.finish();
  if (!(c.oversample >= 1.0)) throw ConfigError("report.oversample: must be at least 1");
  return c;
}

BlendConfig blend_from(const json& j) {
  BlendConfig c;
  Section s(j, "blend");
  s.get("first", c.first);
  s.get("second", c.second);
  s.get("axis", c.axis);
  s.get("step", c.step);
  s.finish();
  if (c.axis != "x" && c.axis != "y") throw ConfigError("blend.axis: expected 'x' or 'y'");
  return c;
}

StudyConfig study_from(const json& j) {
  StudyConfig c;
  Section s(j, "study");
  s.get("h", c.h);
  s.get("seeds", c.seeds);
  s.get("warm_start", c.warm_start);
  s.get("spread_decay", c.spread_decay);
  s.get("generations", c.generations);
  s.get("floor", c.floor);
  s.finish();
  return c;
}

}  // namespace

json to_json(const Piece& piece) {
  if (const auto* poly = std::get_if<Polynomial>(&piece)) {
    json terms = json::array();
    for (const auto& t : poly->terms) terms.push_back({t.coeff, t.px, t.py});
    return {{"poly", terms}};
  }
  const auto& s = std::get<Spline1D>(piece);
  return {{"spline", {{"grid", to_json(s.grid())}, {"coeffs", std::vector<double>(s.coeffs().begin(), s.coeffs().end())}}}};
}

Piece piece_from_json(const json& j) {
  if (!j.is_object() || j.size() != 1) throw ConfigError("piece: expected {\"poly\": ...} or {\"spline\": ...}");
  try {
    if (j.contains("poly")) {
      Polynomial p;
      for (const auto& t : j.at("poly")) {
        if (!t.is_array() || t.size() != 3) throw ConfigError("piece: poly terms are [coeff, px, py]");
        p.terms.push_back({t[0].get<double>(), t[1].get<int>(), t[2].get<int>()});
      }
      return p;
    }
    if (j.contains("spline")) {
      const auto& s = j.at("spline");
      Section sec(s, "piece.spline");
      const json* g = sec.child("grid");
      const json* c = sec.child("coeffs");
      sec.finish();
      if (!g || !c) throw ConfigError("piece.spline: needs grid and coeffs");
      return Spline1D(knot_grid_from_json(*g), c->get<std::vector<double>>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("piece: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("piece: ") + e.what());
  } catch (const IoError& e) {
    throw ConfigError(std::string("piece: ") + e.what());
  }
  throw ConfigError("piece: expected {\"poly\": ...} or {\"spline\": ...}");
}

json to_json(const RunConfig& c) {
  json pieces = json::array();
  for (const auto& p : c.synth.pieces) pieces.push_back(to_json(p));
  json synth = {{"generator", c.synth.generator},
                {"domain", to_json(c.synth.domain)},
                {"mesh_h", c.synth.mesh_h},
                {"mode", c.synth.mode},
                {"pieces", pieces},
                {"sheets", {sheet_json(c.synth.sheets[0]), sheet_json(c.synth.sheets[1]), sheet_json(c.synth.sheets[2])}},
                {"curve", curve_json(c.synth.curve)},
                {"centre", {c.synth.centre.x, c.synth.centre.y}},
                {"angles_deg", c.synth.angles_deg},
                {"noise",
                 {{"value_sigma", c.synth.noise.value_sigma},
                  {"curve_amplitude", c.synth.noise.curve_amplitude},
                  {"seed", c.synth.noise.seed}}}};
  const auto& p = c.problem;
  json problem = {{"kind", p.kind},
                  {"samples", p.samples},
                  {"window", p.window ? to_json(*p.window) : json(nullptr)},
                  {"mesh_h", p.mesh_h},
                  {"delta", p.delta},
                  {"grid_domain", p.grid_domain ? to_json(*p.grid_domain) : json(nullptr)},
                  {"variant", p.variant},
                  {"distance_multiplier", p.distance_multiplier},
                  {"band", p.band},
                  {"exclude_label_boundaries", p.exclude_label_boundaries},
                  {"extension_neighbors", p.extension_neighbors},
                  {"outer_uses_fit_sets", p.outer_uses_fit_sets},
                  {"minimum_norm_fits", p.minimum_norm_fits},
                  {"fit_truncation", p.fit_truncation},
                  {"redistance", p.redistance},
                  {"midrange", p.midrange},
                  {"dominant_curve", p.dominant_curve},
                  {"guess_curve", p.guess_curve},
                  {"guess_side", {p.guess_side.x, p.guess_side.y}}};
  json de = {{"population", c.de.population},       {"weight", c.de.weight},
             {"crossover", c.de.crossover},         {"max_generations", c.de.max_generations},
             {"target_value", c.de.target_value},   {"seed", c.de.seed},
             {"init_spread", c.de.init_spread}};
  json report = {{"oversample", c.report.oversample},
                 {"band_multiplier", c.report.band_multiplier},
                 {"fail_above", c.report.fail_above ? json(*c.report.fail_above) : json(nullptr)},
                 {"write_grid", c.report.write_grid}};
  json blend = {{"first", c.blend.first}, {"second", c.blend.second}, {"axis", c.blend.axis}, {"step", c.blend.step}};
  json study = {{"h", c.study.h},
                {"seeds", c.study.seeds},
                {"warm_start", c.study.warm_start},
                {"spread_decay", c.study.spread_decay},
                {"generations", c.study.generations},
                {"floor", c.study.floor}};
  return {{"synth", synth}, {"problem", problem}, {"de", de}, {"report", report}, {"blend", blend}, {"study", study}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Section s(j, "config");
  if (const auto* v = s.child("synth")) c.synth = synth_from(*v);
  if (const auto* v = s.child("problem")) c.problem = problem_from(*v);
  if (const auto* v = s.child("de")) c.de = de_from(*v);
  if (const auto* v = s.child("report")) c.report = report_from(*v);
  if (const auto* v = s.child("blend")) c.blend = blend_from(*v);
  if (const auto* v = s.child("study")) c.study = study_from(*v);
  s.finish();
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("--set: empty path component in '" + key + "'");
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError("--set: '" + key + "' descends into a non-object");
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    const std::string text = read_text_file(path);
    doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ConfigError(path + ": invalid JSON");
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return run_config_from_json(doc);
}

std::vector<Piece> default_pieces(const std::string& generator) {
  if (generator == "univariate") {
    const KnotGrid1D grid(-3, 3, 1.5);
    return {Spline1D(grid, {2, 1, 0.2, -0.8, -2}), Spline1D(grid, {-2.5, -1, 0.4, 1.1, 2.2})};
  }
  if (generator == "jump") {
    return {Polynomial{{{2, 0, 0}, {0.5, 1, 0}, {-0.3, 0, 1}, {0.1, 2, 2}}},
            Polynomial{{{-0.5, 0, 0}, {0.2, 1, 0}, {0.4, 0, 1}, {-0.05, 2, 1}}}};
  }
  if (generator == "sectors") {
    return {Polynomial{{{0, 0, 0}}}, Polynomial{{{5, 0, 0}}}, Polynomial{{{10, 0, 0}}}};
  }
  return {};
}

}  // namespace pws
