#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "ahlfors/cli.hpp"

namespace ahlfors {

ConfigError::ConfigError(std::string field, const std::string& what)
    : Error(field + ": " + what), field_(std::move(field)) {}

const char* to_string(Stage s) {
  switch (s) {
    case Stage::profile:
      return "profile";
    case Stage::islands:
      return "islands";
    case Stage::graph:
      return "graph";
    case Stage::arcs:
      return "arcs";
    case Stage::all:
      return "verify-all";
  }
  return "?";
}

const std::vector<std::string> kVerifierNames = {
    "mean_degree",    "island_theorem",      "rh_inequality", "asymptotic_equality",
    "euler_identity", "island_in_component", "arcs"};

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const ConfigMap& m) : m_(m) {}

  const ConfigEntry* find(const std::string& key) {
    used_.insert(key);
    const auto it = m_.find(key);
    return it == m_.end() ? nullptr : &it->second;
  }
  bool has(const std::string& key) const { return m_.count(key) > 0; }

  double number(const std::string& key, double fallback) {
    const ConfigEntry* e = find(key);
    return e ? to_number(key, e->value) : fallback;
  }
  long long integer(const std::string& key, long long fallback) {
    const ConfigEntry* e = find(key);
    if (!e) return fallback;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(e->value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != e->value.size())
      throw ConfigError(key, "expected an integer, got '" + e->value + "'");
    return v;
  }
  std::string text(const std::string& key, const std::string& fallback) {
    const ConfigEntry* e = find(key);
    return e ? e->value : fallback;
  }
  bool flag(const std::string& key, bool fallback) {
    const ConfigEntry* e = find(key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
    if (e->value == "false" || e->value == "0" || e->value == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + e->value + "'");
  }
  std::pair<double, double> range(const std::string& key, std::pair<double, double> fallback) {
    const ConfigEntry* e = find(key);
    if (!e) return fallback;
    const auto parts = split_list(e->value);
    if (parts.size() != 2) throw ConfigError(key, "expected two numbers 'lo, hi'");
    const double lo = to_number(key, parts[0]), hi = to_number(key, parts[1]);
    if (!(lo < hi)) throw ConfigError(key, "expected lo < hi");
    return {lo, hi};
  }
  cplx constant(const std::string& key, cplx fallback) {
    const ConfigEntry* e = find(key);
    if (!e) return fallback;
    const SpherePoint p = parse_sphere_point(key, e->value);
    if (p.infinite) throw ConfigError(key, "must be finite");
    return p.z;
  }

  // Keys present in the file but never asked for.
  void reject_unknown() const {
    for (const auto& [key, entry] : m_)
      if (!used_.count(key)) {
        std::string where = entry.line > 0 ? " (line " + std::to_string(entry.line) + ")" : "";
        throw ConfigError(key, "unknown key" + where);
      }
  }

  static double to_number(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v))
      throw ConfigError(key, "expected a number, got '" + s + "'");
    return v;
  }

 private:
  const ConfigMap& m_;
  std::set<std::string> used_;
};

std::vector<std::string> candidates(Stage stage) {
  switch (stage) {
    case Stage::profile:
      return {};
    case Stage::islands:
      return {"island_theorem", "rh_inequality"};
    case Stage::graph:
      return {"asymptotic_equality", "euler_identity", "island_in_component"};
    case Stage::arcs:
      return {"arcs"};
    case Stage::all:
      return kVerifierNames;
  }
  return {};
}

}  // namespace

ConfigMap read_config_text(std::string_view text) {
  ConfigMap out;
  std::stringstream ss{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(ss, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config", "line " + std::to_string(n) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("config", "line " + std::to_string(n) + ": empty key");
    if (out.count(key))
      throw ConfigError(key, "duplicate key (lines " + std::to_string(out[key].line) + " and " +
                                 std::to_string(n) + ")");
    out[key] = {value, n};
  }
  return out;
}

ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "config file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return read_config_text(ss.str());
}

SpherePoint parse_sphere_point(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "infinity") return SpherePoint::infinity();
  try {
    const CompiledMap c(t);
    const Value v0 = c.f().evaluate(0.0), v1 = c.f().evaluate(1.0);
    if (!v0.is_finite() || !v1.is_finite() || v0.z != v1.z)
      throw ConfigError(field, "expected a complex constant, got '" + t + "'");
    return SpherePoint::at(v0.z);
  } catch (const ParseError& e) {
    throw ConfigError(field, "cannot read '" + t + "' as a complex number: " + e.what());
  }
}

ExperimentConfig build_config(const ConfigMap& entries, Stage stage) {
  Reader rd(entries);
  ExperimentConfig cfg;

  cfg.map = rd.text("map", "");
  if (cfg.map.empty()) throw ConfigError("map", "required (use --map or a 'map =' line)");
  try {
    CompiledMap probe(cfg.map);
  } catch (const ParseError& e) {
    throw ConfigError("map", e.what());
  }

  if (rd.integer("target.genus", 0) != 0)
    throw ConfigError("target.genus", "only the sphere (genus 0) is supported");

  // Radii.
  cfg.radii.mode = rd.text("radii.mode", cfg.radii.mode);
  if (cfg.radii.mode != "explicit" && cfg.radii.mode != "length-area")
    throw ConfigError("radii.mode", "expected 'explicit' or 'length-area'");
  if (const ConfigEntry* e = rd.find("radii.list")) {
    for (const std::string& s : split_list(e->value))
      cfg.radii.list.push_back(Reader::to_number("radii.list", s));
    if (cfg.radii.list.empty()) throw ConfigError("radii.list", "empty list");
    if (cfg.radii.mode != "explicit")
      throw ConfigError("radii.list", "only used with radii.mode = explicit");
  }
  cfg.radii.min = rd.number("radii.min", cfg.radii.min);
  cfg.radii.max = rd.number("radii.max", cfg.radii.max);
  cfg.radii.count = static_cast<int>(rd.integer("radii.count", cfg.radii.count));
  for (double r : cfg.radii.list)
    if (!(r > 0.0)) throw ConfigError("radii.list", "radii must be positive");
  if (cfg.radii.list.empty()) {
    if (!(cfg.radii.min > 0.0)) throw ConfigError("radii.min", "must be positive");
    if (cfg.radii.max < cfg.radii.min) throw ConfigError("radii.max", "must be >= radii.min");
    if (cfg.radii.mode == "length-area" && !(cfg.radii.max > cfg.radii.min))
      throw ConfigError("radii.max", "must exceed radii.min");
    if (cfg.radii.count < 1) throw ConfigError("radii.count", "must be at least 1");
  }

  // Disks: disk.0, disk.1, ... with no gaps.
  const double standard = 0.2 / std::sqrt(std::numbers::pi);
  for (int k = 0;; ++k) {
    const std::string base = "disk." + std::to_string(k);
    if (!rd.has(base + ".center")) {
      if (rd.has(base + ".radius")) throw ConfigError(base + ".center", "required");
      break;
    }
    SphericalDisk d;
    d.center = parse_sphere_point(base + ".center", rd.find(base + ".center")->value);
    d.radius = rd.number(base + ".radius", standard);
    try {
      d.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(base + ".radius", e.what());
    }
    cfg.disks.push_back(d);
  }
  if (cfg.disks.empty())
    cfg.disks = {{SpherePoint::at(1.0), standard},
                 {SpherePoint::at(-1.0), standard},
                 {SpherePoint::infinity(), standard}};
  for (std::size_t i = 0; i < cfg.disks.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.disks.size(); ++j)
      if (chordal_distance(cfg.disks[i].center, cfg.disks[j].center) <=
          cfg.disks[i].radius + cfg.disks[j].radius)
        throw ConfigError("disk." + std::to_string(j), "overlaps disk." + std::to_string(i) +
                                                           "; disks must be disjoint");

  // Figure-eight graph.
  if (rd.has("graph.node") || rd.has("graph.scale") || rd.has("graph.kind")) {
    if (rd.text("graph.kind", "figure8") != "figure8")
      throw ConfigError("graph.kind", "only 'figure8' is supported");
    GraphSpec g;
    if (!rd.has("graph.node")) throw ConfigError("graph.node", "required");
    g.node = rd.constant("graph.node", 0.0);
    g.scale = rd.number("graph.scale", 1.0);
    if (!(g.scale > 0.0)) throw ConfigError("graph.scale", "must be positive");
    cfg.graph = g;
  }

  // Chart.
  static const char* chart_keys[] = {"chart.a", "chart.b", "chart.c", "chart.d", "chart.x_range",
                                     "chart.t_range", "chart.lines"};
  if (std::any_of(std::begin(chart_keys), std::end(chart_keys),
                  [&](const char* k) { return rd.has(k); })) {
    RectangleChart ch;
    ch.a = rd.constant("chart.a", ch.a);
    ch.b = rd.constant("chart.b", ch.b);
    ch.c = rd.constant("chart.c", ch.c);
    ch.d = rd.constant("chart.d", ch.d);
    std::tie(ch.x0, ch.x1) = rd.range("chart.x_range", {ch.x0, ch.x1});
    std::tie(ch.t0, ch.t1) = rd.range("chart.t_range", {ch.t0, ch.t1});
    try {
      ch.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("chart", e.what());
    }
    cfg.lines = static_cast<int>(rd.integer("chart.lines", cfg.lines));
    if (cfg.lines < 100) throw ConfigError("chart.lines", "must be at least 100");
    cfg.chart = ch;
  }

  cfg.resolution = static_cast<int>(rd.integer("resolution", cfg.resolution));
  if (cfg.resolution < 32 || cfg.resolution > 8192)
    throw ConfigError("resolution", "must lie in [32, 8192]");
  cfg.tolerance = rd.number("tolerance", cfg.tolerance);
  if (!(cfg.tolerance > 0.0)) throw ConfigError("tolerance", "must be positive");
  const long long seed = rd.integer("seed", static_cast<long long>(cfg.seed));
  if (seed < 0) throw ConfigError("seed", "must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  const long long samples = rd.integer("samples", static_cast<long long>(cfg.samples));
  if (samples < 1) throw ConfigError("samples", "must be at least 1");
  cfg.samples = static_cast<std::size_t>(samples);
  cfg.out = rd.text("out", cfg.out);
  if (cfg.out.empty()) throw ConfigError("out", "empty output directory");
  cfg.svg = rd.flag("svg", cfg.svg);

  cfg.constants.c1 = rd.number("slack.c1", cfg.constants.c1);
  cfg.constants.c2 = rd.number("slack.c2", cfg.constants.c2);
  cfg.constants.c_equality = rd.number("slack.c_equality", cfg.constants.c_equality);
  cfg.constants.c_rh = rd.number("slack.c_rh", cfg.constants.c_rh);

  // Verifiers: "auto" enables every check of the stage that the config can
  // feed; an explicit list must be satisfiable.
  const std::vector<std::string> cand = candidates(stage);
  const std::string wanted = rd.text("verify", "auto");
  auto feasible = [&](const std::string& v) -> std::string {
    if ((v == "asymptotic_equality" || v == "euler_identity" || v == "island_in_component") &&
        !cfg.graph)
      return "graph.node";
    if (v == "arcs" && !cfg.chart) return "chart";
    return {};
  };
  if (wanted == "auto") {
    for (const std::string& v : cand)
      if (feasible(v).empty()) cfg.verifiers.push_back(v);
  } else if (wanted != "none") {
    const auto list = split_list(wanted);
    for (const std::string& v : list)
      if (std::find(kVerifierNames.begin(), kVerifierNames.end(), v) == kVerifierNames.end())
        throw ConfigError("verify", "unknown verifier '" + v + "'");
    for (const std::string& v : cand) {
      if (std::find(list.begin(), list.end(), v) == list.end()) continue;
      if (const std::string missing = feasible(v); !missing.empty())
        throw ConfigError(missing, "required by verifier " + v);
      cfg.verifiers.push_back(v);
    }
  }
  auto enabled = [&](const char* v) {
    return std::find(cfg.verifiers.begin(), cfg.verifiers.end(), v) != cfg.verifiers.end();
  };
  if ((enabled("island_theorem") || enabled("island_in_component")) && cfg.disks.size() != 3)
    throw ConfigError("disk", "exactly 3 disks required by the island verifiers, got " +
                                  std::to_string(cfg.disks.size()));
  if (enabled("island_in_component")) {
    const ImplicitCurve curve = cfg.graph->curve();
    std::set<int> faces;
    for (const SphericalDisk& d : cfg.disks) faces.insert(curve.face(d.center));
    if (faces.size() != 3)
      throw ConfigError("disk", "island_in_component needs one disk centre in each face of the "
                                "figure-eight (outside, lobe near node - scale, lobe near node + "
                                "scale)");
  }
  if (stage == Stage::graph && !cfg.graph)
    throw ConfigError("graph.node", "required for the graph stage");
  if (stage == Stage::arcs && !cfg.chart) throw ConfigError("chart", "required for the arcs stage");

  rd.reject_unknown();
  return cfg;
}

}  // namespace ahlfors
