#pragma once

// Experiment configuration and the pipeline behind the ahlfors_lab tool.
//
// Config files are flat `key = value` lines with dotted section names and
// `#` comments:
//
//   map = exp(z)
//   radii.mode = length-area      # or explicit
//   radii.min = 5
//   radii.max = 40
//   radii.count = 6
//   disk.0.center = 1             # complex constant or inf
//   disk.0.radius = 0.1128        # chordal; defaults to 0.2/sqrt(pi)
//   graph.node = 0.1+0.13i
//   graph.scale = 1.5
//   chart.a = 1                   # Moebius chart (a w + b)/(c w + d)
//   chart.x_range = -0.3, 0.3
//   chart.t_range = -0.1, 0.1
//
// Other keys: radii.list, graph.kind, chart.b/c/d, chart.lines, resolution,
// tolerance, seed, samples, out, svg, verify, target.genus, slack.c1,
// slack.c2, slack.c_equality, slack.c_rh.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ahlfors/verify.hpp"

namespace ahlfors {

// Invalid configuration; field is the dotted key at fault.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Stage { profile, islands, graph, arcs, all };
const char* to_string(Stage s);

// Raw key/value pairs with the line they came from (0 for overrides).
struct ConfigEntry {
  std::string value;
  int line = 0;
};
using ConfigMap = std::map<std::string, ConfigEntry>;

ConfigMap read_config_text(std::string_view text);
// Throws ConfigError("config", ...) when the file cannot be read.
ConfigMap read_config_file(const std::string& path);

struct ExperimentConfig {
  std::string map;

  struct Radii {
    std::string mode = "explicit";  // explicit | length-area
    std::vector<double> list;       // explicit mode; empty means linear min..max
    double min = 1.0, max = 10.0;
    int count = 10;
  } radii;

  std::vector<SphericalDisk> disks;
  std::optional<GraphSpec> graph;
  std::optional<RectangleChart> chart;
  int lines = 200;  // sampled translates for the perturbation choice

  int resolution = 1024;
  double tolerance = 1e-10;
  std::uint64_t seed = 1;
  std::size_t samples = 2000;
  std::string out = "ahlfors_out";
  bool svg = true;
  std::vector<std::string> verifiers;  // enabled, in pipeline order
  SlackConstants constants;
};

extern const std::vector<std::string> kVerifierNames;

// Parses, fills defaults and validates for the given stage. Throws
// ConfigError naming the offending key.
ExperimentConfig build_config(const ConfigMap& entries, Stage stage);

// Complex constant such as "0.1+0.13i", or infinity for "inf".
SpherePoint parse_sphere_point(const std::string& field, const std::string& text);

struct RunResult {
  int exit_code = 0;  // 0 pass, 1 a verifier failed, 3 a numeric error
  ExperimentReport report;
  std::vector<Verdict> verdicts;
  std::string csv;
  std::string summary;             // JSON
  std::vector<std::string> log;    // console lines, ordered by radius
  std::vector<std::string> files;  // written paths
};

// Runs the stages in pipeline order and writes report.csv, summary.json and
// the SVG renders into config.out (created if missing).
RunResult run(const ExperimentConfig& config, Stage stage);

}  // namespace ahlfors
