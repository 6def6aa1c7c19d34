#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "ahlfors/cli.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace ahlfors;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text, Stage stage = Stage::all) {
  return build_config(read_config_text(text), stage);
}

std::string field_of(const std::string& text, Stage stage = Stage::all) {
  try {
    parse(text, stage);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ahlfors_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

// Chordal distance on the sphere of area 1, written out independently.
double chordal(std::complex<double> z, std::complex<double> w) {
  return std::abs(z - w) / std::sqrt(std::numbers::pi * (1 + std::norm(z)) * (1 + std::norm(w)));
}

}  // namespace

TEST_CASE("config text: comments, duplicates, malformed lines") {
  const ConfigMap m = read_config_text("# header\nmap = z^2   # trailing\n\n  seed=4\n");
  CHECK(m.size() == 2);
  CHECK(m.at("map").value == "z^2");
  CHECK(m.at("map").line == 2);
  CHECK(m.at("seed").value == "4");
  CHECK_THROWS_AS(read_config_text("map = z\nmap = z^2\n"), ConfigError);
  CHECK_THROWS_AS(read_config_text("map z\n"), ConfigError);
  CHECK_THROWS_AS(read_config_text(" = 3\n"), ConfigError);
}

TEST_CASE("missing config file") {
  try {
    read_config_file("/nonexistent/dir/missing.cfg");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("not found") != std::string::npos);
  }
}

TEST_CASE("defaults") {
  const ExperimentConfig c = parse("map = exp(z)\n");
  REQUIRE(c.disks.size() == 3);
  CHECK(c.disks[0].center.z == std::complex<double>(1.0));
  CHECK(c.disks[1].center.z == std::complex<double>(-1.0));
  CHECK(c.disks[2].center.infinite);
  CHECK(c.disks[0].radius == doctest::Approx(0.2 / std::sqrt(std::numbers::pi)));
  CHECK(c.resolution == 1024);
  CHECK(c.seed == 1);
  CHECK_FALSE(c.graph);
  CHECK_FALSE(c.chart);
  // Without a graph or chart only the verifiers that can be fed are enabled.
  CHECK(c.verifiers == std::vector<std::string>{"mean_degree", "island_theorem", "rh_inequality"});
  CHECK(parse("map = z\n", Stage::profile).verifiers.empty());
  CHECK(parse("map = z\nverify = none\n").verifiers.empty());
}

TEST_CASE("validation errors name the field") {
  CHECK(field_of("seed = 3\n") == "map");
  CHECK(field_of("map = z +\n") == "map");
  CHECK(field_of("map = z\ncolour = red\n") == "colour");
  CHECK(field_of("map = z\ntarget.genus = 1\n") == "target.genus");
  CHECK(field_of("map = z\ntarget.genus = 0\n") == "");
  CHECK(field_of("map = z\nresolution = 16\n") == "resolution");
  CHECK(field_of("map = z\nradii.mode = geometric\n") == "radii.mode");
  CHECK(field_of("map = z\nradii.list = 1, -2\n") == "radii.list");
  CHECK(field_of("map = z\nradii.min = 5\nradii.max = 2\n") == "radii.max");
  CHECK(field_of("map = z\ndisk.0.center = 1+i\ndisk.0.radius = 0.4\n") == "disk.0.radius");
  CHECK(field_of("map = z\ndisk.0.center = z\n") == "disk.0.center");
  CHECK(field_of("map = z\ndisk.1.center = 1\n") == "disk.1.center");
  CHECK(field_of("map = z\nverify = everything\n") == "verify");
  CHECK(field_of("map = z\nverify = arcs\n", Stage::arcs) == "chart");
  CHECK(field_of("map = z\n", Stage::graph) == "graph.node");
  CHECK(field_of("map = z\nchart.a = 1\nchart.lines = 50\n") == "chart.lines");
  CHECK(field_of("map = z\nsvg = maybe\n") == "svg");
  CHECK(field_of("map = z\nslack.c1 = four\n") == "slack.c1");
}

TEST_CASE("island verifiers need exactly 3 disks") {
  const std::string two = "map = z^5\ndisk.0.center = 0\ndisk.1.center = inf\n";
  try {
    parse(two + "verify = island_theorem\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("exactly 3 disks") != std::string::npos);
  }
  // Without an island verifier two disks are fine.
  CHECK(parse(two + "verify = rh_inequality\n").disks.size() == 2);
}

TEST_CASE("island_in_component needs one disk per face") {
  const std::string base = "map = z\ngraph.node = 0.1+0.05i\ngraph.scale = 1\n";
  CHECK(field_of(base + "disk.0.center = 1.1+0.05i\ndisk.0.radius = 0.05\n"
                        "disk.1.center = -0.9+0.05i\ndisk.1.radius = 0.05\n"
                        "disk.2.center = inf\n") == "");
  CHECK(field_of(base + "disk.0.center = 1.1+0.05i\ndisk.0.radius = 0.02\n"
                        "disk.1.center = 0.9+0.05i\ndisk.1.radius = 0.02\n"
                        "disk.2.center = inf\n") == "disk");
}

TEST_CASE("property: disks are accepted iff pairwise disjoint") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.5, 1.5), rad(0.01, 0.2);
  int accepted = 0, rejected = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::complex<double>> c;
    std::vector<double> rho;
    std::string text = "map = z\nverify = none\n";
    const int n = 2 + trial % 3;
    for (int k = 0; k < n; ++k) {
      c.emplace_back(u(rng), u(rng));
      rho.push_back(rad(rng));
      char buf[160];
      std::snprintf(buf, sizeof buf, "disk.%d.center = %.17g%+.17gi\ndisk.%d.radius = %.17g\n", k,
                    c.back().real(), c.back().imag(), k, rho.back());
      text += buf;
    }
    bool disjoint = true, tie = false;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double gap = chordal(c[i], c[j]) - rho[i] - rho[j];
        tie = tie || std::abs(gap) < 1e-9;
        disjoint = disjoint && gap > 0;
      }
    if (tie) continue;  // rounding decides
    const bool ok = field_of(text).empty();
    CAPTURE(text);
    CHECK(ok == disjoint);
    (ok ? accepted : rejected)++;
  }
  CHECK(accepted > 20);
  CHECK(rejected > 20);
}

TEST_CASE("property: key order and comments do not change the config") {
  std::vector<std::string> lines = {
      "map = z^3",           "radii.list = 2, 5",       "disk.0.center = 0.3+0.5i",
      "disk.0.radius = 0.02", "disk.1.center = -0.3+0.5i", "disk.1.radius = 0.02",
      "disk.2.center = inf", "graph.node = 0.5i",       "graph.scale = 0.3",
      "chart.a = 1",         "chart.b = -2-1i",         "seed = 9",
      "resolution = 256",    "slack.c2 = 40"};
  const ExperimentConfig ref = parse([&] {
    std::string s;
    for (const auto& l : lines) s += l + "\n";
    return s;
  }());
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    std::shuffle(lines.begin(), lines.end(), rng);
    std::string s = "# shuffled\n";
    for (const auto& l : lines) s += "  " + l + ((rng() & 1) ? "   # note\n" : "\n");
    const ExperimentConfig c = parse(s);
    CHECK(c.map == ref.map);
    CHECK(c.radii.list == ref.radii.list);
    CHECK(c.disks.size() == ref.disks.size());
    CHECK(c.graph->node == ref.graph->node);
    CHECK(c.chart->b == ref.chart->b);
    CHECK(c.verifiers == ref.verifiers);
    CHECK(c.constants.c2 == 40.0);
    CHECK(c.seed == 9);
  }
}

TEST_CASE("run: z^5 islands example") {
  ExperimentConfig c = parse(
      "map = z^5\nradii.min = 1\nradii.max = 10\nradii.count = 10\n"
      "disk.0.center = 0\ndisk.1.center = 1\ndisk.2.center = inf\n"
      "verify = island_theorem\nsvg = false\n",
      Stage::islands);
  c.out = scratch("z5").string();
  const RunResult res = run(c, Stage::islands);
  CHECK(res.exit_code == 0);
  REQUIRE(res.report.rows.size() == 10);
  const ReportRow& last = res.report.rows.back();
  CHECK(last.r == 10.0);
  CHECK(*last.island_count == 6);
  CHECK(last.a == doctest::Approx(5.0).epsilon(1e-6));

  const auto j = nlohmann::json::parse(res.summary);
  CHECK(j["exit_code"] == 0);
  CHECK(j["stage"] == "islands");
  CHECK(j["verifiers"]["island_theorem"]["pass"] == "pass");
  CHECK(j["rows"].back()["island_count"] == 6);
  CHECK(j["config"]["map"] == "z^5");
  CHECK(j["config"]["disks"].size() == 3);
  CHECK(slurp(fs::path(c.out) / "report.csv") == res.csv);
  CHECK(slurp(fs::path(c.out) / "summary.json") == res.summary);
}

TEST_CASE("run: length-area radii have decreasing l/a") {
  ExperimentConfig c = parse(
      "map = exp(z)\nradii.mode = length-area\nradii.min = 5\nradii.max = 40\nradii.count = 4\n"
      "verify = none\nsvg = false\n",
      Stage::profile);
  c.out = scratch("exp").string();
  const RunResult res = run(c, Stage::profile);
  CHECK(res.exit_code == 0);
  REQUIRE(res.report.rows.size() == 4);
  for (std::size_t k = 1; k < res.report.rows.size(); ++k)
    CHECK(res.report.rows[k].ratio() < res.report.rows[k - 1].ratio());
}

TEST_CASE("run: numeric errors give exit code 3") {
  // Every line of the thin band crosses the boundary image at 1 degree.
  const double th = std::numbers::pi / 2 + std::numbers::pi / 180;
  char a[96];
  std::snprintf(a, sizeof a, "%.17g%+.17gi", std::cos(th), std::sin(th));
  ExperimentConfig c = parse(std::string("map = z\nradii.list = 1\nchart.a = ") + a +
                                 "\nchart.b = " + a +
                                 "\nchart.c = -1\nchart.d = 1\nchart.x_range = -0.3, 0.3\n"
                                 "chart.t_range = -0.001, 0.001\nchart.lines = 100\nsvg = false\n",
                             Stage::arcs);
  c.out = scratch("numeric").string();
  const RunResult res = run(c, Stage::arcs);
  CHECK(res.exit_code == 3);
  const auto j = nlohmann::json::parse(res.summary);
  REQUIRE(j["errors"].size() == 1);
  CHECK(j["errors"][0]["stage"] == "arcs");
  CHECK(j["verifiers"]["arcs"]["pass"] == "fail");
}

TEST_CASE("run: a failing verifier gives exit code 1") {
  // A zero slack budget cannot absorb the finite-radius defect of l/a.
  ExperimentConfig c = parse(
      "map = exp(z)\nradii.list = 7\ngraph.node = 0.1+0.13i\ngraph.scale = 1.5\n"
      "verify = asymptotic_equality\nslack.c_equality = 0\nsvg = false\n",
      Stage::graph);
  c.out = scratch("fail").string();
  const RunResult res = run(c, Stage::graph);
  CHECK(res.exit_code == 1);
}

TEST_CASE("run: identical config and seed give identical bytes") {
  ExperimentConfig c = parse(
      "map = z^3\nradii.list = 2, 5\ndisk.0.center = 0.3+0.5i\ndisk.0.radius = 0.02\n"
      "disk.1.center = -0.3+0.5i\ndisk.1.radius = 0.02\ndisk.2.center = inf\n"
      "graph.node = 0.5i\ngraph.scale = 0.3\nchart.a = 1\nchart.b = -2-1i\n"
      "resolution = 256\nsamples = 500\nseed = 3\n");
  c.out = scratch("det").string();
  const RunResult one = run(c, Stage::all);
  const std::string csv = slurp(fs::path(c.out) / "report.csv");
  const std::string js = slurp(fs::path(c.out) / "summary.json");
  std::vector<std::string> svgs;
  for (const std::string& f : one.files) svgs.push_back(slurp(f));
  const RunResult two = run(c, Stage::all);
  CHECK(one.exit_code == two.exit_code);
  CHECK(csv == slurp(fs::path(c.out) / "report.csv"));
  CHECK(js == slurp(fs::path(c.out) / "summary.json"));
  REQUIRE(one.files == two.files);
  for (std::size_t k = 0; k < svgs.size(); ++k) CHECK(svgs[k] == slurp(two.files[k]));
  CHECK(one.files.size() == 2 + 3 * 2);
}
