// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ahlfors/cli.hpp"

using namespace ahlfors;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrtPi = std::sqrt(kPi);
const double kStd = 0.2 / kSqrtPi;

double rel(double x, double y) { return std::abs(x - y) / std::abs(y); }

// z^d on |z| < r.
double zd_area(int d, double r) {
  const double p = std::pow(r, 2 * d);
  return d * p / (1 + p);
}
double zd_length(int d, double r) {
  const double p = std::pow(r, 2 * d);
  return 2 * kSqrtPi * d * std::pow(r, d) / (1 + p);
}

SphericalDisk disk(cplx c, double rho = kStd) { return {SpherePoint::at(c), rho}; }
SphericalDisk disk_inf() { return {SpherePoint::infinity(), kStd}; }

struct Criterion {
  int id;
  const char* title;
  std::function<bool(std::string&)> body;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Coarea results of every select_perturbation call made below.
std::vector<std::pair<double, double>> g_coarea;

bool coarea_ok(double lhs, double rhs) {
  return std::abs(lhs - rhs) <= 0.02 * std::max(rhs, 1.0);
}

bool metric_oracles(std::string& note) {
  const CompiledMap id("z");
  bool ok = rel(area(id, 1.0), 0.5) < 1e-6 && rel(boundary_length(id, 1.0), kSqrtPi) < 1e-6;
  double worst = 0.0;
  for (int d : {2, 3, 5}) {
    const CompiledMap m("z^" + std::to_string(d));
    for (double r : {1.0, 2.0, 10.0}) {
      worst = std::max({worst, rel(area(m, r), zd_area(d, r)),
                        rel(boundary_length(m, r), zd_length(d, r))});
    }
  }
  note = fmt("a_z(1)=%.9g l_z(1)=%.9g, worst z^d relative error %.2e", area(id, 1.0),
             boundary_length(id, 1.0), worst);
  return ok && worst < 1e-6;
}

bool cauchy_schwarz(std::string& note) {
  bool ok = true;
  double worst_eq = 0.0;
  int checked = 0;
  for (const char* src : {"z", "z^2", "z^3", "z^5", "exp(z)", "sin(z)", "z^2 - z",
                          "(z^2-1)/(z^2+1)"}) {
    const CompiledMap m(src);
    const bool symmetric = std::string(src).find_first_of("-+e(") == std::string::npos;
    for (double r = 0.3; r <= 30.0; r *= 1.5) {
      const double l = boundary_length(m, r), da = area_derivative(m, r);
      const double rhs = 2 * kPi * r * da;
      ok = ok && l * l <= rhs * (1 + 1e-6) + 1e-300;
      if (symmetric && l > 1e-100) worst_eq = std::max(worst_eq, std::abs(l * l - rhs) / (l * l));
      ++checked;
    }
  }
  note = fmt("%d (map, r) pairs, worst z^d equality defect %.2e", checked, worst_eq);
  return ok && worst_eq <= 1e-4;
}

bool certificate(std::string& note) {
  const Certificate c = lengtharea_certificate(CompiledMap("z"), 1.0, 1e3);
  const Certificate c2 = lengtharea_certificate(CompiledMap("z^2"), 1.0, 30.0);
  const Certificate ce = lengtharea_certificate(CompiledMap("exp(z)"), 1.0, 30.0);
  note = fmt("z: %.6f vs 2pi, bound %.6f; z^2: %.4f <= %.4f; exp: %.4f <= %.4f", c.integral,
             c.bound, c2.integral, c2.bound, ce.integral, ce.bound);
  return rel(c.integral, 2 * kPi) < 0.01 && rel(c.bound, 4 * kPi) < 1e-9 &&
         c2.integral <= c2.bound && ce.integral <= ce.bound;
}

bool mean_degree_check(std::string& note) {
  const MeanDegree z3 = mean_degree(CompiledMap("z^3"), 10.0, 2000, 1);
  const double a3 = zd_area(3, 10.0);
  const CompiledMap e("exp(z)");
  const MeanDegree ex = mean_degree(e, 20.0, 2000, 2);
  const double ae = area(e, 20.0);
  note = fmt("z^3: %.4f +- %.4f vs %.6f; exp: %.4f vs %.4f", z3.mean, z3.stderr_, a3, ex.mean, ae);
  return std::abs(z3.mean - a3) <= std::max(3 * z3.stderr_, 0.01 * a3) &&
         std::abs(ex.mean - ae) <= 0.05 * ae;
}

bool islands_check(std::string& note) {
  const CompiledMap q("z^5");
  const SphericalDisk std3[] = {disk(0.0), disk(1.0), disk_inf()};
  ReportRow row;
  row.r = 10.0, row.a = area(q, 10.0), row.l = boundary_length(q, 10.0), row.resolution = 1024;
  const auto s = measure_islands(row, q, std3);
  const bool z5 = s[0].islands.size() == 1 && s[1].islands.size() == 5 && s[2].islands.empty() &&
                  *row.island_count >= row.a;

  const CompiledMap e("exp(z)");
  const SphericalDisk pm[] = {disk(1.0), disk(-1.0), disk_inf()};
  bool stable = true;
  int counts[2] = {0, 0};
  for (int k = 0; k < 2; ++k) {
    ReportRow er;
    er.r = 20.0, er.a = area(e, 20.0), er.l = boundary_length(e, 20.0);
    er.resolution = 1024 << k;
    measure_islands(er, e, pm);
    counts[k] = *er.island_count;
    ReportRow qr = row;
    qr.resolution = 1024 << k;
    measure_islands(qr, q, std3);
    stable = stable && *qr.island_count == 6;
  }
  stable = stable && counts[0] == counts[1];
  note = fmt("z^5: (%zu,%zu,%zu) i=%d a=%.4f; exp: i=%d at 1024, %d at 2048", s[0].islands.size(),
             s[1].islands.size(), s[2].islands.size(), *row.island_count, row.a, counts[0],
             counts[1]);
  return z5 && counts[0] == 13 && stable;
}

bool equality_check(std::string& note) {
  ReportRow row;
  const CompiledMap z3("z^3");
  row.r = 10.0, row.a = area(z3, 10.0), row.l = boundary_length(z3, 10.0), row.resolution = 1024;
  measure_graph(row, z3, {{0.0, 0.5}, 0.3});

  const CompiledMap e("exp(z)");
  ExperimentReport rep = start_report(e, select_radii(e, 5.0, 40.0, 6), 1024);
  measure_graph(rep, e, {{0.1, 0.13}, 1.5});
  const Verdict v = check_asymptotic_equality(rep);
  const ReportRow& last = rep.rows.back();
  const double ratio = -double(*last.graph_euler) / last.a;
  note = fmt("z^3 chi=%d; exp at r=%.4g chi=%d a=%.4f ratio %.4f, trend %s, verdict %s",
             *row.graph_euler, last.r, *last.graph_euler, last.a, ratio,
             v.trend_ok ? "improving" : "not improving", v.pass ? "pass" : "fail");
  return *row.graph_euler == -3 && std::abs(ratio - 1) <= 0.1 && v.trend_ok && v.pass;
}

bool arcs_check(std::string& note) {
  const CompiledMap z3("z^3");
  ReportRow row;
  row.r = 10.0, row.a = area(z3, 10.0), row.l = boundary_length(z3, 10.0), row.resolution = 1024;
  const RectangleChart ch = RectangleChart::along({2.0, 1.0}, 1.0, -0.3, 0.3, -0.1, 0.1);
  measure_arcs(row, z3, ch, 200, 7);
  g_coarea.emplace_back(*row.coarea_lhs, *row.coarea_rhs);

  // Charts that the boundary image does cross.
  struct Case {
    const char* map;
    double r;
    cplx base, dir;
  };
  const Case cases[] = {
      {"z^3", 1.0, {0.0, 1.0}, 1.0},
      {"z^2 - z", 1.3, {0.2, 1.1}, {1.0, 0.5}},
      {"exp(z)", 3.0, {-10.0, 13.0}, {1.0, 1.0}},
      {"(z^2-1)/(z^2+1)", 0.8, {0.1, 0.2}, 1.0},
      {"sin(z)", 2.0, {3.0, 0.5}, {0.0, 1.0}},
  };
  double max_rhs = 0.0;
  for (const Case& c : cases) {
    const RectangleChart k = RectangleChart::along(c.base, c.dir, -2.0, 2.0, -0.5, 0.5);
    const Perturbation p = select_perturbation(CompiledMap(c.map), c.r, k, 1000);
    g_coarea.emplace_back(p.coarea_lhs, p.coarea_rhs);
    max_rhs = std::max(max_rhs, p.coarea_rhs);
  }
  bool coarea = true;
  double worst = 0.0;
  for (auto [lhs, rhs] : g_coarea) {
    coarea = coarea && coarea_ok(lhs, rhs);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(rhs, 1.0));
  }
  note = fmt("z^3 good/bad/suspect %d/%d/%d; coarea over %zu runs, worst %.2e (largest rhs %.3g)",
             *row.arc_good, *row.arc_bad, *row.arc_suspect, g_coarea.size(), worst, max_rhs);
  return *row.arc_good == 3 && *row.arc_bad == 0 && *row.arc_suspect == 0 && coarea &&
         max_rhs > 0.0;
}

bool euler_check(std::string& note) {
  struct Case {
    const char* map;
    GraphSpec fig;
    double r;
  };
  const Case cases[] = {
      {"z", {{0.1, 0.05}, 1.0}, 4.0},
      {"z^2", {{0.3, 0.2}, 0.5}, 3.0},
      {"z^3", {{0.0, 0.5}, 0.3}, 5.0},
      {"exp(z)", {{0.1, 0.13}, 1.5}, 10.0},
      {"exp(z)", {{0.1, 0.13}, 1.5}, 20.0},
      {"sin(z)", {{0.1, 0.1}, 1.0}, 3.0},
      {"z^2 - z", {{0.2, 0.3}, 0.8}, 2.5},
  };
  int passed = 0, traced = 0;
  std::string detail;
  for (const Case& c : cases) {
    const CompiledMap m(c.map);
    ReportRow row;
    row.r = c.r, row.a = area(m, c.r), row.l = boundary_length(m, c.r), row.resolution = 512;
    try {
      const GraphRun g = measure_graph(row, m, c.fig);
      ++traced;
      if (verify_euler_identity(g.graph, g.complement)) ++passed;
      detail += fmt(" %s@%g:%d+%d+%d", c.map, c.r, *row.chi_C0, *row.graph_euler, *row.sum_chi_C);
    } catch (const NumericError& e) {
      detail += fmt(" %s@%g:error", c.map, c.r);
    }
  }
  note = fmt("%d of %d traces satisfy 1 = chi(C0) + chi + sum chi(C);", passed, traced) + detail;
  return traced >= 5 && passed == traced;
}

bool rh_check(std::string& note) {
  const CompiledMap q("z^5");
  const SphericalDisk std3[] = {disk(0.0), disk(1.0), disk_inf()};
  ExperimentReport rep = start_report(q, {10.0}, 1024);
  const auto scans = measure_islands(rep, q, std3);
  // The single island over 0 is a disk (chi = 1) covering it 5 times.
  const auto& over0 = scans[0][0].islands;
  const int ram0 = total_ramification(over0);
  const int deg0 = over0.empty() ? 0 : island_degree(q, over0[0], std3[0].center);
  const ReportRow& row = rep.rows[0];
  note = fmt("island over 0: chi + ram = 1 + %d <= 2 * %d; ramification term %d, a=%.6f", ram0,
             deg0, *row.ramification, row.a);
  return over0.size() == 1 && ram0 == 4 && deg0 == 5 && 1 + ram0 <= 2 * deg0 &&
         *row.ramification == 4 && check_rh_inequality(rep).pass;
}

bool containment_check(std::string& note) {
  struct Case {
    const char* map;
    GraphSpec fig;
    double r;
    int resolution;
    std::vector<SphericalDisk> disks;
  };
  const Case cases[] = {
      {"z", {{0.1, 0.05}, 1.0}, 8.0, 512,
       {disk({1.1, 0.05}, 0.05), disk({-0.9, 0.05}, 0.05), disk_inf()}},
      {"z^3", {{0.0, 0.5}, 0.3}, 10.0, 1024,
       {disk({0.3, 0.5}, 0.02), disk({-0.3, 0.5}, 0.02), disk_inf()}},
      {"exp(z)", {{0.1, 0.13}, 1.5}, 20.0, 1024, {disk(1.0), disk(-1.0), disk_inf()}},
  };
  bool ok = true;
  for (const Case& c : cases) {
    const CompiledMap m(c.map);
    ExperimentReport rep = start_report(m, {c.r}, c.resolution);
    const auto scans = measure_islands(rep, m, c.disks);
    const auto runs = measure_graph(rep, m, c.fig);
    const Containment ct = verify_island_in_component(m, runs[0], c.fig, c.disks, scans[0]);
    note += fmt("%s%s: %d checked, %d missing, %d ambiguous", note.empty() ? "" : "; ", c.map,
                ct.checked, ct.missing, ct.ambiguous);
    ok = ok && ct.checked > 0 && ct.pass() && ct.ambiguous == 0;
  }
  return ok;
}

bool determinism_check(std::string& note) {
  const fs::path out = fs::temp_directory_path() / "ahlfors_acceptance_determinism";
  fs::remove_all(out);
  ExperimentConfig cfg =
      build_config(read_config_file(AHLFORS_SOURCE_DIR "/configs/z3_graph.cfg"), Stage::all);
  cfg.out = out.string();
  const RunResult one = run(cfg, Stage::all);
  std::vector<std::string> first;
  for (const std::string& f : one.files) first.push_back(slurp(f));
  const RunResult two = run(cfg, Stage::all);
  bool same = one.files == two.files;
  for (std::size_t k = 0; same && k < first.size(); ++k) same = first[k] == slurp(two.files[k]);
  note = fmt("%zu files compared (report.csv, summary.json, SVGs), exit codes %d/%d",
             one.files.size(), one.exit_code, two.exit_code);
  return same && one.exit_code == two.exit_code;
}

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "metric oracles", metric_oracles},
      {2, "Cauchy-Schwarz l^2 <= 2 pi r a'", cauchy_schwarz},
      {3, "length-area certificate", certificate},
      {4, "mean covering degree", mean_degree_check},
      {5, "island counts", islands_check},
      {6, "asymptotic Euler equality", equality_check},
      {7, "good and bad arcs, coarea", arcs_check},
      {8, "Euler identity", euler_check},
      {9, "Riemann-Hurwitz with ramification", rh_check},
      {10, "component-island containment", containment_check},
      {11, "determinism", determinism_check},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    std::string note;
    bool ok = false;
    try {
      ok = c.body(note);
    } catch (const std::exception& e) {
      note = std::string("exception: ") + e.what();
    }
    failed += !ok;
    std::printf("criterion %2d %s: %s | %s\n", c.id, ok ? "PASS" : "FAIL", c.title, note.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
