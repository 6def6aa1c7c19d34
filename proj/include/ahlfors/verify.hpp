#pragma once

// Per-radius experiment reports and the checks run over them.
//
// Measurements fill rows of an ExperimentReport; each check reads the rows
// only, so a report loaded back from its CSV gives the same verdicts.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ahlfors/count.hpp"
#include "ahlfors/metric.hpp"
#include "ahlfors/trace.hpp"

namespace ahlfors {

struct SlackConstants {
  double c1 = 4.0;          // island theorem, weight of l/a
  double c2 = 50.0;         // island theorem, weight of 1/resolution
  double c_equality = 1.0;  // graph and arc counts, weight of (l + bad)
  double c_rh = 1.0;        // Riemann-Hurwitz, weight of l
};

struct ReportRow {
  double r = 0.0;
  double a = 0.0;
  double l = 0.0;
  int resolution = 0;

  std::optional<int> island_count, degree_sum, ramification, ambiguous_islands;
  std::optional<int> graph_euler, good, bad, suspect, chi_C0, sum_chi_C;
  std::optional<double> mean_degree, mean_stderr;
  std::optional<int> components_checked, components_missing, components_ambiguous;
  std::optional<int> arc_good, arc_bad, arc_suspect;
  std::optional<double> arc_integral, coarea_lhs, coarea_rhs, t_star;

  double ratio() const { return l / a; }
};

struct ExperimentReport {
  std::string map;
  SlackConstants constants;
  std::vector<ReportRow> rows;  // ascending r

  // One row per radius, 12 significant digits, empty cells for stages that
  // did not run. Column order is kReportColumns.
  std::string to_csv() const;
  // Throws std::invalid_argument on a malformed table.
  static ExperimentReport from_csv(std::string_view csv);
};

extern const std::vector<std::string> kReportColumns;
// Value of a cell (nullopt when empty) and whether the column holds integers.
std::optional<double> report_cell(const ExperimentReport& rep, std::size_t row, std::size_t column);
bool report_column_is_integer(std::size_t column);

// Rows for the given radii with a and l filled in.
ExperimentReport start_report(const CompiledMap& m, std::vector<double> radii, int resolution,
                              const SlackConstants& constants = {},
                              const QuadratureOptions& quadrature = {});

// Measurements fill their columns of one row. The report-wide forms loop
// over the rows; row k uses seed + k.
//
// Throws std::invalid_argument when a(r) = 0 (nothing to compare against).
void measure_mean_degree(ReportRow& row, const CompiledMap& m, std::size_t samples,
                         std::uint64_t seed);
void measure_mean_degree(ExperimentReport& rep, const CompiledMap& m, std::size_t samples,
                         std::uint64_t seed);

// One scan per disk, in disk order.
std::vector<IslandScan> measure_islands(ReportRow& row, const CompiledMap& m,
                                        std::span<const SphericalDisk> disks);
std::vector<std::vector<IslandScan>> measure_islands(ExperimentReport& rep, const CompiledMap& m,
                                                     std::span<const SphericalDisk> disks);

struct GraphRun {
  PreimageGraph graph;
  ComplementMap complement;
};
// The complement is labelled at twice the trace resolution.
GraphRun measure_graph(ReportRow& row, const CompiledMap& m, const GraphSpec& spec);
std::vector<GraphRun> measure_graph(ExperimentReport& rep, const CompiledMap& m,
                                    const GraphSpec& spec);

// The arc is traced at the line of fewest boundary crossings.
struct ArcRun {
  Perturbation perturbation;
  TraceResult trace;
};
ArcRun measure_arcs(ReportRow& row, const CompiledMap& m, const RectangleChart& chart,
                    int line_samples, std::uint64_t seed);
std::vector<ArcRun> measure_arcs(ExperimentReport& rep, const CompiledMap& m,
                                 const RectangleChart& chart, int line_samples,
                                 std::uint64_t seed);

struct Containment {
  int checked = 0;    // interior components examined
  int missing = 0;    // no island of their face's disk inside
  int ambiguous = 0;  // only an ambiguous island inside
  bool pass() const { return missing == 0; }
};
// Each disk is assigned to the lemniscate face holding its centre; throws
// std::invalid_argument unless the three faces get one disk each.
Containment verify_island_in_component(const CompiledMap& m, const GraphRun& run,
                                       const GraphSpec& spec,
                                       std::span<const SphericalDisk> disks,
                                       std::span<const IslandScan> scans);
void record_containment(ReportRow& row, const Containment& c);

// 1 = chi(C_0) + chi(graph) + sum chi(C), exactly.
bool verify_euler_identity(const PreimageGraph& g, const ComplementMap& c);

struct Verdict {
  std::string name;
  bool pass = false;
  bool trend_ok = true;
  // Largest need / allowed over the checked rows; at most 1 when every row
  // passes. For the exact checks it is the largest integer defect.
  double worst_slack = 0.0;
  int rows_checked = 0;
  std::vector<double> need;     // per row, NaN where the row has no data
  std::vector<double> allowed;
};

// |mean - a| <= max(3 stderr, 0.05 a + 2 l).
Verdict check_mean_degree(const ExperimentReport& rep);
// i >= a (1 - slack), slack = c1 l / a + c2 / resolution, and the needed
// slack max(0, 1 - i/a) nonincreasing in r.
Verdict check_island_theorem(const ExperimentReport& rep);
// |chi + a| <= c_equality (l + bad) for the figure-eight (chi = -1). The
// trend asks |ratio - 1| to shrink: its least-squares slope against log r
// is <= 0 and the last value is at most the first.
Verdict check_asymptotic_equality(const ExperimentReport& rep);
// 1 + r_n <= 2 a + c_rh l (sphere target).
Verdict check_rh_inequality(const ExperimentReport& rep);
Verdict check_euler_identity(const ExperimentReport& rep);
Verdict check_island_in_component(const ExperimentReport& rep);
// |arc integral - a| <= c_equality (l + bad arcs) and the coarea identity
// within 2%.
Verdict check_arcs(const ExperimentReport& rep);

// Same shape as the per-radius example calls: measure and check in one go.
Verdict verify_mean_degree(const CompiledMap& m, std::span<const double> radii,
                           std::size_t samples = 2000, std::uint64_t seed = 1);
Verdict verify_island_theorem(const CompiledMap& m, std::span<const SphericalDisk> disks,
                              std::span<const double> radii, int resolution = 1024);
Verdict verify_asymptotic_equality(const CompiledMap& m, const GraphSpec& spec,
                                   std::span<const double> radii, int resolution = 1024);
Verdict verify_rh_inequality(const CompiledMap& m, std::span<const SphericalDisk> disks,
                             std::span<const double> radii, int resolution = 1024);

}  // namespace ahlfors
