#include "ahlfors/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace ahlfors {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Column accessors keep the writer and the reader in lockstep.
struct Column {
  const char* name;
  std::optional<double> (*get)(const ReportRow&, const SlackConstants&);
  void (*set)(ReportRow&, SlackConstants&, double);
  bool integer;
};

template <auto Member>
std::optional<double> get_opt(const ReportRow& r, const SlackConstants&) {
  const auto& v = r.*Member;
  if (!v) return std::nullopt;
  return static_cast<double>(*v);
}

template <auto Member>
void set_opt_int(ReportRow& r, SlackConstants&, double v) {
  r.*Member = static_cast<int>(std::lround(v));
}

template <auto Member>
void set_opt_double(ReportRow& r, SlackConstants&, double v) {
  r.*Member = v;
}

void ignore(ReportRow&, SlackConstants&, double) {}

std::optional<double> island_slack(const ReportRow& r, const SlackConstants& c) {
  if (r.resolution <= 0) return std::nullopt;
  return c.c1 * r.l / r.a + c.c2 / r.resolution;
}

std::optional<double> equality_ratio(const ReportRow& r, const SlackConstants&) {
  if (!r.graph_euler) return std::nullopt;
  return -*r.graph_euler / r.a;
}

#define OPT_INT(field) {#field, get_opt<&ReportRow::field>, set_opt_int<&ReportRow::field>, true}
#define OPT_DBL(field) {#field, get_opt<&ReportRow::field>, set_opt_double<&ReportRow::field>, false}

const std::vector<Column>& columns() {
  static const std::vector<Column> cols = {
      {"r", [](const ReportRow& r, const SlackConstants&) -> std::optional<double> { return r.r; },
       [](ReportRow& r, SlackConstants&, double v) { r.r = v; }, false},
      {"a", [](const ReportRow& r, const SlackConstants&) -> std::optional<double> { return r.a; },
       [](ReportRow& r, SlackConstants&, double v) { r.a = v; }, false},
      {"l", [](const ReportRow& r, const SlackConstants&) -> std::optional<double> { return r.l; },
       [](ReportRow& r, SlackConstants&, double v) { r.l = v; }, false},
      {"ratio",
       [](const ReportRow& r, const SlackConstants&) -> std::optional<double> { return r.ratio(); },
       ignore, false},
      OPT_INT(island_count),
      OPT_INT(degree_sum),
      OPT_INT(ramification),
      OPT_INT(graph_euler),
      OPT_INT(good),
      OPT_INT(bad),
      OPT_INT(suspect),
      OPT_INT(chi_C0),
      OPT_INT(sum_chi_C),
      OPT_DBL(mean_degree),
      OPT_DBL(mean_stderr),
      OPT_INT(ambiguous_islands),
      OPT_INT(components_checked),
      OPT_INT(components_missing),
      OPT_INT(components_ambiguous),
      OPT_INT(arc_good),
      OPT_INT(arc_bad),
      OPT_INT(arc_suspect),
      OPT_DBL(arc_integral),
      OPT_DBL(coarea_lhs),
      OPT_DBL(coarea_rhs),
      OPT_DBL(t_star),
      {"resolution",
       [](const ReportRow& r, const SlackConstants&) -> std::optional<double> {
         return r.resolution;
       },
       [](ReportRow& r, SlackConstants&, double v) { r.resolution = static_cast<int>(v); }, true},
      {"c1", [](const ReportRow&, const SlackConstants& c) -> std::optional<double> { return c.c1; },
       [](ReportRow&, SlackConstants& c, double v) { c.c1 = v; }, false},
      {"c2", [](const ReportRow&, const SlackConstants& c) -> std::optional<double> { return c.c2; },
       [](ReportRow&, SlackConstants& c, double v) { c.c2 = v; }, false},
      {"c_equality",
       [](const ReportRow&, const SlackConstants& c) -> std::optional<double> {
         return c.c_equality;
       },
       [](ReportRow&, SlackConstants& c, double v) { c.c_equality = v; }, false},
      {"c_rh",
       [](const ReportRow&, const SlackConstants& c) -> std::optional<double> { return c.c_rh; },
       [](ReportRow&, SlackConstants& c, double v) { c.c_rh = v; }, false},
      {"island_slack", island_slack, ignore, false},
      {"equality_ratio", equality_ratio, ignore, false},
  };
  return cols;
}

#undef OPT_INT
#undef OPT_DBL

std::vector<std::string> column_names() {
  std::vector<std::string> out;
  for (const Column& c : columns()) out.emplace_back(c.name);
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t k = s.find(sep, start);
    out.emplace_back(s.substr(start, k == std::string_view::npos ? s.npos : k - start));
    if (k == std::string_view::npos) break;
    start = k + 1;
  }
  return out;
}

Verdict make_verdict(const char* name, std::size_t n) {
  Verdict v;
  v.name = name;
  v.need.assign(n, kNaN);
  v.allowed.assign(n, kNaN);
  return v;
}

double used_fraction(double need, double allowed) {
  need = std::max(need, 0.0);
  if (allowed > 0.0) return need / allowed;
  return need > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

// Fills pass and worst_slack from need/allowed.
void settle(Verdict& v) {
  bool ok = true;
  for (std::size_t k = 0; k < v.need.size(); ++k) {
    if (std::isnan(v.need[k])) continue;
    ++v.rows_checked;
    ok = ok && v.need[k] <= v.allowed[k];
    v.worst_slack = std::max(v.worst_slack, used_fraction(v.need[k], v.allowed[k]));
  }
  v.pass = ok && v.rows_checked > 0;
}

bool nonincreasing(const std::vector<double>& seq) {
  double prev = kNaN;
  for (double x : seq) {
    if (std::isnan(x)) continue;
    if (!std::isnan(prev) && x > prev + 1e-12 * std::max(1.0, std::abs(prev))) return false;
    prev = x;
  }
  return true;
}

bool improving(const std::vector<double>& r, const std::vector<double>& dev) {
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < r.size(); ++k)
    if (!std::isnan(dev[k])) xs.push_back(std::log(r[k])), ys.push_back(dev[k]);
  if (xs.size() < 2) return true;
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) mx += xs[k], my += ys[k];
  mx /= n, my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < xs.size(); ++k)
    sxy += (xs[k] - mx) * (ys[k] - my), sxx += (xs[k] - mx) * (xs[k] - mx);
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  return slope <= 1e-12 && ys.back() <= ys.front() + 1e-12;
}

std::vector<double> radii_of(const ExperimentReport& rep) {
  std::vector<double> r;
  for (const auto& row : rep.rows) r.push_back(row.r);
  return r;
}

}  // namespace

const std::vector<std::string> kReportColumns = column_names();

std::string ExperimentReport::to_csv() const {
  std::string out;
  for (std::size_t k = 0; k < kReportColumns.size(); ++k)
    out += (k ? "," : "") + kReportColumns[k];
  out += '\n';
  char buf[64];
  for (const ReportRow& row : rows) {
    bool first = true;
    for (const Column& c : columns()) {
      if (!first) out += ',';
      first = false;
      const auto v = c.get(row, constants);
      if (!v) continue;
      if (c.integer)
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(std::llround(*v)));
      else
        std::snprintf(buf, sizeof buf, "%.12g", *v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

ExperimentReport ExperimentReport::from_csv(std::string_view csv) {
  auto lines = split(csv, '\n');
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw std::invalid_argument("report csv: empty");
  if (split(lines[0], ',') != kReportColumns)
    throw std::invalid_argument("report csv: unexpected header");
  ExperimentReport rep;
  const auto& cols = columns();
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto cells = split(lines[li], ',');
    if (cells.size() != cols.size())
      throw std::invalid_argument("report csv: line " + std::to_string(li + 1) + " has " +
                                  std::to_string(cells.size()) + " cells");
    ReportRow row;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cells[k].empty()) continue;
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cells[k], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cells[k].size())
        throw std::invalid_argument("report csv: bad number '" + cells[k] + "' in column " +
                                    cols[k].name);
      cols[k].set(row, rep.constants, v);
    }
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Measurements

std::optional<double> report_cell(const ExperimentReport& rep, std::size_t row, std::size_t column) {
  return columns().at(column).get(rep.rows.at(row), rep.constants);
}

bool report_column_is_integer(std::size_t column) { return columns().at(column).integer; }

ExperimentReport start_report(const CompiledMap& m, std::vector<double> radii, int resolution,
                              const SlackConstants& constants, const QuadratureOptions& quadrature) {
  std::sort(radii.begin(), radii.end());
  ExperimentReport rep;
  rep.map = m.source();
  rep.constants = constants;
  for (double r : radii) {
    ReportRow row;
    row.r = r;
    row.a = area(m, r, quadrature);
    row.l = boundary_length(m, r);
    row.resolution = resolution;
    rep.rows.push_back(row);
  }
  return rep;
}

void measure_mean_degree(ReportRow& row, const CompiledMap& m, std::size_t samples,
                         std::uint64_t seed) {
  if (!(row.a > 0.0))
    throw std::invalid_argument("mean degree: a(r) = 0 at r = " + std::to_string(row.r) +
                                "; the map is constant");
  const MeanDegree md = mean_degree(m, row.r, samples, seed);
  row.mean_degree = md.mean;
  row.mean_stderr = md.stderr_;
}

void measure_mean_degree(ExperimentReport& rep, const CompiledMap& m, std::size_t samples,
                         std::uint64_t seed) {
  for (std::size_t k = 0; k < rep.rows.size(); ++k)
    measure_mean_degree(rep.rows[k], m, samples, seed + k);
}

std::vector<IslandScan> measure_islands(ReportRow& row, const CompiledMap& m,
                                        std::span<const SphericalDisk> disks) {
  std::vector<IslandScan> scans;
  std::vector<IslandRecord> all;
  int count = 0, degrees = 0, ambiguous = 0;
  for (std::size_t d = 0; d < disks.size(); ++d) {
    scans.push_back(find_islands(m, disks[d], row.r, row.resolution, static_cast<int>(d)));
    const IslandScan& s = scans.back();
    count += static_cast<int>(s.islands.size());
    degrees += s.degree_sum();
    ambiguous += static_cast<int>(s.ambiguous.size());
    all.insert(all.end(), s.islands.begin(), s.islands.end());
  }
  row.island_count = count;
  row.degree_sum = degrees;
  row.ramification = total_ramification(all);
  row.ambiguous_islands = ambiguous;
  return scans;
}

std::vector<std::vector<IslandScan>> measure_islands(ExperimentReport& rep, const CompiledMap& m,
                                                     std::span<const SphericalDisk> disks) {
  std::vector<std::vector<IslandScan>> out;
  for (ReportRow& row : rep.rows) out.push_back(measure_islands(row, m, disks));
  return out;
}

GraphRun measure_graph(ReportRow& row, const CompiledMap& m, const GraphSpec& spec) {
  GraphRun run;
  run.graph = build_preimage_graph(m, spec, row.r, row.resolution);
  run.complement = complement_components(run.graph, row.r, 2 * row.resolution);
  row.graph_euler = run.graph.euler;
  row.good = run.graph.counts.good;
  row.bad = run.graph.counts.bad;
  row.suspect = run.graph.counts.suspect;
  row.chi_C0 = run.complement.chi_outer();
  row.sum_chi_C = run.complement.chi_interior();
  return run;
}

std::vector<GraphRun> measure_graph(ExperimentReport& rep, const CompiledMap& m,
                                    const GraphSpec& spec) {
  std::vector<GraphRun> out;
  for (ReportRow& row : rep.rows) out.push_back(measure_graph(row, m, spec));
  return out;
}

ArcRun measure_arcs(ReportRow& row, const CompiledMap& m, const RectangleChart& chart,
                    int line_samples, std::uint64_t seed) {
  ArcRun run;
  run.perturbation = select_perturbation(m, row.r, chart, line_samples, seed);
  const ImplicitCurve seg = ImplicitCurve::chart_segment(chart, run.perturbation.t_star);
  run.trace = trace_preimage(m, seg, row.r, row.resolution);
  const ArcCounts n = classify_arcs(run.trace, m, seg);
  row.arc_good = n.good;
  row.arc_bad = n.bad;
  row.arc_suspect = n.suspect;
  row.arc_integral = arc_test_integral(m, chart, run.perturbation.t_star, row.r,
                                       bump_profile(chart.x0, chart.x1));
  row.coarea_lhs = run.perturbation.coarea_lhs;
  row.coarea_rhs = run.perturbation.coarea_rhs;
  row.t_star = run.perturbation.t_star;
  return run;
}

std::vector<ArcRun> measure_arcs(ExperimentReport& rep, const CompiledMap& m,
                                 const RectangleChart& chart, int line_samples,
                                 std::uint64_t seed) {
  std::vector<ArcRun> out;
  for (std::size_t k = 0; k < rep.rows.size(); ++k)
    out.push_back(measure_arcs(rep.rows[k], m, chart, line_samples, seed + k));
  return out;
}

Containment verify_island_in_component(const CompiledMap& m, const GraphRun& run,
                                       const GraphSpec& spec,
                                       std::span<const SphericalDisk> disks,
                                       std::span<const IslandScan> scans) {
  const ImplicitCurve curve = spec.curve();
  std::array<int, 3> disk_of{-1, -1, -1};
  for (std::size_t d = 0; d < disks.size(); ++d) {
    const int face = curve.face(disks[d].center);
    if (disk_of[face] >= 0)
      throw std::invalid_argument("containment: disks " + std::to_string(disk_of[face]) + " and " +
                                  std::to_string(d) + " lie in the same face of the graph");
    disk_of[face] = static_cast<int>(d);
  }
  if (std::count(disk_of.begin(), disk_of.end(), -1) > 0)
    throw std::invalid_argument("containment: every face of the graph needs one disk");
  if (scans.size() != disks.size())
    throw std::invalid_argument("containment: one island scan per disk expected");

  const ComplementMap& comp = run.complement;
  auto holds = [&](const std::vector<IslandRecord>& islands, int c) {
    return std::any_of(islands.begin(), islands.end(), [&](const IslandRecord& is) {
      const auto at = comp.component_at(is.representative);
      return at && *at == c;
    });
  };
  Containment out;
  for (std::size_t c = 0; c < comp.components.size(); ++c) {
    const ComplementComponent& cc = comp.components[c];
    if (cc.touches_boundary) continue;
    ++out.checked;
    const int face = curve.face(SpherePoint::from(m.f().evaluate(cc.sample)));
    const IslandScan& scan = scans[disk_of[face]];
    if (holds(scan.islands, static_cast<int>(c))) continue;
    if (holds(scan.ambiguous, static_cast<int>(c)))
      ++out.ambiguous;
    else
      ++out.missing;
  }
  return out;
}

void record_containment(ReportRow& row, const Containment& c) {
  row.components_checked = c.checked;
  row.components_missing = c.missing;
  row.components_ambiguous = c.ambiguous;
}

bool verify_euler_identity(const PreimageGraph& g, const ComplementMap& c) {
  return c.chi_outer() + g.euler + c.chi_interior() == 1;
}

// ---------------------------------------------------------------------------
// Checks

Verdict check_mean_degree(const ExperimentReport& rep) {
  Verdict v = make_verdict("mean_degree", rep.rows.size());
  std::vector<double> excess(rep.rows.size(), kNaN);
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    const ReportRow& row = rep.rows[k];
    if (!row.mean_degree || !row.mean_stderr) continue;
    const double dev = std::abs(*row.mean_degree - row.a);
    v.need[k] = dev;
    v.allowed[k] = std::max(3 * *row.mean_stderr, 0.05 * row.a + 2 * row.l);
    excess[k] = std::max(0.0, dev - 3 * *row.mean_stderr) / row.a;
  }
  settle(v);
  v.trend_ok = nonincreasing(excess);
  return v;
}

Verdict check_island_theorem(const ExperimentReport& rep) {
  Verdict v = make_verdict("island_theorem", rep.rows.size());
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    const ReportRow& row = rep.rows[k];
    if (!row.island_count || row.resolution <= 0) continue;
    v.need[k] = std::max(0.0, 1.0 - *row.island_count / row.a);
    v.allowed[k] = *island_slack(row, rep.constants);
  }
  settle(v);
  v.trend_ok = nonincreasing(v.need);
  v.pass = v.pass && v.trend_ok;
  return v;
}

Verdict check_asymptotic_equality(const ExperimentReport& rep) {
  Verdict v = make_verdict("asymptotic_equality", rep.rows.size());
  std::vector<double> dev(rep.rows.size(), kNaN);
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    const ReportRow& row = rep.rows[k];
    if (!row.graph_euler || !row.bad) continue;
    v.need[k] = std::abs(*row.graph_euler + row.a);
    v.allowed[k] = rep.constants.c_equality * (row.l + *row.bad);
    dev[k] = std::abs(*equality_ratio(row, rep.constants) - 1.0);
  }
  settle(v);
  v.trend_ok = improving(radii_of(rep), dev);
  return v;
}

Verdict check_rh_inequality(const ExperimentReport& rep) {
  Verdict v = make_verdict("rh_inequality", rep.rows.size());
  std::vector<double> excess(rep.rows.size(), kNaN);
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    const ReportRow& row = rep.rows[k];
    if (!row.ramification) continue;
    v.need[k] = 1.0 + *row.ramification - 2.0 * row.a;
    v.allowed[k] = rep.constants.c_rh * row.l;
    excess[k] = std::max(0.0, v.need[k]) / row.l;
  }
  settle(v);
  v.trend_ok = nonincreasing(excess);
  return v;
}

Verdict check_euler_identity(const ExperimentReport& rep) {
  Verdict v = make_verdict("euler_identity", rep.rows.size());
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    const ReportRow& row = rep.rows[k];
    if (!row.graph_euler || !row.chi_C0 || !row.sum_chi_C) continue;
    v.need[k] = std::abs(1 - (*row.chi_C0 + *row.graph_euler + *row.sum_chi_C));
    v.allowed[k] = 0.0;
  }
  settle(v);
  v.worst_slack = 0.0;
  for (double n : v.need)
    if (!std::isnan(n)) v.worst_slack = std::max(v.worst_slack, n);
  return v;
}

Verdict check_island_in_component(const ExperimentReport& rep) {
  Verdict v = make_verdict("island_in_component", rep.rows.size());
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    const ReportRow& row = rep.rows[k];
    if (!row.components_missing) continue;
    v.need[k] = *row.components_missing;
    v.allowed[k] = 0.0;
  }
  settle(v);
  v.worst_slack = 0.0;
  for (double n : v.need)
    if (!std::isnan(n)) v.worst_slack = std::max(v.worst_slack, n);
  return v;
}

Verdict check_arcs(const ExperimentReport& rep) {
  Verdict v = make_verdict("arcs", rep.rows.size());
  std::vector<double> dev(rep.rows.size(), kNaN);
  bool coarea_ok = true;
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    const ReportRow& row = rep.rows[k];
    if (!row.arc_integral || !row.arc_bad || !row.coarea_lhs || !row.coarea_rhs) continue;
    v.need[k] = std::abs(*row.arc_integral - row.a);
    v.allowed[k] = rep.constants.c_equality * (row.l + *row.arc_bad);
    dev[k] = v.need[k] / row.a;
    coarea_ok = coarea_ok && std::abs(*row.coarea_lhs - *row.coarea_rhs) <=
                                 0.02 * std::max(*row.coarea_rhs, 1.0);
  }
  settle(v);
  v.pass = v.pass && coarea_ok;
  v.trend_ok = improving(radii_of(rep), dev);
  return v;
}

// ---------------------------------------------------------------------------
// One-call forms

Verdict verify_mean_degree(const CompiledMap& m, std::span<const double> radii,
                           std::size_t samples, std::uint64_t seed) {
  ExperimentReport rep = start_report(m, {radii.begin(), radii.end()}, 0);
  measure_mean_degree(rep, m, samples, seed);
  return check_mean_degree(rep);
}

Verdict verify_island_theorem(const CompiledMap& m, std::span<const SphericalDisk> disks,
                              std::span<const double> radii, int resolution) {
  if (disks.size() != 3) throw std::invalid_argument("island theorem: exactly 3 disks required");
  ExperimentReport rep = start_report(m, {radii.begin(), radii.end()}, resolution);
  measure_islands(rep, m, disks);
  return check_island_theorem(rep);
}

Verdict verify_asymptotic_equality(const CompiledMap& m, const GraphSpec& spec,
                                   std::span<const double> radii, int resolution) {
  ExperimentReport rep = start_report(m, {radii.begin(), radii.end()}, resolution);
  measure_graph(rep, m, spec);
  return check_asymptotic_equality(rep);
}

Verdict verify_rh_inequality(const CompiledMap& m, std::span<const SphericalDisk> disks,
                             std::span<const double> radii, int resolution) {
  ExperimentReport rep = start_report(m, {radii.begin(), radii.end()}, resolution);
  measure_islands(rep, m, disks);
  return check_rh_inequality(rep);
}

}  // namespace ahlfors
