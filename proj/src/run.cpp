#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ahlfors/cli.hpp"
#include "json.hpp"

namespace ahlfors {

namespace {

using json = nlohmann::ordered_json;

json point_json(const SpherePoint& p) {
  if (p.infinite) return "inf";
  return json::array({p.z.real(), p.z.imag()});
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

json config_json(const ExperimentConfig& c) {
  json j;
  j["map"] = c.map;
  j["radii"] = {{"mode", c.radii.mode},
                {"list", c.radii.list},
                {"min", c.radii.min},
                {"max", c.radii.max},
                {"count", c.radii.count}};
  json disks = json::array();
  for (const SphericalDisk& d : c.disks)
    disks.push_back({{"center", point_json(d.center)}, {"radius", d.radius}});
  j["disks"] = disks;
  if (c.graph)
    j["graph"] = {{"kind", "figure8"},
                  {"node", complex_json(c.graph->node)},
                  {"scale", c.graph->scale}};
  else
    j["graph"] = nullptr;
  if (c.chart)
    j["chart"] = {{"a", complex_json(c.chart->a)},     {"b", complex_json(c.chart->b)},
                  {"c", complex_json(c.chart->c)},     {"d", complex_json(c.chart->d)},
                  {"x_range", {c.chart->x0, c.chart->x1}}, {"t_range", {c.chart->t0, c.chart->t1}},
                  {"lines", c.lines}};
  else
    j["chart"] = nullptr;
  j["resolution"] = c.resolution;
  j["tolerance"] = c.tolerance;
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["out"] = c.out;
  j["svg"] = c.svg;
  j["verify"] = c.verifiers;
  j["target_genus"] = 0;
  j["slack"] = {{"c1", c.constants.c1},
                {"c2", c.constants.c2},
                {"c_equality", c.constants.c_equality},
                {"c_rh", c.constants.c_rh}};
  return j;
}

std::vector<double> schedule(const CompiledMap& m, const ExperimentConfig::Radii& r) {
  if (r.mode == "length-area") return select_radii(m, r.min, r.max, r.count);
  if (!r.list.empty()) return r.list;
  std::vector<double> out;
  for (int k = 0; k < r.count; ++k)
    out.push_back(r.count == 1 ? r.min : r.min + (r.max - r.min) * k / (r.count - 1));
  return out;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::vector<Polyline> island_outlines(const std::vector<IslandScan>& scans) {
  std::vector<Polyline> out;
  for (const IslandScan& s : scans)
    for (const IslandRecord& is : s.islands)
      out.insert(out.end(), is.boundary.begin(), is.boundary.end());
  return out;
}

void write_file(const std::filesystem::path& p, const std::string& text, RunResult& res) {
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + p.string());
  res.files.push_back(p.string());
}

Verdict check_by_name(const std::string& name, const ExperimentReport& rep) {
  if (name == "mean_degree") return check_mean_degree(rep);
  if (name == "island_theorem") return check_island_theorem(rep);
  if (name == "rh_inequality") return check_rh_inequality(rep);
  if (name == "asymptotic_equality") return check_asymptotic_equality(rep);
  if (name == "euler_identity") return check_euler_identity(rep);
  if (name == "island_in_component") return check_island_in_component(rep);
  return check_arcs(rep);
}

}  // namespace

RunResult run(const ExperimentConfig& cfg, Stage stage) {
  RunResult res;
  const CompiledMap m(cfg.map);
  auto enabled = [&](const char* v) {
    return std::find(cfg.verifiers.begin(), cfg.verifiers.end(), v) != cfg.verifiers.end();
  };
  const bool want_mean = enabled("mean_degree");
  const bool want_islands = stage == Stage::islands || enabled("island_theorem") ||
                            enabled("rh_inequality") || enabled("island_in_component");
  const bool want_graph = stage == Stage::graph || enabled("asymptotic_equality") ||
                          enabled("euler_identity") || enabled("island_in_component");
  const bool want_arcs = stage == Stage::arcs || enabled("arcs");

  json errors = json::array();
  auto record = [&](const std::string& st, double r, const std::exception& e) {
    errors.push_back({{"stage", st}, {"r", r}, {"message", e.what()}});
    res.log.push_back("error [" + st + "] r=" + fmt("%.6g", r) + ": " + e.what());
  };

  const std::filesystem::path out(cfg.out);
  std::filesystem::create_directories(out);
  QuadratureOptions quad;
  quad.tol = cfg.tolerance;

  try {
    res.report = start_report(m, schedule(m, cfg.radii), cfg.resolution, cfg.constants, quad);
  } catch (const NumericError& e) {
    record(e.stage(), 0.0, e);
  }
  res.report.map = cfg.map;

  for (std::size_t k = 0; k < res.report.rows.size(); ++k) {
    ReportRow& row = res.report.rows[k];
    const std::string tag = fmt("%.6g", row.r);
    res.log.push_back("r=" + tag + " a=" + fmt("%.12g", row.a) + " l=" + fmt("%.12g", row.l) +
                      " l/a=" + fmt("%.12g", row.ratio()));

    if (want_mean) {
      try {
        measure_mean_degree(row, m, cfg.samples, cfg.seed + k);
        res.log.push_back("  mean degree " + fmt("%.6g", *row.mean_degree) + " +- " +
                          fmt("%.3g", *row.mean_stderr));
      } catch (const NumericError& e) {
        record("mean_degree", row.r, e);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("map", e.what());
      }
    }

    std::optional<std::vector<IslandScan>> scans;
    if (want_islands) {
      try {
        scans = measure_islands(row, m, cfg.disks);
        std::string per_disk;
        for (const IslandScan& s : *scans)
          per_disk += (per_disk.empty() ? "" : ", ") + std::to_string(s.islands.size());
        res.log.push_back("  islands " + std::to_string(*row.island_count) + " (" + per_disk +
                          ") degree sum " + std::to_string(*row.degree_sum) + ", ramification " +
                          std::to_string(*row.ramification) + ", ambiguous " +
                          std::to_string(*row.ambiguous_islands));
        if (cfg.svg) {
          PreimageGraph empty;
          empty.r = row.r;
          const auto outlines = island_outlines(*scans);
          write_file(out / ("islands_" + tag + ".svg"), graph_svg(empty, outlines), res);
        }
      } catch (const NumericError& e) {
        record("islands", row.r, e);
        scans.reset();
      }
    }

    if (want_graph) {
      try {
        const GraphRun g = measure_graph(row, m, *cfg.graph);
        res.log.push_back("  graph chi " + std::to_string(*row.graph_euler) + " (V " +
                          std::to_string(g.graph.vertices.size()) + ", E " +
                          std::to_string(g.graph.edges) + "), arcs good/bad/suspect " +
                          std::to_string(*row.good) + "/" + std::to_string(*row.bad) + "/" +
                          std::to_string(*row.suspect) + ", chi(C0) " +
                          std::to_string(*row.chi_C0) + ", sum chi(C) " +
                          std::to_string(*row.sum_chi_C));
        if (enabled("island_in_component") && scans) {
          const Containment c = verify_island_in_component(m, g, *cfg.graph, cfg.disks, *scans);
          record_containment(row, c);
          res.log.push_back("  components checked " + std::to_string(c.checked) + ", missing " +
                            std::to_string(c.missing) + ", ambiguous " +
                            std::to_string(c.ambiguous));
        }
        if (cfg.svg) {
          const auto outlines = scans ? island_outlines(*scans) : std::vector<Polyline>{};
          write_file(out / ("graph_" + tag + ".svg"), graph_svg(g.graph, outlines), res);
        }
      } catch (const NumericError& e) {
        record("graph", row.r, e);
      }
    }

    if (want_arcs) {
      try {
        const ArcRun a = measure_arcs(row, m, *cfg.chart, cfg.lines, cfg.seed + k);
        res.log.push_back("  arcs at t=" + fmt("%.6g", *row.t_star) + " good/bad/suspect " +
                          std::to_string(*row.arc_good) + "/" + std::to_string(*row.arc_bad) +
                          "/" + std::to_string(*row.arc_suspect) + ", integral " +
                          fmt("%.6g", *row.arc_integral) + ", coarea " +
                          fmt("%.6g", *row.coarea_lhs) + " vs " + fmt("%.6g", *row.coarea_rhs));
        if (cfg.svg) {
          PreimageGraph pg;
          pg.r = row.r;
          pg.arcs = a.trace.arcs;
          write_file(out / ("arcs_" + tag + ".svg"), graph_svg(pg), res);
        }
      } catch (const NumericError& e) {
        record("arcs", row.r, e);
      }
    }
  }

  json verifiers = json::object();
  bool all_pass = true;
  for (const std::string& name : cfg.verifiers) {
    Verdict v = check_by_name(name, res.report);
    v.name = name;
    all_pass = all_pass && v.pass;
    verifiers[name] = {{"pass", v.pass ? "pass" : "fail"},
                       {"worst_slack", v.worst_slack},
                       {"trend_ok", v.trend_ok},
                       {"rows_checked", v.rows_checked}};
    res.log.push_back(name + ": " + (v.pass ? "pass" : "FAIL") + " (worst slack " +
                      fmt("%.4g", v.worst_slack) + ", trend " + (v.trend_ok ? "ok" : "not ok") +
                      ", rows " + std::to_string(v.rows_checked) + ")");
    res.verdicts.push_back(std::move(v));
  }
  res.exit_code = !errors.empty() ? 3 : (all_pass ? 0 : 1);

  res.csv = res.report.to_csv();
  json rows = json::array();
  for (std::size_t k = 0; k < res.report.rows.size(); ++k) {
    json row = json::object();
    for (std::size_t c = 0; c < kReportColumns.size(); ++c) {
      const auto v = report_cell(res.report, k, c);
      if (!v)
        row[kReportColumns[c]] = nullptr;
      else if (report_column_is_integer(c))
        row[kReportColumns[c]] = static_cast<long long>(*v);
      else
        row[kReportColumns[c]] = *v;
    }
    rows.push_back(row);
  }
  json radii = json::array();
  for (const ReportRow& row : res.report.rows) radii.push_back(row.r);

  json summary;
  summary["tool"] = "ahlfors_lab";
  summary["stage"] = to_string(stage);
  summary["config"] = config_json(cfg);
  summary["radii"] = radii;
  summary["verifiers"] = verifiers;
  summary["errors"] = errors;
  summary["rows"] = rows;
  summary["exit_code"] = res.exit_code;
  res.summary = summary.dump(2) + "\n";

  write_file(out / "report.csv", res.csv, res);
  write_file(out / "summary.json", res.summary, res);
  return res;
}

}  // namespace ahlfors
