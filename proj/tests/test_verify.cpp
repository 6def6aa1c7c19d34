#include <cmath>
#include <numbers>
#include <random>

#include "ahlfors/verify.hpp"
#include "doctest.h"

using namespace ahlfors;

namespace {

constexpr double kPi = std::numbers::pi;
const double kStd = 0.2 / std::sqrt(kPi);

SphericalDisk disk(cplx c, double rho = kStd) { return {SpherePoint::at(c), rho}; }
SphericalDisk disk_inf(double rho = kStd) { return {SpherePoint::infinity(), rho}; }

double a_power(int d, double r) {
  const double p = std::pow(r, 2 * d);
  return d * p / (1 + p);
}

}  // namespace

TEST_CASE("mean degree verifier") {
  const double radii[] = {2.0, 5.0, 10.0};
  ExperimentReport rep = start_report(CompiledMap("z^3"), {radii[0], radii[1], radii[2]}, 0);
  measure_mean_degree(rep, CompiledMap("z^3"), 2000, 5);
  for (const ReportRow& row : rep.rows) {
    CHECK(row.a == doctest::Approx(a_power(3, row.r)).epsilon(1e-8));
    CHECK(std::abs(*row.mean_degree - row.a) <= 0.01 * row.a);
  }
  const Verdict v = check_mean_degree(rep);
  CHECK(v.pass);
  CHECK(v.rows_checked == 3);
  CHECK(v.worst_slack <= 1.0);

  const double one[] = {1.0};
  CHECK(verify_mean_degree(CompiledMap("z"), one, 2000, 3).pass);
  CHECK_THROWS_AS(verify_mean_degree(CompiledMap("1"), one), std::invalid_argument);
}

TEST_CASE("island theorem verifier") {
  const CompiledMap quintic("z^5");
  const SphericalDisk std3[] = {disk(0.0), disk(1.0), disk_inf()};
  ExperimentReport rep = start_report(quintic, {10.0}, 1024);
  const auto scans = measure_islands(rep, quintic, std3);
  CHECK(scans[0][0].islands.size() == 1);
  CHECK(scans[0][1].islands.size() == 5);
  CHECK(scans[0][2].islands.empty());
  CHECK(*rep.rows[0].island_count == 6);
  CHECK(*rep.rows[0].degree_sum == 10);
  CHECK(*rep.rows[0].ramification == 4);
  CHECK(check_island_theorem(rep).pass);

  const SphericalDisk exp3[] = {disk(1.0), disk(-1.0), disk_inf()};
  const double r20[] = {20.0};
  ExperimentReport er = start_report(CompiledMap("exp(z)"), {20.0}, 1024);
  measure_islands(er, CompiledMap("exp(z)"), exp3);
  CHECK(*er.rows[0].island_count == 13);
  CHECK(er.rows[0].a == doctest::Approx(20 / kPi).epsilon(0.01));
  CHECK(check_island_theorem(er).pass);
  CHECK(verify_island_theorem(CompiledMap("exp(z)"), exp3, r20).pass);

  const SphericalDisk inside[] = {disk(0.0), disk(1.0), disk({0.0, -1.0})};
  const double big[] = {5.0, 20.0};
  CHECK(verify_island_theorem(CompiledMap("z"), inside, big, 512).pass);

  CHECK_THROWS_AS(verify_island_theorem(quintic, std::span(std3, 2), r20), std::invalid_argument);
}

TEST_CASE("asymptotic equality verifier") {
  const GraphSpec fig{{0.0, 0.5}, 0.3};
  ExperimentReport rep = start_report(CompiledMap("z^3"), {3.0, 10.0}, 1024);
  measure_graph(rep, CompiledMap("z^3"), fig);
  for (const ReportRow& row : rep.rows) {
    CHECK(*row.graph_euler == -3);
    CHECK(*row.bad == 0);
  }
  const Verdict v = check_asymptotic_equality(rep);
  CHECK(v.pass);
  CHECK(-*rep.rows[1].graph_euler / rep.rows[1].a == doctest::Approx(1.0).epsilon(1e-5));

  const double radii[] = {4.0, 10.0};
  CHECK(verify_asymptotic_equality(CompiledMap("z"), {{0.1, 0.05}, 1.0}, radii, 512).pass);
}

TEST_CASE("Riemann-Hurwitz verifier") {
  const SphericalDisk std3[] = {disk(0.0), disk(1.0), disk_inf()};
  ExperimentReport rep = start_report(CompiledMap("z^5"), {10.0}, 1024);
  measure_islands(rep, CompiledMap("z^5"), std3);
  CHECK(*rep.rows[0].ramification == 4);
  const Verdict v = check_rh_inequality(rep);
  CHECK(v.pass);
  CHECK(v.need[0] == doctest::Approx(1 + 4 - 2 * a_power(5, 10.0)));

  const double two[] = {2.0};
  const SphericalDisk inside[] = {disk(0.0), disk(1.0), disk({0.0, -1.0})};
  CHECK(verify_rh_inequality(CompiledMap("z"), inside, two, 256).pass);
  const double r20[] = {20.0};
  const SphericalDisk exp3[] = {disk(1.0), disk(-1.0), disk_inf()};
  CHECK(verify_rh_inequality(CompiledMap("exp(z)"), exp3, r20).pass);
}

TEST_CASE("component-island containment and the Euler identity") {
  struct Case {
    const char* map;
    GraphSpec fig;
    double r;
    int resolution;
    std::vector<SphericalDisk> disks;
  };
  const Case cases[] = {
      {"z", {{0.1, 0.05}, 1.0}, 4.0, 512,
       {disk({1.1, 0.05}, 0.05), disk({-0.9, 0.05}, 0.05), disk_inf()}},
      {"z^3", {{0.0, 0.5}, 0.3}, 3.0, 1024,
       {disk({0.3, 0.5}, 0.02), disk({-0.3, 0.5}, 0.02), disk_inf()}},
      {"exp(z)", {{0.1, 0.13}, 1.5}, 20.0, 1024, {disk(1.0), disk(-1.0), disk_inf()}},
  };
  for (const Case& c : cases) {
    CAPTURE(c.map);
    const CompiledMap m(c.map);
    ExperimentReport rep = start_report(m, {c.r}, c.resolution);
    const auto scans = measure_islands(rep, m, c.disks);
    const auto runs = measure_graph(rep, m, c.fig);
    CHECK(verify_euler_identity(runs[0].graph, runs[0].complement));
    const Containment ct = verify_island_in_component(m, runs[0], c.fig, c.disks, scans[0]);
    record_containment(rep.rows[0], ct);
    CHECK(ct.checked > 0);
    CHECK(ct.missing == 0);
    CHECK(ct.ambiguous == 0);
    CHECK(check_island_in_component(rep).pass);
    CHECK(check_euler_identity(rep).pass);
  }

  // Two disks in one lobe cannot be assigned.
  const CompiledMap id("z");
  const GraphSpec fig{{0.1, 0.05}, 1.0};
  ExperimentReport rep = start_report(id, {4.0}, 256);
  const std::vector<SphericalDisk> same = {disk({1.1, 0.05}, 0.02), disk({0.9, 0.05}, 0.02),
                                           disk_inf()};
  const auto scans = measure_islands(rep, id, same);
  const auto runs = measure_graph(rep, id, fig);
  CHECK_THROWS_AS(verify_island_in_component(id, runs[0], fig, same, scans[0]),
                  std::invalid_argument);
}

TEST_CASE("exact checks fail on a defect") {
  ExperimentReport rep;
  ReportRow row;
  row.r = 2.0, row.a = 1.0, row.l = 0.5;
  row.graph_euler = -1, row.chi_C0 = 0, row.sum_chi_C = 1;  // 0 + (-1) + 1 = 0, not 1
  row.components_missing = 1;
  rep.rows = {row};
  CHECK_FALSE(check_euler_identity(rep).pass);
  CHECK(check_euler_identity(rep).worst_slack == 1.0);
  CHECK_FALSE(check_island_in_component(rep).pass);

  // A verifier with no data does not pass.
  CHECK_FALSE(check_mean_degree(rep).pass);
  CHECK(check_mean_degree(rep).rows_checked == 0);
}

TEST_CASE("island trend: needed slack must not grow") {
  ExperimentReport rep;
  for (int k = 0; k < 3; ++k) {
    ReportRow row;
    row.r = 1.0 + k, row.a = 4.0, row.l = 3.0, row.resolution = 100;
    row.island_count = k == 1 ? 4 : 3;  // need 0.25, 0, 0.25
    rep.rows.push_back(row);
  }
  const Verdict v = check_island_theorem(rep);
  CHECK_FALSE(v.trend_ok);
  CHECK_FALSE(v.pass);
  rep.rows[2].island_count = 5;
  CHECK(check_island_theorem(rep).pass);
}

TEST_CASE("report csv round trip recomputes every verdict") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    ExperimentReport rep;
    rep.constants.c1 = 1 + 4 * u(rng);
    rep.constants.c_rh = 0.5 + u(rng);
    const int n = 1 + trial % 5;
    for (int k = 0; k < n; ++k) {
      ReportRow row;
      row.r = 1.0 + k + u(rng);
      row.a = 0.5 + 10 * u(rng);
      row.l = 3 * u(rng);
      row.resolution = 256 << (trial % 3);
      if (u(rng) < 0.8) {
        row.island_count = static_cast<int>(12 * u(rng));
        row.degree_sum = *row.island_count + static_cast<int>(3 * u(rng));
        row.ramification = static_cast<int>(5 * u(rng));
        row.ambiguous_islands = 0;
      }
      if (u(rng) < 0.8) {
        row.graph_euler = -static_cast<int>(12 * u(rng));
        row.good = static_cast<int>(20 * u(rng));
        row.bad = static_cast<int>(3 * u(rng));
        row.suspect = 0;
        row.chi_C0 = static_cast<int>(-5 * u(rng));
        row.sum_chi_C = 1 - *row.chi_C0 - *row.graph_euler + (u(rng) < 0.1);
      }
      if (u(rng) < 0.8) {
        row.mean_degree = row.a * (0.9 + 0.2 * u(rng));
        row.mean_stderr = 0.05 * u(rng);
      }
      if (u(rng) < 0.5) {
        row.arc_good = 3, row.arc_bad = 0, row.arc_suspect = 0;
        row.arc_integral = row.a + u(rng) - 0.5;
        row.coarea_lhs = u(rng);
        row.coarea_rhs = *row.coarea_lhs * (1 + 0.04 * (u(rng) - 0.5));
        row.t_star = u(rng) - 0.5;
      }
      rep.rows.push_back(row);
    }
    const std::string csv = rep.to_csv();
    const ExperimentReport back = ExperimentReport::from_csv(csv);
    CAPTURE(csv);
    // Derived columns are recomputed from rounded inputs, so the text is a
    // fixed point only from the first reload on.
    const std::string again = back.to_csv();
    CHECK(ExperimentReport::from_csv(again).to_csv() == again);
    CHECK(back.rows.size() == rep.rows.size());
    for (auto check : {check_mean_degree, check_island_theorem, check_asymptotic_equality,
                       check_rh_inequality, check_euler_identity, check_island_in_component,
                       check_arcs}) {
      const Verdict x = check(rep), y = check(back);
      CHECK(x.pass == y.pass);
      CHECK(x.trend_ok == y.trend_ok);
      CHECK(x.rows_checked == y.rows_checked);
    }
  }
  CHECK_THROWS_AS(ExperimentReport::from_csv("r,a\n1,2\n"), std::invalid_argument);
}

TEST_CASE("ratio column is l/a to 12 digits") {
  const ExperimentReport rep = start_report(CompiledMap("exp(z)"), {3.0, 7.0}, 256);
  const ExperimentReport back = ExperimentReport::from_csv(rep.to_csv());
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    CHECK(back.rows[k].ratio() == doctest::Approx(rep.rows[k].l / rep.rows[k].a).epsilon(1e-11));
  }
  CHECK(kReportColumns.front() == "r");
  CHECK(kReportColumns[3] == "ratio");
  CHECK(kReportColumns[13] == "mean_degree");
}
