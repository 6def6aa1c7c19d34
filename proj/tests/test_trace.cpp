#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ahlfors/count.hpp"
#include "ahlfors/trace.hpp"
#include "doctest.h"

using namespace ahlfors;

namespace {

constexpr double kPi = std::numbers::pi;

double chordal_to_unit_circle_from_zero() { return chordal_distance(SpherePoint::at(0.0), SpherePoint::at(1.0)); }

int euler_sum(const PreimageGraph& g, const ComplementMap& c) {
  return c.chi_outer() + g.euler + c.chi_interior();
}

}  // namespace

TEST_CASE("chart and curve basics") {
  const RectangleChart ch = RectangleChart::along({2.0, 1.0}, {0.0, 1.0}, -0.3, 0.3, -0.1, 0.1);
  const Value c = ch.apply(Value::finite({2.0, 1.2}));
  CHECK(std::abs(c.z - cplx(0.2, 0.0)) < 1e-15);
  const SpherePoint back = ch.inverse({0.2, 0.05});
  CHECK(std::abs(ch.apply(Value::finite(back.z)).z - cplx(0.2, 0.05)) < 1e-15);
  RectangleChart bad = ch;
  bad.a = 0.0, bad.b = 1.0, bad.c = 0.0, bad.d = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  const ImplicitCurve lem = ImplicitCurve::lemniscate({0.0, 0.0}, 1.0);
  CHECK(lem.G(Value::finite(std::sqrt(2.0))) == doctest::Approx(1.0));
  CHECK(lem.field(Value::finite(0.0)) == doctest::Approx(0.0));
  CHECK(lem.face(SpherePoint::at(1.0)) == 2);
  CHECK(lem.face(SpherePoint::at(-1.0)) == 1);
  CHECK(lem.face(SpherePoint::at({0.0, 1.0})) == 0);
  CHECK(lem.face(SpherePoint::infinity()) == 0);
  CHECK(lem.field(Value::infinity()) == 0.5);
}

TEST_CASE("trace: z^2 over the unit circle is the unit circle") {
  const CompiledMap m("z^2");
  const ImplicitCurve c = ImplicitCurve::circle(SpherePoint::at(0.0), chordal_to_unit_circle_from_zero());
  const TraceResult t = trace_preimage(m, c, 2.0, 128);
  REQUIRE(t.arcs.size() == 1);
  CHECK(t.arcs[0].line.closed);
  for (cplx z : t.arcs[0].line.pts) CHECK(std::abs(std::abs(z) - 1.0) < 1e-9);
  CHECK(t.level_error < 1e-10);
}

TEST_CASE("trace: z^3 over a small circle around 1 gives three good loops") {
  const CompiledMap m("z^3");
  const ImplicitCurve c = ImplicitCurve::circle(SpherePoint::at(1.0), 0.1);
  TraceResult t = trace_preimage(m, c, 2.0, 256);
  REQUIRE(t.arcs.size() == 3);
  for (int k = 0; k < 3; ++k) {
    const cplx root = std::polar(1.0, 2 * kPi * k / 3);
    const bool around = std::any_of(t.arcs.begin(), t.arcs.end(), [&](const TracedArc& a) {
      return winding_number([&](cplx z) { return Value::finite(z - root); }, a.line.pts, true) == 1;
    });
    CHECK(around);
  }
  const ArcCounts n = classify_arcs(t, m, c);
  CHECK(n.good == 3);
  CHECK(n.bad == 0);
  CHECK(n.suspect == 0);

  ImplicitCurve rev = c;
  rev.reversed = true;
  TraceResult tr = trace_preimage(m, rev, 2.0, 256);
  CHECK(classify_arcs(tr, m, rev).good == 3);
}

TEST_CASE("trace: identity reproduces the curve") {
  const CompiledMap id("z");
  const ImplicitCurve c = ImplicitCurve::circle(SpherePoint::at({0.3, -0.2}), 0.15);
  const TraceResult t = trace_preimage(id, c, 3.0, 128);
  REQUIRE(t.arcs.size() == 1);
  for (cplx z : t.arcs[0].line.pts)
    CHECK(std::abs(chordal_distance(SpherePoint::at(z), c.center) - c.radius) < 1e-12);

  const ImplicitCurve lem = ImplicitCurve::lemniscate({0.1, 0.05}, 1.0);
  const TraceResult tl = trace_preimage(id, lem, 3.0, 256);
  REQUIRE(tl.vertices.size() == 1);
  CHECK(std::abs(tl.vertices[0] - cplx(0.1, 0.05)) < 1e-12);
  CHECK(tl.arcs.size() == 2);
  CHECK(tl.level_error < 1e-9);
}

TEST_CASE("classify: curve through a critical value is suspect") {
  const CompiledMap m("z^2");
  const SpherePoint c = SpherePoint::at({0.5, 0.0});
  const ImplicitCurve through = ImplicitCurve::circle(c, chordal_distance(c, SpherePoint::at(0.0)));
  TraceResult t = trace_preimage(m, through, 2.0, 256);
  const ArcCounts n = classify_arcs(t, m, through);
  CHECK(n.suspect > 0);
  CHECK(n.total() == static_cast<int>(t.arcs.size()));
}

TEST_CASE("classify: exp over a chart segment near 1") {
  const CompiledMap m("exp(z)");
  const RectangleChart ch = RectangleChart::along(1.0, 1.0, -0.3, 0.3, -0.1, 0.1);
  const ImplicitCurve seg = ImplicitCurve::chart_segment(ch, 0.0123);
  TraceResult t = trace_preimage(m, seg, 20.0, 512);
  const ArcCounts n = classify_arcs(t, m, seg);
  CHECK(n.good == 7);
  CHECK(n.bad <= 2);
  CHECK(n.suspect == 0);
  CHECK(t.level_error < 1e-9);
}

TEST_CASE("select_perturbation") {
  // Boundary image |w| = 8 far from the chart.
  const CompiledMap cube("z^3");
  const RectangleChart far = RectangleChart::along({1.0, 1.0}, 1.0, -0.3, 0.3, -0.1, 0.1);
  const Perturbation p = select_perturbation(cube, 2.0, far, 200);
  CHECK(p.crossings == 0);
  CHECK(p.coarea_lhs == 0.0);
  CHECK(p.coarea_rhs == 0.0);
  CHECK(p.transversal == 200);

  // The Cayley-type chart sends the unit circle to the line x = 0: one
  // straight crossing of vertical extent 0.2.
  RectangleChart line;
  line.a = 1.0, line.b = 1.0, line.c = -1.0, line.d = 1.0;
  line.x0 = -0.3, line.x1 = 0.3, line.t0 = -0.1, line.t1 = 0.1;
  const Perturbation q = select_perturbation(CompiledMap("z"), 1.0, line, 400);
  CHECK(q.coarea_rhs == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(q.coarea_lhs == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(q.crossings == 1);

  // A tangency: lines near t = 0 are blocked, the rest cross twice.
  const RectangleChart tangent = RectangleChart::along(1.0, {0.0, 1.0}, -0.3, 0.3, -0.1, 0.1);
  const Perturbation s = select_perturbation(CompiledMap("z"), 1.0, tangent, 1000, 3);
  CHECK(s.transversal < 1000);
  CHECK(std::abs(s.coarea_lhs - s.coarea_rhs) <= 0.02 * std::max(s.coarea_rhs, 1.0));
  CHECK(s.coarea_rhs == doctest::Approx(2 * (1 - std::sqrt(1 - 0.09))).epsilon(1e-4));
  CHECK(s.crossings == 0);
  CHECK(s.t_star < 0.0);
  CHECK(s.t_random >= -0.1);
  CHECK(s.t_random <= 0.1);

  // The x = 0 line turned to a 1 degree slope: every line of a thin band
  // crosses it too shallowly.
  RectangleChart flat = line;
  const cplx turn = std::polar(1.0, kPi / 2 + kPi / 180);
  flat.a = turn, flat.b = turn;
  flat.t0 = -1e-3, flat.t1 = 1e-3;
  CHECK_THROWS_AS(select_perturbation(CompiledMap("z"), 1.0, flat, 100), NumericError);
}

TEST_CASE("coarea identity on several maps and radii") {
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
  for (const Case& c : cases) {
    CAPTURE(c.map);
    const RectangleChart ch = RectangleChart::along(c.base, c.dir, -2.0, 2.0, -0.5, 0.5);
    const Perturbation p = select_perturbation(CompiledMap(c.map), c.r, ch, 1000);
    CHECK(std::abs(p.coarea_lhs - p.coarea_rhs) <= 0.02 * std::max(p.coarea_rhs, 1.0));
  }
}

TEST_CASE("arc test integral") {
  const CompiledMap cube("z^3");
  const RectangleChart ch = RectangleChart::along({2.0, 1.0}, 1.0, -0.3, 0.3, -0.1, 0.1);
  const Profile beta = bump_profile(ch.x0, ch.x1);
  CHECK(arc_test_integral(cube, ch, 0.0, 10.0, beta) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(arc_test_integral(CompiledMap("z"), ch, 0.0, 10.0, beta) ==
        doctest::Approx(1.0).epsilon(1e-10));
  const Profile twice = [&](double x) { return 2 * beta(x); };
  CHECK_THROWS_AS(arc_test_integral(cube, ch, 0.0, 10.0, twice), std::invalid_argument);
  // Part of the segment lies outside f(|z| < r): the count drops there.
  const double partial = arc_test_integral(CompiledMap("z"), ch, 0.0, 2.2, beta);
  CHECK(partial > 0.0);
  CHECK(partial < 1.0);
}

TEST_CASE("preimage graph of the figure-eight") {
  const GraphSpec fig{{0.0, 0.5}, 0.3};
  const PreimageGraph g3 = build_preimage_graph(CompiledMap("z^3"), fig, 3.0, 512);
  CHECK(g3.vertices.size() == 3);
  CHECK(g3.edges == 6);
  CHECK(g3.euler == -3);
  CHECK(g3.counts.good == 6);
  CHECK(g3.counts.bad == 0);
  CHECK(g3.counts.suspect == 0);

  const GraphSpec fig1{{0.1, 0.05}, 1.0};
  const PreimageGraph g1 = build_preimage_graph(CompiledMap("z"), fig1, 4.0, 256);
  CHECK(g1.euler == -1);
  CHECK(g1.edges == 2);

  // Too small a disk: the lifted lobes leave it.
  const PreimageGraph gs = build_preimage_graph(CompiledMap("z^2"), {{0.3, 0.4}, 0.4}, 0.9, 256);
  CHECK(gs.counts.bad > 0);
  CHECK(gs.euler == static_cast<int>(gs.vertices.size()) - gs.edges);
  const ComplementMap cs = complement_components(gs, 0.9, 512);
  CHECK(euler_sum(gs, cs) == 1);

  CHECK_THROWS_AS(build_preimage_graph(CompiledMap("z^2"), {{0.0, 0.0}, 0.5}, 2.0, 256),
                  NumericError);
}

TEST_CASE("complement components of the identity figure-eight") {
  const GraphSpec fig{{0.1, 0.05}, 1.0};
  const PreimageGraph g = build_preimage_graph(CompiledMap("z"), fig, 4.0, 256);
  const ComplementMap c = complement_components(g, 4.0, 512);
  REQUIRE(c.components.size() == 3);
  int lobes = 0;
  for (const auto& comp : c.components) {
    if (comp.touches_boundary) {
      CHECK(comp.chi == 0);
    } else {
      CHECK(comp.chi == 1);
      ++lobes;
    }
  }
  CHECK(lobes == 2);
  CHECK(euler_sum(g, c) == 1);
  const auto left = c.component_at({-1.0, 0.05});
  const auto right = c.component_at({1.2, 0.05});
  REQUIRE(left);
  REQUIRE(right);
  CHECK(*left != *right);
}

TEST_CASE("Euler identity over several maps and graphs") {
  struct Case {
    const char* map;
    cplx node;
    double scale, r;
  };
  const Case cases[] = {
      {"z", {0.1, 0.05}, 1.0, 4.0},
      {"z^2", {0.3, 0.4}, 0.4, 2.0},
      {"z^2", {0.2, 0.1}, 0.5, 3.0},  // the critical value 0 sits inside a lobe
      {"z^3", {0.0, 0.5}, 0.3, 3.0},
      {"exp(z)", {0.1, 0.13}, 1.5, 12.0},
      {"(z^2-1)/(z^2+1)", {0.3, 0.2}, 0.5, 3.0},
      {"z^3 - z", {0.2, 0.3}, 0.4, 2.0},
  };
  for (const Case& c : cases) {
    CAPTURE(c.map);
    CAPTURE(c.r);
    const CompiledMap m(c.map);
    const PreimageGraph g = build_preimage_graph(m, {c.node, c.scale}, c.r, 512);
    const ComplementMap comp = complement_components(g, c.r, 1024);
    CHECK(euler_sum(g, comp) == 1);
    CHECK(g.counts.total() == static_cast<int>(g.arcs.size()));
    CHECK(g.level_error < 1e-8);
    for (const auto& cc : comp.components) {
      if (cc.touches_boundary)
        CHECK(cc.chi <= 0);
      else
        CHECK(cc.chi <= 1);
    }
  }
}

TEST_CASE("degree consistency: good arcs = d_n along a clean segment") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const char* maps[] = {"z^3", "z^2 + 0.3*z", "exp(z)", "z^4 - 1"};
  int checked = 0;
  for (const char* src : maps) {
    const CompiledMap m(src);
    for (int trial = 0; trial < 3; ++trial) {
      const cplx base(1.5 + 0.5 * u(rng), 1.0 + 0.5 * u(rng));
      const cplx dir = std::polar(1.0, kPi * u(rng));
      const RectangleChart ch = RectangleChart::along(base, dir, -0.2, 0.2, -0.05, 0.05);
      const double r = 3.0;
      const ImplicitCurve seg = ImplicitCurve::chart_segment(ch, 0.0);
      TraceResult t = trace_preimage(m, seg, r, 512);
      const ArcCounts n = classify_arcs(t, m, seg);
      CAPTURE(src);
      CAPTURE(trial);
      CHECK(n.total() == static_cast<int>(t.arcs.size()));
      if (n.bad != 0 || n.suspect != 0) continue;
      const PreimageCounter pc(m);
      for (double x : {-0.15, 0.0, 0.11})
        CHECK(pc.count(ch.inverse({x, 0.0}), r) == n.good);
      ++checked;
    }
  }
  CHECK(checked >= 6);
}

TEST_CASE("export") {
  const PreimageGraph g = build_preimage_graph(CompiledMap("z"), {{0.1, 0.05}, 1.0}, 4.0, 128);
  const ComplementMap c = complement_components(g, 4.0, 256);
  const std::string svg = graph_svg(g);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("polyline") != std::string::npos);
  const std::string js = graph_json(g, &c);
  CHECK(js.find("\"euler\": -1") != std::string::npos);
  CHECK(js.find("\"components\"") != std::string::npos);
  CHECK(graph_json(g, &c) == js);
}
