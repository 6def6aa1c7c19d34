#pragma once

// Preimages of curves on the sphere under a map, restricted to |z| <= r.
//
// A curve is the zero set of a real field on the sphere. The pulled-back
// field is sampled on a node grid, crossings are refined on grid edges by
// regula falsi, and saddle cells are settled by sampling inside the cell.
// Preimages of the lemniscate double point become graph vertices; the grid is
// blanked around each one and the four branches are joined to it afterwards.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ahlfors/expr.hpp"
#include "ahlfors/grid.hpp"
#include "ahlfors/metric.hpp"

namespace ahlfors {

// Moebius chart w -> (a w + b) / (c w + d). The base arc is y = 0 with x in
// [x0, x1]; horizontal translates y = t are allowed for t in [t0, t1].
struct RectangleChart {
  cplx a{1.0, 0.0}, b{}, c{}, d{1.0, 0.0};
  double x0 = -1.0, x1 = 1.0;
  double t0 = -0.1, t1 = 0.1;

  void validate() const;  // throws std::invalid_argument
  // Chart coordinate of a sphere point; infinite where the chart has its pole.
  Value apply(const Value& w) const;
  // Point of the sphere with chart coordinate zeta.
  SpherePoint inverse(cplx zeta) const;

  // Chart sending base + s*dir to s (s real), with |dir| the unit of x.
  static RectangleChart along(cplx base, cplx dir, double x0, double x1, double t0, double t1);
};

struct ImplicitCurve {
  enum class Kind { circle, lemniscate, chart_segment };

  Kind kind = Kind::circle;
  SpherePoint center;  // circle
  double radius = 0.0;
  cplx node{};  // lemniscate |(w - node)^2 - scale^2| = scale^2
  double scale = 1.0;
  RectangleChart chart;  // chart segment y = t
  double t = 0.0;
  bool reversed = false;  // flip the orientation of traced polylines

  static ImplicitCurve circle(const SpherePoint& center, double chordal_radius);
  static ImplicitCurve lemniscate(cplx node, double scale);
  static ImplicitCurve chart_segment(const RectangleChart& chart, double t);

  void validate() const;

  // The defining function and its level; the curve is {G = level}.
  double G(const Value& w) const;
  double level() const;
  // Signed field with the same zero set: negative inside the circle, inside
  // the lemniscate lobes, and above the chart line (so traced chart arcs run
  // towards increasing x). Bounded for circle and lemniscate; NaN where it is
  // undefined.
  double field(const Value& w) const;

  // Lemniscate faces: 0 outside, 1 the lobe towards node - scale, 2 the lobe
  // towards node + scale.
  int face(const SpherePoint& w) const;
  // Curve parameter used to decide whether an arc is a homeomorphic lift:
  // argument around the circle centre, argument of (w-node)^2 - scale^2
  // (one turn per lobe), or the chart x coordinate.
  Value parameter_point(const Value& w) const;
};

enum class ArcTag { good, bad, suspect };
const char* to_string(ArcTag t);

struct TracedArc {
  Polyline line;
  int v0 = -1;  // index into vertices when the arc starts at one
  int v1 = -1;
  ArcTag tag = ArcTag::suspect;
};

struct TraceResult {
  double r = 1.0;
  int resolution = 0;
  std::vector<TracedArc> arcs;
  std::vector<cplx> vertices;  // lemniscate node preimages in |z| < r
  double level_error = 0.0;    // max |G(f(z)) - level| over traced points
};

// Throws NumericError("trace", ...) on an unresolved saddle cell or a vertex
// whose branches cannot be separated at this resolution.
TraceResult trace_preimage(const CompiledMap& m, const ImplicitCurve& curve, double r,
                           int resolution);

struct ArcCounts {
  int good = 0, bad = 0, suspect = 0;
  int total() const { return good + bad + suspect; }
};

// Tags every arc in place and returns the tally. Bad arcs enter
// |z| > r (1 - 10 / resolution); suspect arcs pass within three grid steps of
// a zero of f' or fail the homeomorphic-lift test.
ArcCounts classify_arcs(TraceResult& traced, const CompiledMap& m, const ImplicitCurve& curve);

// Zeros of f' in |z| < r.
std::vector<cplx> critical_points(const CompiledMap& m, double r);

// Boundary image f(|z| = r) in chart coordinates, split where f or the chart
// is infinite. Sampling is refined near the chart rectangle.
std::vector<std::vector<cplx>> boundary_image(const CompiledMap& m, double r,
                                              const RectangleChart& chart);

struct Perturbation {
  double t_star = 0.0;
  int crossings = 0;       // crossings of f(|z|=r) with the line at t_star
  double t_random = 0.0;   // a seeded uniform pick among the transversal lines
  double coarea_lhs = 0.0; // mean crossing count * |t_range|
  double coarea_rhs = 0.0; // vertical variation of f(|z|=r) inside the rectangle
  int transversal = 0;     // number of sampled lines passing the margin test
  int samples = 0;
};

// Throws NumericError("arcs", ...) if no sampled line is transversal.
Perturbation select_perturbation(const CompiledMap& m, double r, const RectangleChart& chart,
                                 int n_samples, std::uint64_t seed = 0);

using Profile = std::function<double(double)>;
// Smooth bump (1 - s^2)^2 on [x0, x1], scaled to integrate to one.
Profile bump_profile(double x0, double x1);

// Integral of d_n(gamma_t(x)) beta(x) dx over [x0, x1]. Throws
// std::invalid_argument when beta does not integrate to one.
double arc_test_integral(const CompiledMap& m, const RectangleChart& chart, double t, double r,
                         const Profile& beta);

// The figure-eight graph: one vertex, two edges.
struct GraphSpec {
  cplx node{};
  double scale = 1.0;
  ImplicitCurve curve() const { return ImplicitCurve::lemniscate(node, scale); }
  static constexpr int euler = -1;
};

struct PreimageGraph {
  double r = 1.0;
  int resolution = 0;
  std::vector<TracedArc> arcs;  // every traced arc, bad ones included
  std::vector<cplx> vertices;   // node preimages plus one point per vertex-free loop
  int synthetic_vertices = 0;
  int edges = 0;  // retained (non-bad) arcs
  int euler = 0;  // vertices - edges
  ArcCounts counts;
  double level_error = 0.0;
};

// Throws NumericError("graph", ...) when the node is (numerically) a critical
// value, and propagates tracing errors.
PreimageGraph build_preimage_graph(const CompiledMap& m, const GraphSpec& graph, double r,
                                   int resolution);

struct ComplementComponent {
  int chi = 1;
  bool touches_boundary = false;
  std::size_t pixels = 0;
  cplx sample{};  // a free pixel of the component
};

struct ComplementMap {
  Grid grid;
  std::vector<int> label;  // -1 on walls and outside the disk
  std::vector<ComplementComponent> components;

  int chi_outer() const;     // sum over boundary-touching components
  int chi_interior() const;  // sum over the others
  // Component containing z, looking up to two pixels away when z sits on a wall.
  std::optional<int> component_at(cplx z) const;
};

// Throws NumericError("complement", ...) when two arcs come too close to be
// separated at this resolution.
ComplementMap complement_components(const PreimageGraph& g, double r, int resolution);

std::string graph_svg(const PreimageGraph& g, std::span<const Polyline> extra = {});
std::string graph_json(const PreimageGraph& g, const ComplementMap* comps);

}  // namespace ahlfors
