#include "ahlfors/trace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ahlfors/count.hpp"
#include "json.hpp"

namespace ahlfors {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool finite_c(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

std::string where(cplx z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.6g%+.6gi", z.real(), z.imag());
  return buf;
}

double point_segment_distance(cplx p, cplx a, cplx b) {
  const cplx ab = b - a;
  const double len2 = std::norm(ab);
  if (len2 == 0.0) return std::abs(p - a);
  const double s = std::clamp(((p - a) * std::conj(ab)).real() / len2, 0.0, 1.0);
  return std::abs(p - (a + s * ab));
}

// Solve f(z) = w by Newton from z0.
std::optional<cplx> newton_solve(const CompiledMap& m, cplx w, cplx z0) {
  cplx z = z0;
  for (int it = 0; it < 50; ++it) {
    const Value fz = m.f().evaluate(z), dz = m.df().evaluate(z);
    if (!fz.is_finite() || !dz.is_finite() || dz.z == cplx{}) return std::nullopt;
    const cplx step = (fz.z - w) / dz.z;
    z -= step;
    if (!finite_c(z)) return std::nullopt;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) return z;
  }
  const Value fz = m.f().evaluate(z);
  if (fz.is_finite() && std::abs(fz.z - w) <= 1e-12 * std::max(1.0, std::abs(w))) return z;
  return std::nullopt;
}

cplx leftmost_point(const Polyline& p) {
  cplx best = p.pts.front();
  for (cplx z : p.pts)
    if (z.real() < best.real() || (z.real() == best.real() && z.imag() < best.imag())) best = z;
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Charts and curves

void RectangleChart::validate() const {
  const cplx det = a * d - b * c;
  if (!(std::abs(det) > 0.0) || !finite_c(det))
    throw std::invalid_argument("chart: Moebius coefficients need ad - bc != 0");
  if (!(x0 < x1) || !(t0 < t1) || !std::isfinite(x0 + x1 + t0 + t1))
    throw std::invalid_argument("chart: need x0 < x1 and t0 < t1");
}

Value RectangleChart::apply(const Value& w) const {
  if (w.is_indeterminate()) return w;
  if (w.is_infinite()) return c == cplx{} ? Value::infinity() : Value::finite(a / c);
  const cplx den = c * w.z + d;
  if (den == cplx{}) return Value::infinity();
  const cplx v = (a * w.z + b) / den;
  return finite_c(v) ? Value::finite(v) : Value::infinity();
}

SpherePoint RectangleChart::inverse(cplx zeta) const {
  const cplx den = a - c * zeta;
  if (den == cplx{}) return SpherePoint::infinity();
  const cplx w = (d * zeta - b) / den;
  return finite_c(w) ? SpherePoint::at(w) : SpherePoint::infinity();
}

RectangleChart RectangleChart::along(cplx base, cplx dir, double x0, double x1, double t0,
                                     double t1) {
  if (dir == cplx{}) throw std::invalid_argument("chart: direction must be non-zero");
  RectangleChart ch;
  ch.a = 1.0 / dir;
  ch.b = -base / dir;
  ch.c = 0.0;
  ch.d = 1.0;
  ch.x0 = x0, ch.x1 = x1, ch.t0 = t0, ch.t1 = t1;
  return ch;
}

ImplicitCurve ImplicitCurve::circle(const SpherePoint& center, double chordal_radius) {
  ImplicitCurve c;
  c.kind = Kind::circle;
  c.center = center;
  c.radius = chordal_radius;
  c.validate();
  return c;
}

ImplicitCurve ImplicitCurve::lemniscate(cplx node, double scale) {
  ImplicitCurve c;
  c.kind = Kind::lemniscate;
  c.node = node;
  c.scale = scale;
  c.validate();
  return c;
}

ImplicitCurve ImplicitCurve::chart_segment(const RectangleChart& chart, double t) {
  ImplicitCurve c;
  c.kind = Kind::chart_segment;
  c.chart = chart;
  c.t = t;
  c.validate();
  return c;
}

void ImplicitCurve::validate() const {
  switch (kind) {
    case Kind::circle:
      if (!(radius > 0.0 && radius < kSphereDiameter))
        throw std::invalid_argument("circle: chordal radius must lie in (0, diameter)");
      break;
    case Kind::lemniscate:
      if (!(scale > 0.0) || !finite_c(node))
        throw std::invalid_argument("lemniscate: scale must be positive, node finite");
      break;
    case Kind::chart_segment:
      chart.validate();
      if (!std::isfinite(t)) throw std::invalid_argument("chart segment: t must be finite");
      break;
  }
}

double ImplicitCurve::level() const {
  switch (kind) {
    case Kind::circle:
      return radius;
    case Kind::lemniscate:
      return scale * scale;
    case Kind::chart_segment:
      return t;
  }
  return 0.0;
}

double ImplicitCurve::G(const Value& w) const {
  if (w.is_indeterminate()) return kNaN;
  switch (kind) {
    case Kind::circle:
      return chordal_distance(SpherePoint::from(w), center);
    case Kind::lemniscate: {
      if (w.is_infinite()) return std::numeric_limits<double>::infinity();
      const cplx u = w.z - node;
      return std::abs(u * u - scale * scale);
    }
    case Kind::chart_segment: {
      const Value y = chart.apply(w);
      return y.is_finite() ? y.z.imag() : kNaN;
    }
  }
  return kNaN;
}

double ImplicitCurve::field(const Value& w) const {
  if (w.is_indeterminate()) return kNaN;
  switch (kind) {
    case Kind::circle:
      return G(w) - radius;
    case Kind::lemniscate: {
      const double s2 = scale * scale;
      const double g = G(w);
      if (!(g < 1e300)) return 0.5;
      return g / (g + s2) - 0.5;
    }
    case Kind::chart_segment:
      return t - G(w);
  }
  return kNaN;
}

int ImplicitCurve::face(const SpherePoint& w) const {
  if (kind != Kind::lemniscate) throw std::logic_error("face: only lemniscates have faces");
  if (w.infinite) return 0;
  const Value v = Value::finite(w.z);
  if (G(v) >= level()) return 0;
  return (w.z - node).real() < 0.0 ? 1 : 2;
}

Value ImplicitCurve::parameter_point(const Value& w) const {
  if (w.is_indeterminate()) return w;
  switch (kind) {
    case Kind::circle: {
      // Rotation of the sphere taking the centre to 0.
      if (center.infinite) return extended::div(Value::finite({1.0, 0.0}), w);
      const cplx c = center.z;
      if (w.is_infinite())
        return c == cplx{} ? Value::infinity() : Value::finite(1.0 / std::conj(c));
      return extended::div(Value::finite(w.z - c), Value::finite(1.0 + std::conj(c) * w.z));
    }
    case Kind::lemniscate: {
      if (w.is_infinite()) return w;
      const cplx u = w.z - node;
      return Value::finite(u * u - scale * scale);
    }
    case Kind::chart_segment:
      return chart.apply(w);
  }
  return Value::indeterminate();
}

const char* to_string(ArcTag t) {
  switch (t) {
    case ArcTag::good:
      return "good";
    case ArcTag::bad:
      return "bad";
    case ArcTag::suspect:
      return "suspect";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Critical points and node preimages

namespace {

// Fallback for maps without an entire-fraction form: Newton on g from every
// grid node where |g| is a strict local minimum.
std::vector<cplx> grid_zeros(const Program& g, const Program& dg, double r) {
  const Grid grid{r * 1.05, 256};
  const GridValues gv = sample_grid(g, grid);
  const int side = grid.nodes_per_side();
  auto mag = [&](int i, int j) {
    const std::size_t k = grid.index(i, j);
    return gv.kinds[k] == ValueKind::finite ? std::hypot(gv.re[k], gv.im[k])
                                            : std::numeric_limits<double>::infinity();
  };
  std::vector<cplx> out;
  for (int j = 1; j + 1 < side; ++j)
    for (int i = 1; i + 1 < side; ++i) {
      const double v = mag(i, j);
      bool minimum = std::isfinite(v);
      for (int dj = -1; dj <= 1 && minimum; ++dj)
        for (int di = -1; di <= 1 && minimum; ++di)
          if ((di || dj) && mag(i + di, j + dj) <= v) minimum = false;
      if (!minimum) continue;
      cplx z = grid.node(i, j);
      bool ok = false;
      for (int it = 0; it < 60; ++it) {
        const Value a = g.evaluate(z), b = dg.evaluate(z);
        if (!a.is_finite() || !b.is_finite() || b.z == cplx{}) break;
        const cplx step = a.z / b.z;
        z -= step;
        if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(z))) {
          ok = true;
          break;
        }
      }
      if (!ok || std::abs(z - grid.node(i, j)) > 2 * grid.step() || std::abs(z) >= r) continue;
      if (std::none_of(out.begin(), out.end(),
                       [&](cplx q) { return std::abs(q - z) < 1e-8 * std::max(1.0, r); }))
        out.push_back(z);
    }
  return out;
}

std::vector<Root> roots_near(const CompiledMap& m, const SpherePoint& p, double r) {
  const PreimageCounter pc(m);
  for (double grow : {1.0, 1.0071, 1.0193}) {
    try {
      return pc.roots(p, r * grow);
    } catch (const NumericError&) {
    }
  }
  throw NumericError("trace", "could not isolate solutions near |z| = " + std::to_string(r));
}

// Preimages of the lemniscate node inside |z| < radius.
std::vector<cplx> node_preimages(const CompiledMap& m, cplx node, double radius) {
  std::vector<Root> roots;
  bool have = false;
  try {
    roots = roots_near(m, SpherePoint::at(node), radius);
    have = true;
  } catch (const NumericError&) {
  }
  std::vector<cplx> out;
  if (have) {
    for (const Root& rt : roots) {
      if (rt.multiplicity > 1)
        throw NumericError("graph", "graph node " + where(node) +
                                        " is a critical value; perturb the node");
      out.push_back(rt.z);
    }
    return out;
  }
  const MapExpr shifted(build::sub(m.expr().root_ptr(), build::constant(node)), "");
  return grid_zeros(Program(shifted), m.df(), radius);
}

}  // namespace

std::vector<cplx> critical_points(const CompiledMap& m, double r) {
  if (m.derivative_expr().is_constant()) return {};
  std::vector<cplx> out;
  try {
    const CompiledMap d(m.derivative_expr());
    for (const Root& rt : roots_near(d, SpherePoint::at(0.0), r))
      if (std::abs(rt.z) < r) out.push_back(rt.z);
    return out;
  } catch (const NumericError&) {
  }
  const CompiledMap d(m.derivative_expr());
  return grid_zeros(d.f(), d.df(), r);
}

// ---------------------------------------------------------------------------
// Tracing

namespace {

struct Tracer {
  const CompiledMap& m;
  const ImplicitCurve& curve;
  Grid g;
  double h;

  double F(cplx z) const { return curve.field(m.f().evaluate(z)); }

  // Illinois regula falsi on the segment a -> b; va and vb straddle 0.
  cplx locate(cplx a, double va, cplx b, double vb) const {
    if (vb == 0.0) return b;
    if (va == 0.0) return a;
    cplx lo = a, hi = b;
    double flo = va, fhi = vb;
    int side = 0;
    for (int it = 0; it < 80; ++it) {
      double s = flo / (flo - fhi);
      if (!(s > 0.0 && s < 1.0)) s = 0.5;
      cplx z = lo + s * (hi - lo);
      double fz = F(z);
      if (!std::isfinite(fz)) {
        z = 0.5 * (lo + hi);
        fz = F(z);
        if (!std::isfinite(fz)) break;
      }
      if (fz == 0.0) return z;
      if ((fz < 0.0) == (flo < 0.0)) {
        lo = z, flo = fz;
        if (side == -1) fhi *= 0.5;
        side = -1;
      } else {
        hi = z, fhi = fz;
        if (side == 1) flo *= 0.5;
        side = 1;
      }
      if (std::abs(hi - lo) <= 1e-14 * std::max(h, std::abs(lo))) break;
    }
    const double s = flo / (flo - fhi);
    return lo + (std::isfinite(s) ? std::clamp(s, 0.0, 1.0) : 0.5) * (hi - lo);
  }

  // Which pair of diagonal corners of the saddle cell (i, j) is connected
  // inside the cell, by sampling progressively finer sub-grids.
  bool join_negatives(int i, int j, std::span<const double> field) const {
    const cplx z0 = g.node(i, j);
    const std::array<double, 4> corner = {field[g.index(i, j)], field[g.index(i + 1, j)],
                                          field[g.index(i + 1, j + 1)], field[g.index(i, j + 1)]};
    const int k = corner[0] < 0.0 ? 0 : 1;
    for (int depth = 1; depth <= 6; ++depth) {
      const int s = 1 << depth, w = s + 1;
      std::vector<signed char> sign(static_cast<std::size_t>(w) * w);
      for (int b = 0; b <= s; ++b)
        for (int a = 0; a <= s; ++a) {
          double v;
          if ((a == 0 || a == s) && (b == 0 || b == s)) {
            const int c = (b == 0) ? (a == 0 ? 0 : 1) : (a == 0 ? 3 : 2);
            v = corner[c];
          } else {
            v = F(z0 + cplx(h * a / s, h * b / s));
          }
          sign[static_cast<std::size_t>(b) * w + a] = std::isnan(v) ? 0 : (v < 0.0 ? -1 : 1);
        }
      const std::array<std::pair<int, int>, 4> cpos = {
          std::pair{0, 0}, std::pair{s, 0}, std::pair{s, s}, std::pair{0, s}};
      auto connected = [&](int from, int to, signed char want) {
        std::vector<char> seen(sign.size(), 0);
        std::deque<std::pair<int, int>> q{cpos[from]};
        seen[static_cast<std::size_t>(cpos[from].second) * w + cpos[from].first] = 1;
        while (!q.empty()) {
          const auto [a, b] = q.front();
          q.pop_front();
          if (std::pair{a, b} == cpos[to]) return true;
          static constexpr int d4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
          for (const auto& d : d4) {
            const int na = a + d[0], nb = b + d[1];
            if (na < 0 || nb < 0 || na > s || nb > s) continue;
            const std::size_t idx = static_cast<std::size_t>(nb) * w + na;
            if (seen[idx] || sign[idx] != want) continue;
            seen[idx] = 1;
            q.emplace_back(na, nb);
          }
        }
        return false;
      };
      const bool neg = connected(k, k + 2, -1);
      const bool pos = connected(k + 1, (k + 3) % 4, 1);
      if (neg != pos) return neg;
    }
    throw NumericError("trace", "unresolved saddle in cell (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ") near z = " + where(z0) +
                                    "; perturb the curve level");
  }
};

// Point where the curve meets |z| = r between p (inside) and q (outside).
cplx circle_crossing(const Tracer& tr, cplx p, cplx q, double r) {
  const cplx d = q - p;
  const double A = std::norm(d), B = 2.0 * (p * std::conj(d)).real(), C = std::norm(p) - r * r;
  const double disc = std::max(0.0, B * B - 4 * A * C);
  double s = A > 0.0 ? (-B + std::sqrt(disc)) / (2 * A) : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  const cplx zc = p + s * d;
  const double th = std::arg(zc), dth = tr.h / (4.0 * r);
  auto Fth = [&](double t) { return tr.F(std::polar(r, t)); };
  for (int k = 1; k <= 8; ++k) {
    double a = th - k * dth, b = th + k * dth;
    double fa = Fth(a), fb = Fth(b);
    if (!std::isfinite(fa) || !std::isfinite(fb)) break;
    if ((fa < 0.0) == (fb < 0.0)) continue;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (a + b), fm = Fth(mid);
      if (!std::isfinite(fm)) break;
      if ((fm < 0.0) == (fa < 0.0))
        a = mid, fa = fm;
      else
        b = mid, fb = fm;
    }
    return std::polar(r, 0.5 * (a + b));
  }
  return zc;
}

// Split arcs into their runs satisfying keep(z); boundary points come from cut(inside, outside).
template <class Keep, class Cut>
std::vector<TracedArc> clip_arcs(std::vector<TracedArc> arcs, Keep keep, Cut cut) {
  std::vector<TracedArc> out;
  for (TracedArc& arc : arcs) {
    std::vector<cplx>& pts = arc.line.pts;
    std::vector<char> in(pts.size());
    bool all = true, none = true;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      in[k] = keep(pts[k]);
      all = all && in[k];
      none = none && !in[k];
    }
    if (all) {
      out.push_back(std::move(arc));
      continue;
    }
    if (none) continue;
    std::vector<cplx> seq = pts;
    std::vector<char> sin = in;
    const bool closed = arc.line.closed;
    if (closed) {
      // Start at an outside point and walk once around.
      const std::size_t s =
          static_cast<std::size_t>(std::find(in.begin(), in.end(), 0) - in.begin());
      std::rotate(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(s), seq.end());
      std::rotate(sin.begin(), sin.begin() + static_cast<std::ptrdiff_t>(s), sin.end());
      seq.push_back(seq.front());
      sin.push_back(sin.front());
    }
    TracedArc cur;
    bool open_run = false;
    for (std::size_t k = 0; k < seq.size(); ++k) {
      if (sin[k]) {
        if (!open_run) {
          cur = TracedArc{};
          if (k == 0) {
            cur.v0 = arc.v0;
          } else {
            cur.line.pts.push_back(cut(seq[k], seq[k - 1]));
          }
          open_run = true;
        }
        cur.line.pts.push_back(seq[k]);
      } else if (open_run) {
        cur.line.pts.push_back(cut(seq[k - 1], seq[k]));
        out.push_back(std::move(cur));
        open_run = false;
      }
    }
    if (open_run) {
      if (!closed) cur.v1 = arc.v1;
      out.push_back(std::move(cur));
    }
  }
  return out;
}

}  // namespace

TraceResult trace_preimage(const CompiledMap& m, const ImplicitCurve& curve, double r,
                           int resolution) {
  curve.validate();
  if (!(r > 0.0)) throw std::invalid_argument("trace: radius must be positive");
  if (resolution < 64) throw std::invalid_argument("trace: resolution must be >= 64");

  Tracer tr{m, curve, Grid{r * (1.0 + 4.0 / resolution), resolution}, 0.0};
  tr.h = tr.g.step();
  const Grid& g = tr.g;
  const double h = tr.h;
  const GridValues gv = sample_grid(m.f(), g);
  std::vector<double> field(g.node_count());
  for (std::size_t k = 0; k < field.size(); ++k)
    field[k] = curve.field(Value{{gv.re[k], gv.im[k]}, gv.kinds[k]});

  // Blank a small disk around every node preimage.
  std::vector<cplx> verts;
  if (curve.kind == ImplicitCurve::Kind::lemniscate) {
    verts = node_preimages(m, curve.node, g.r * std::numbers::sqrt2);
    const auto crit = critical_points(m, g.r * std::numbers::sqrt2);
    for (cplx v : verts) {
      for (cplx c : crit)
        if (std::abs(c - v) < 4 * h)
          throw NumericError("graph", "graph node " + where(curve.node) +
                                          " is too close to a critical value; perturb the node");
      const int ic = static_cast<int>(std::floor((v.real() + g.r) / h));
      const int jc = static_cast<int>(std::floor((v.imag() + g.r) / h));
      for (int j = jc - 2; j <= jc + 3; ++j)
        for (int i = ic - 2; i <= ic + 3; ++i) {
          if (i < 0 || j < 0 || i > g.n || j > g.n) continue;
          if (std::abs(g.node(i, j) - v) < 1.5 * h) field[g.index(i, j)] = kNaN;
        }
    }
  }

  MarchOptions opt;
  opt.locate = [&](cplx a, double va, cplx b, double vb) { return tr.locate(a, va, b, vb); };
  opt.join_negatives = [&](int i, int j) { return tr.join_negatives(i, j, field); };
  std::vector<Polyline> lines = march(g, field, {0, 0, g.n, g.n}, opt);

  std::vector<TracedArc> arcs;
  arcs.reserve(lines.size());
  std::vector<int> incidence(verts.size(), 0);
  auto nearest_vertex = [&](cplx z) {
    int best = -1;
    double bd = 4.0 * h;
    for (std::size_t k = 0; k < verts.size(); ++k) {
      const double d = std::abs(verts[k] - z);
      if (d < bd) bd = d, best = static_cast<int>(k);
    }
    return best;
  };
  for (Polyline& pl : lines) {
    TracedArc arc;
    if (!pl.closed && !verts.empty()) {
      arc.v0 = nearest_vertex(pl.pts.front());
      arc.v1 = nearest_vertex(pl.pts.back());
      if (arc.v0 >= 0) {
        pl.pts.insert(pl.pts.begin(), verts[arc.v0]);
        ++incidence[arc.v0];
      }
      if (arc.v1 >= 0) {
        pl.pts.push_back(verts[arc.v1]);
        ++incidence[arc.v1];
      }
    }
    arc.line = std::move(pl);
    arcs.push_back(std::move(arc));
  }
  for (std::size_t k = 0; k < verts.size(); ++k) {
    const cplx v = verts[k];
    const bool interior = std::abs(v.real()) < g.r - 6 * h && std::abs(v.imag()) < g.r - 6 * h;
    if (interior && incidence[k] != 4)
      throw NumericError("trace", "vertex at " + where(v) + " has " +
                                      std::to_string(incidence[k]) +
                                      " branches instead of 4; increase the resolution");
  }
  if (curve.reversed)
    for (TracedArc& a : arcs) {
      std::reverse(a.line.pts.begin(), a.line.pts.end());
      std::swap(a.v0, a.v1);
    }

  arcs = clip_arcs(
      std::move(arcs), [&](cplx z) { return std::abs(z) <= r; },
      [&](cplx in, cplx out) { return circle_crossing(tr, in, out, r); });

  if (curve.kind == ImplicitCurve::Kind::chart_segment) {
    const RectangleChart& ch = curve.chart;
    auto xval = [&](cplx z) {
      const Value c = ch.apply(m.f().evaluate(z));
      return c.is_finite() ? c.z.real() : kNaN;
    };
    arcs = clip_arcs(
        std::move(arcs),
        [&](cplx z) {
          const double x = xval(z);
          return x >= ch.x0 && x <= ch.x1;
        },
        [&](cplx in, cplx out) {
          const double xi = xval(in), xo = xval(out);
          const double xb = (std::isfinite(xo) && xo > ch.x1) ? ch.x1
                            : (std::isfinite(xo) && xo < ch.x0)
                                ? ch.x0
                                : (std::abs(xi - ch.x0) < std::abs(xi - ch.x1) ? ch.x0 : ch.x1);
          const double s = std::isfinite(xo) ? std::clamp((xb - xi) / (xo - xi), 0.0, 1.0) : 0.5;
          const cplx seed = in + s * (out - in);
          const SpherePoint target = ch.inverse(cplx(xb, curve.t));
          if (!target.infinite)
            if (auto z = newton_solve(m, target.z, seed); z && std::abs(*z - seed) < 2 * h)
              return *z;
          return seed;
        });
  }

  // Vertices inside the disk, re-indexed in (real, imag) order.
  std::vector<int> order(verts.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (verts[a].real() != verts[b].real()) return verts[a].real() < verts[b].real();
    return verts[a].imag() < verts[b].imag();
  });
  std::vector<int> remap(verts.size(), -1);
  TraceResult out;
  out.r = r;
  out.resolution = resolution;
  for (int k : order)
    if (std::abs(verts[k]) < r) {
      remap[k] = static_cast<int>(out.vertices.size());
      out.vertices.push_back(verts[k]);
    }
  for (TracedArc& a : arcs) {
    if (a.line.pts.size() < 2) continue;
    a.v0 = a.v0 >= 0 ? remap[a.v0] : -1;
    a.v1 = a.v1 >= 0 ? remap[a.v1] : -1;
    out.arcs.push_back(std::move(a));
  }
  std::stable_sort(out.arcs.begin(), out.arcs.end(), [](const TracedArc& a, const TracedArc& b) {
    const cplx la = leftmost_point(a.line), lb = leftmost_point(b.line);
    if (la.real() != lb.real()) return la.real() < lb.real();
    return la.imag() < lb.imag();
  });

  const double c = curve.level();
  for (const TracedArc& a : out.arcs)
    for (cplx z : a.line.pts) {
      const double e = std::abs(curve.G(m.f().evaluate(z)) - c);
      if (std::isfinite(e)) out.level_error = std::max(out.level_error, e);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Classification

namespace {

// Homeomorphic-lift test on a single arc.
bool lifts_once(const TracedArc& arc, const CompiledMap& m, const ImplicitCurve& curve) {
  const auto& pts = arc.line.pts;
  if (curve.kind == ImplicitCurve::Kind::chart_segment) {
    if (arc.line.closed) return false;
    const RectangleChart& ch = curve.chart;
    std::vector<double> xs;
    for (cplx z : pts) {
      const Value v = ch.apply(m.f().evaluate(z));
      if (!v.is_finite()) return false;
      xs.push_back(v.z.real());
    }
    const double tol = 1e-7 * (ch.x1 - ch.x0);
    const bool up = xs.back() > xs.front();
    for (std::size_t k = 1; k < xs.size(); ++k)
      if (up ? xs[k] < xs[k - 1] - tol : xs[k] > xs[k - 1] + tol) return false;
    const double lo = std::min(xs.front(), xs.back()), hi = std::max(xs.front(), xs.back());
    return std::abs(lo - ch.x0) <= tol && std::abs(hi - ch.x1) <= tol;
  }

  const bool lem = curve.kind == ImplicitCurve::Kind::lemniscate;
  if (lem ? (arc.line.closed || arc.v0 < 0 || arc.v1 < 0) : !arc.line.closed) return false;
  const ComplexFn p = [&](cplx z) { return curve.parameter_point(m.f().evaluate(z)); };
  double turns;
  try {
    turns = winding_turns(p, pts, arc.line.closed, "trace");
  } catch (const NumericError&) {
    return false;
  }
  const double want = curve.reversed ? -1.0 : 1.0;
  if (std::abs(turns - want) > 0.05) return false;
  // Monotone along the polyline itself.
  std::vector<cplx> vals;
  for (cplx z : pts) {
    const Value v = p(z);
    if (!v.is_finite() || v.z == cplx{}) return false;
    vals.push_back(v.z);
  }
  if (arc.line.closed) vals.push_back(vals.front());
  for (std::size_t k = 1; k < vals.size(); ++k)
    if (want * std::arg(vals[k] / vals[k - 1]) < -1e-9) return false;
  return true;
}

}  // namespace

ArcCounts classify_arcs(TraceResult& traced, const CompiledMap& m, const ImplicitCurve& curve) {
  const double r = traced.r;
  const double margin = r * (1.0 - 10.0 / traced.resolution);
  const double h = 2.0 * r * (1.0 + 4.0 / traced.resolution) / traced.resolution;
  const std::vector<cplx> crit = critical_points(m, r * 1.05);
  ArcCounts counts;
  for (TracedArc& arc : traced.arcs) {
    const auto& pts = arc.line.pts;
    const bool touches =
        std::any_of(pts.begin(), pts.end(), [&](cplx z) { return std::abs(z) > margin; });
    if (touches) {
      arc.tag = ArcTag::bad;
      ++counts.bad;
      continue;
    }
    bool near_crit = false;
    for (cplx c : crit) {
      for (std::size_t k = 0; k + 1 < pts.size() && !near_crit; ++k)
        near_crit = point_segment_distance(c, pts[k], pts[k + 1]) < 3 * h;
      if (arc.line.closed && !near_crit && pts.size() > 1)
        near_crit = point_segment_distance(c, pts.back(), pts.front()) < 3 * h;
      if (near_crit) break;
    }
    if (!near_crit && lifts_once(arc, m, curve)) {
      arc.tag = ArcTag::good;
      ++counts.good;
    } else {
      arc.tag = ArcTag::suspect;
      ++counts.suspect;
    }
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Boundary image and the coarea check

std::vector<std::vector<cplx>> boundary_image(const CompiledMap& m, double r,
                                              const RectangleChart& chart) {
  chart.validate();
  const double xr = chart.x1 - chart.x0;
  const double maxlen = std::max(std::min(xr, chart.t1 - chart.t0) / 100.0, 1e-5 * xr);
  auto P = [&](double th) -> std::optional<cplx> {
    const Value c = chart.apply(m.f().evaluate(std::polar(r, th)));
    if (!c.is_finite() || std::abs(c.z) > 1e200) return std::nullopt;
    return c.z;
  };
  auto near_rect = [&](cplx a, cplx b, double pad) {
    return std::max(a.real(), b.real()) + pad >= chart.x0 &&
           std::min(a.real(), b.real()) - pad <= chart.x1 &&
           std::max(a.imag(), b.imag()) + pad >= chart.t0 &&
           std::min(a.imag(), b.imag()) - pad <= chart.t1;
  };

  std::vector<std::vector<cplx>> out;
  std::vector<cplx> cur;
  auto flush = [&] {
    if (cur.size() >= 2) out.push_back(std::move(cur));
    cur.clear();
  };
  struct Item {
    double ta, tb;
    cplx pa, pb;
    int depth;
  };
  const int n0 = 8192;
  const double dth = 2 * std::numbers::pi / n0;
  std::optional<cplx> prev = P(0.0);
  if (prev) cur.push_back(*prev);
  for (int k = 0; k < n0; ++k) {
    const double ta = k * dth, tb = (k + 1 == n0) ? 2 * std::numbers::pi : (k + 1) * dth;
    const std::optional<cplx> next = (k + 1 == n0) ? P(0.0) : P(tb);
    if (!prev || !next) {
      flush();
      if (next) cur.push_back(*next);
      prev = next;
      continue;
    }
    // Depth-first refinement, emitting points left to right.
    std::vector<Item> stack{{ta, tb, *prev, *next, 0}};
    while (!stack.empty()) {
      const Item it = stack.back();
      stack.pop_back();
      const double d = std::abs(it.pb - it.pa);
      if (d > maxlen && it.depth < 40 && near_rect(it.pa, it.pb, d)) {
        const double tm = 0.5 * (it.ta + it.tb);
        if (const auto pm = P(tm)) {
          stack.push_back({tm, it.tb, *pm, it.pb, it.depth + 1});
          stack.push_back({it.ta, tm, it.pa, *pm, it.depth + 1});
          continue;
        }
        flush();
      }
      cur.push_back(it.pb);
    }
    prev = next;
  }
  flush();
  return out;
}

namespace {

// Part of segment p -> q inside the chart rectangle (Liang-Barsky).
std::optional<std::pair<cplx, cplx>> clip_to_rect(cplx p, cplx q, const RectangleChart& ch) {
  double u0 = 0.0, u1 = 1.0;
  const double dx = q.real() - p.real(), dy = q.imag() - p.imag();
  const std::array<double, 4> pp = {-dx, dx, -dy, dy};
  const std::array<double, 4> qq = {p.real() - ch.x0, ch.x1 - p.real(), p.imag() - ch.t0,
                                    ch.t1 - p.imag()};
  for (int k = 0; k < 4; ++k) {
    if (pp[k] == 0.0) {
      if (qq[k] < 0.0) return std::nullopt;
      continue;
    }
    const double u = qq[k] / pp[k];
    if (pp[k] < 0.0)
      u0 = std::max(u0, u);
    else
      u1 = std::min(u1, u);
    if (u0 > u1) return std::nullopt;
  }
  return std::pair{p + u0 * (q - p), p + u1 * (q - p)};
}

}  // namespace

Perturbation select_perturbation(const CompiledMap& m, double r, const RectangleChart& chart,
                                 int n_samples, std::uint64_t seed) {
  chart.validate();
  if (n_samples < 100) throw std::invalid_argument("select_perturbation: need n_samples >= 100");
  const auto polys = boundary_image(m, r, chart);
  const double T = chart.t1 - chart.t0, dt = T / n_samples;
  const double sin_min = std::sin(5.0 * std::numbers::pi / 180.0);
  const double vmargin = 1e-3 * T;
  auto t_of = [&](int k) { return chart.t0 + (k + 0.5) * dt; };
  // Sample indices with t_k in (lo, hi].
  auto k_range = [&](double lo, double hi) {
    const int a = std::max(0, static_cast<int>(std::floor((lo - chart.t0) / dt - 0.5)) + 1);
    const int b = std::min(n_samples - 1, static_cast<int>(std::floor((hi - chart.t0) / dt - 0.5)));
    return std::pair{a, b};
  };

  std::vector<int> count(n_samples, 0);
  std::vector<char> blocked(n_samples, 0);
  Perturbation out;
  out.samples = n_samples;
  for (const auto& poly : polys) {
    for (std::size_t s = 0; s + 1 < poly.size(); ++s) {
      const auto c = clip_to_rect(poly[s], poly[s + 1], chart);
      if (!c) continue;
      const double ya = c->first.imag(), yb = c->second.imag();
      out.coarea_rhs += std::abs(yb - ya);
      if (ya == yb) continue;
      auto [ka, kb] = k_range(std::min(ya, yb), std::max(ya, yb));
      const cplx d = poly[s + 1] - poly[s];
      const bool shallow = std::abs(d.imag()) < sin_min * std::abs(d);
      for (int k = ka; k <= kb; ++k) {
        ++count[k];
        if (shallow) blocked[k] = 1;
      }
    }
    // Near-horizontal vertices close to a line block it.
    for (std::size_t s = 1; s + 1 < poly.size(); ++s) {
      const cplx v = poly[s];
      if (v.real() < chart.x0 || v.real() > chart.x1) continue;
      const cplx tan = poly[s + 1] - poly[s - 1];
      if (std::abs(tan.imag()) >= sin_min * std::abs(tan)) continue;
      auto [ka, kb] = k_range(v.imag() - vmargin, v.imag() + vmargin);
      for (int k = std::max(0, ka - 1); k <= kb; ++k)
        if (std::abs(t_of(k) - v.imag()) <= vmargin) blocked[k] = 1;
    }
  }
  double sum = 0.0;
  for (int k : count) sum += k;
  out.coarea_lhs = sum / n_samples * T;

  std::vector<int> ok;
  for (int k = 0; k < n_samples; ++k)
    if (!blocked[k]) ok.push_back(k);
  out.transversal = static_cast<int>(ok.size());
  if (ok.empty())
    throw NumericError("arcs", "no transversal line in t_range; the chart is too thin, "
                               "enlarge t_range");
  int best = ok.front();
  for (int k : ok)
    if (count[k] < count[best] ||
        (count[k] == count[best] && std::abs(t_of(k)) < std::abs(t_of(best))))
      best = k;
  out.t_star = t_of(best);
  out.crossings = count[best];
  std::mt19937_64 rng(seed);
  out.t_random = t_of(ok[std::uniform_int_distribution<std::size_t>(0, ok.size() - 1)(rng)]);
  return out;
}

Profile bump_profile(double x0, double x1) {
  if (!(x0 < x1)) throw std::invalid_argument("bump_profile: need x0 < x1");
  const double L = x1 - x0, scale = 15.0 / (8.0 * L);
  return [=](double x) {
    const double s = (2.0 * x - x0 - x1) / L;
    return std::abs(s) >= 1.0 ? 0.0 : scale * (1 - s * s) * (1 - s * s);
  };
}

namespace {

double integrate_profile(const Profile& beta, double a, double b, int panels) {
  static constexpr std::array<double, 5> x = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                              0.5384693101056831, 0.9061798459386640};
  static constexpr std::array<double, 5> w = {0.2369268850561891, 0.4786286704993665,
                                              0.5688888888888889, 0.4786286704993665,
                                              0.2369268850561891};
  double total = 0.0;
  const double step = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * step, mid = lo + 0.5 * step;
    for (int k = 0; k < 5; ++k) total += w[k] * beta(mid + 0.5 * step * x[k]) * 0.5 * step;
  }
  return total;
}

}  // namespace

double arc_test_integral(const CompiledMap& m, const RectangleChart& chart, double t, double r,
                         const Profile& beta) {
  chart.validate();
  const double L = chart.x1 - chart.x0;
  const double unit = integrate_profile(beta, chart.x0, chart.x1, 256);
  if (std::abs(unit - 1.0) > 1e-6)
    throw std::invalid_argument("arc_test_integral: beta must integrate to 1 over x_range (got " +
                                std::to_string(unit) + ")");
  std::vector<double> cuts{chart.x0, chart.x1};
  for (const auto& poly : boundary_image(m, r, chart))
    for (std::size_t s = 0; s + 1 < poly.size(); ++s) {
      const cplx p = poly[s], q = poly[s + 1];
      if ((p.imag() < t) == (q.imag() < t)) continue;
      const double x = p.real() + (t - p.imag()) * (q.real() - p.real()) / (q.imag() - p.imag());
      if (x > chart.x0 && x < chart.x1) cuts.push_back(x);
    }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const PreimageCounter pc(m);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    if (b - a <= 0.0) continue;
    const int d = pc.count(chart.inverse(cplx(0.5 * (a + b), t)), r);
    if (d == 0) continue;
    const int panels = std::max(1, static_cast<int>(std::ceil(256.0 * (b - a) / L)));
    total += d * integrate_profile(beta, a, b, panels);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Preimage graph

PreimageGraph build_preimage_graph(const CompiledMap& m, const GraphSpec& graph, double r,
                                   int resolution) {
  const ImplicitCurve curve = graph.curve();
  TraceResult tr = trace_preimage(m, curve, r, resolution);
  PreimageGraph pg;
  pg.r = r;
  pg.resolution = resolution;
  pg.counts = classify_arcs(tr, m, curve);
  pg.level_error = tr.level_error;

  // Vertices in the boundary band only carry bad arcs; they are left out.
  const double margin = r * (1.0 - 10.0 / resolution);
  std::vector<int> remap(tr.vertices.size(), -1);
  for (std::size_t k = 0; k < tr.vertices.size(); ++k)
    if (std::abs(tr.vertices[k]) < margin) {
      remap[k] = static_cast<int>(pg.vertices.size());
      pg.vertices.push_back(tr.vertices[k]);
    }
  pg.arcs = std::move(tr.arcs);
  for (TracedArc& a : pg.arcs) {
    a.v0 = a.v0 >= 0 ? remap[a.v0] : -1;
    a.v1 = a.v1 >= 0 ? remap[a.v1] : -1;
    if (a.tag == ArcTag::bad) continue;
    ++pg.edges;
    // Free ends and vertex-free loops get a vertex of their own; each one
    // adds a vertex and splits nothing, so the Euler characteristic is
    // unchanged.
    auto add_vertex = [&](cplx z) {
      pg.vertices.push_back(z);
      ++pg.synthetic_vertices;
      return static_cast<int>(pg.vertices.size()) - 1;
    };
    if (a.line.closed) {
      if (a.v0 < 0) a.v0 = a.v1 = add_vertex(a.line.pts.front());
      continue;
    }
    if (a.v0 < 0) a.v0 = add_vertex(a.line.pts.front());
    if (a.v1 < 0) a.v1 = add_vertex(a.line.pts.back());
  }
  pg.euler = static_cast<int>(pg.vertices.size()) - pg.edges;
  return pg;
}

// ---------------------------------------------------------------------------
// Complement components

int ComplementMap::chi_outer() const {
  int s = 0;
  for (const auto& c : components)
    if (c.touches_boundary) s += c.chi;
  return s;
}

int ComplementMap::chi_interior() const {
  int s = 0;
  for (const auto& c : components)
    if (!c.touches_boundary) s += c.chi;
  return s;
}

std::optional<int> ComplementMap::component_at(cplx z) const {
  const double h = grid.step();
  const int ic = static_cast<int>(std::lround((z.real() + grid.r) / h));
  const int jc = static_cast<int>(std::lround((z.imag() + grid.r) / h));
  std::optional<int> best;
  double bd = std::numeric_limits<double>::infinity();
  for (int j = jc - 2; j <= jc + 2; ++j)
    for (int i = ic - 2; i <= ic + 2; ++i) {
      if (i < 0 || j < 0 || i > grid.n || j > grid.n) continue;
      const int l = label[grid.index(i, j)];
      if (l < 0) continue;
      const double d = std::abs(grid.node(i, j) - z);
      if (d < bd) bd = d, best = l;
    }
  return best;
}

namespace {

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(std::size_t n) : p(n) {
    for (std::size_t k = 0; k < n; ++k) p[k] = static_cast<int>(k);
  }
  int find(int x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  void unite(int a, int b) { p[find(a)] = find(b); }
};

}  // namespace

ComplementMap complement_components(const PreimageGraph& pg, double r, int resolution) {
  if (resolution < 64) throw std::invalid_argument("complement: resolution must be >= 64");
  ComplementMap out;
  out.grid = Grid{r * (1.0 + 4.0 / resolution), resolution};
  const Grid& g = out.grid;
  const double h = g.step(), tube = 0.75 * h;
  const int side = g.nodes_per_side();

  std::vector<std::uint8_t> wall(g.node_count(), 0);
  auto paint = [&](cplx a, cplx b) {
    const double xlo = std::min(a.real(), b.real()) - tube, xhi = std::max(a.real(), b.real()) + tube;
    const double ylo = std::min(a.imag(), b.imag()) - tube, yhi = std::max(a.imag(), b.imag()) + tube;
    const int i0 = std::max(0, static_cast<int>(std::floor((xlo + g.r) / h)));
    const int i1 = std::min(g.n, static_cast<int>(std::ceil((xhi + g.r) / h)));
    const int j0 = std::max(0, static_cast<int>(std::floor((ylo + g.r) / h)));
    const int j1 = std::min(g.n, static_cast<int>(std::ceil((yhi + g.r) / h)));
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i)
        if (point_segment_distance(g.node(i, j), a, b) <= tube) wall[g.index(i, j)] = 1;
  };
  for (const TracedArc& a : pg.arcs) {
    if (a.tag == ArcTag::bad) continue;
    const auto& p = a.line.pts;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) paint(p[k], p[k + 1]);
    if (a.line.closed) paint(p.back(), p.front());
  }
  for (cplx v : pg.vertices) paint(v, v);

  // Arcs closer than the tube can resolve would merge faces.
  const std::string refine = "two arcs share a pixel corridor; increase the resolution";
  for (const TracedArc& a : pg.arcs) {
    if (a.tag == ArcTag::bad) continue;
    const auto& p = a.line.pts;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
      const cplx d = p[k + 1] - p[k];
      if (std::abs(d) == 0.0) continue;
      const cplx mid = 0.5 * (p[k] + p[k + 1]);
      if (std::any_of(pg.vertices.begin(), pg.vertices.end(),
                      [&](cplx v) { return std::abs(v - mid) < 4 * h; }))
        continue;
      const cplx nrm = cplx(0, 1) * d / std::abs(d);
      for (double sgn : {1.0, -1.0}) {
        const cplx q = mid + sgn * 2.0 * h * nrm;
        if (std::abs(q) > r - 2 * h) continue;
        const int i = static_cast<int>(std::lround((q.real() + g.r) / h));
        const int j = static_cast<int>(std::lround((q.imag() + g.r) / h));
        if (wall[g.index(i, j)]) throw NumericError("complement", refine + " (near " + where(mid) + ")");
      }
    }
  }
  {
    int wall_parts = 0;
    (void)label_components(g, wall, 8, wall_parts);
    UnionFind uf(pg.vertices.size());
    for (const TracedArc& a : pg.arcs)
      if (a.tag != ArcTag::bad && a.v0 >= 0 && a.v1 >= 0) uf.unite(a.v0, a.v1);
    int graph_parts = 0;
    for (std::size_t k = 0; k < pg.vertices.size(); ++k)
      graph_parts += uf.find(static_cast<int>(k)) == static_cast<int>(k);
    if (wall_parts != graph_parts)
      throw NumericError("complement", refine + " (" + std::to_string(graph_parts) +
                                           " graph pieces drew " + std::to_string(wall_parts) +
                                           " walls)");
  }

  std::vector<std::uint8_t> free_mask(g.node_count(), 0);
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i) {
      const std::size_t k = g.index(i, j);
      free_mask[k] = !wall[k] && std::abs(g.node(i, j)) <= r;
    }
  int ncomp = 0;
  out.label = label_components(g, free_mask, 4, ncomp);
  out.components.assign(ncomp, {});
  std::vector<std::array<int, 4>> box(ncomp, {side, side, -1, -1});
  std::vector<char> seen(ncomp, 0);
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i) {
      const int l = out.label[g.index(i, j)];
      if (l < 0) continue;
      ComplementComponent& c = out.components[l];
      if (!seen[l]) c.sample = g.node(i, j), seen[l] = 1;
      ++c.pixels;
      if (std::abs(g.node(i, j)) > r - 1.5 * h) c.touches_boundary = true;
      auto& b = box[l];
      b[0] = std::min(b[0], i), b[1] = std::min(b[1], j);
      b[2] = std::max(b[2], i), b[3] = std::max(b[3], j);
    }

  // chi = 2 - (number of pieces of the sphere minus the component). The
  // region outside the padded box is connected, so every piece reaching the
  // box border is one and the same.
  for (int l = 0; l < ncomp; ++l) {
    const int i0 = std::max(0, box[l][0] - 1), j0 = std::max(0, box[l][1] - 1);
    const int i1 = std::min(g.n, box[l][2] + 1), j1 = std::min(g.n, box[l][3] + 1);
    const int w = i1 - i0 + 1, hgt = j1 - j0 + 1;
    std::vector<int> lab(static_cast<std::size_t>(w) * hgt, -1);
    auto at = [&](int i, int j) -> int& { return lab[static_cast<std::size_t>(j - j0) * w + (i - i0)]; };
    int pieces = 0;
    bool outer_seen = false;
    std::deque<std::pair<int, int>> q;
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        if (out.label[g.index(i, j)] == l || at(i, j) >= 0) continue;
        at(i, j) = pieces;
        bool touches = false;
        q.emplace_back(i, j);
        while (!q.empty()) {
          const auto [ci, cj] = q.front();
          q.pop_front();
          if (ci == i0 || ci == i1 || cj == j0 || cj == j1) touches = true;
          for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) {
              const int ni = ci + di, nj = cj + dj;
              if ((!di && !dj) || ni < i0 || nj < j0 || ni > i1 || nj > j1) continue;
              if (out.label[g.index(ni, nj)] == l || at(ni, nj) >= 0) continue;
              at(ni, nj) = pieces;
              q.emplace_back(ni, nj);
            }
        }
        if (touches) {
          if (outer_seen) continue;  // merged with the outside piece
          outer_seen = true;
        }
        ++pieces;
      }
    out.components[l].chi = 2 - pieces;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export

std::string graph_svg(const PreimageGraph& g, std::span<const Polyline> extra) {
  const double r = g.r, px = 600.0;
  const double s = px / (2.2 * r);
  auto X = [&](cplx z) { return px / 2 + s * z.real(); };
  auto Y = [&](cplx z) { return px / 2 - s * z.imag(); };
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                "viewBox=\"0 0 %g %g\">\n",
                px, px, px, px);
  out += buf;
  std::snprintf(buf, sizeof buf,
                "<circle cx=\"%g\" cy=\"%g\" r=\"%g\" fill=\"none\" stroke=\"#999\"/>\n", px / 2,
                px / 2, s * r);
  out += buf;
  auto path = [&](const Polyline& pl, const char* style) {
    out += "<polyline fill=\"none\" ";
    out += style;
    out += " points=\"";
    for (cplx z : pl.pts) {
      std::snprintf(buf, sizeof buf, "%.3f,%.3f ", X(z), Y(z));
      out += buf;
    }
    if (pl.closed && !pl.pts.empty()) {
      std::snprintf(buf, sizeof buf, "%.3f,%.3f", X(pl.pts.front()), Y(pl.pts.front()));
      out += buf;
    }
    out += "\"/>\n";
  };
  for (const Polyline& pl : extra) path(pl, "stroke=\"#4a7ab5\" stroke-width=\"0.8\"");
  for (const TracedArc& a : g.arcs) {
    switch (a.tag) {
      case ArcTag::good:
        path(a.line, "stroke=\"#111\" stroke-width=\"1.2\"");
        break;
      case ArcTag::bad:
        path(a.line, "stroke=\"#c33\" stroke-width=\"1\" stroke-dasharray=\"4 3\"");
        break;
      case ArcTag::suspect:
        path(a.line, "stroke=\"#d80\" stroke-width=\"1\" stroke-dasharray=\"1 2\"");
        break;
    }
  }
  for (cplx v : g.vertices) {
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"2.5\" fill=\"#111\"/>\n",
                  X(v), Y(v));
    out += buf;
  }
  out += "</svg>\n";
  return out;
}

std::string graph_json(const PreimageGraph& g, const ComplementMap* comps) {
  using nlohmann::json;
  auto pt = [](cplx z) { return json::array({z.real(), z.imag()}); };
  json j;
  j["r"] = g.r;
  j["resolution"] = g.resolution;
  j["euler"] = g.euler;
  j["edges"] = g.edges;
  j["synthetic_vertices"] = g.synthetic_vertices;
  j["level_error"] = g.level_error;
  j["counts"] = {{"good", g.counts.good}, {"bad", g.counts.bad}, {"suspect", g.counts.suspect}};
  json verts = json::array();
  for (cplx v : g.vertices) verts.push_back(pt(v));
  j["vertices"] = std::move(verts);
  json arcs = json::array();
  for (const TracedArc& a : g.arcs) {
    json pts = json::array();
    for (cplx z : a.line.pts) pts.push_back(pt(z));
    arcs.push_back({{"tag", to_string(a.tag)},
                    {"v0", a.v0},
                    {"v1", a.v1},
                    {"closed", a.line.closed},
                    {"points", std::move(pts)}});
  }
  j["arcs"] = std::move(arcs);
  if (comps) {
    json cs = json::array();
    for (const ComplementComponent& c : comps->components)
      cs.push_back({{"chi", c.chi},
                    {"touches_boundary", c.touches_boundary},
                    {"pixels", c.pixels},
                    {"sample", pt(c.sample)}});
    j["components"] = std::move(cs);
    j["chi_outer"] = comps->chi_outer();
    j["chi_interior"] = comps->chi_interior();
  }
  return j.dump(1);
}

}  // namespace ahlfors
