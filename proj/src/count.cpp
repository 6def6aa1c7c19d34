#include "ahlfors/count.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ahlfors/kernels.hpp"

namespace ahlfors {

namespace {

EntireFraction fraction_or_throw(const CompiledMap& m) {
  auto frac = to_entire_fraction(m.expr());
  if (!frac)
    throw NumericError("count", "map '" + m.source() +
                                    "' is not a quotient of entire parts; root counting needs one");
  return std::move(*frac);
}

struct Box {
  double x0, y0, x1, y1;
  double width() const { return std::max(x1 - x0, y1 - y0); }
  cplx center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
  bool contains(cplx z, double slack) const {
    return z.real() >= x0 - slack && z.real() <= x1 + slack && z.imag() >= y0 - slack &&
           z.imag() <= y1 + slack;
  }
};

int box_winding(const ComplexFn& g, const ComplexFn& dg, const Box& b) {
  const std::array<cplx, 4> corners = {cplx(b.x0, b.y0), cplx(b.x1, b.y0), cplx(b.x1, b.y1),
                                       cplx(b.x0, b.y1)};
  return winding_number(g, dg, corners, true, "count");
}

// Split ratios are deliberately off-centre so that roots on symmetric
// lattices (integers, roots of unity) do not land on a cut.
constexpr std::array<double, 4> kSplit = {0.4913, 0.5287, 0.4631, 0.5459};

}  // namespace

PreimageCounter::PreimageCounter(const CompiledMap& m) : PreimageCounter(fraction_or_throw(m)) {}

PreimageCounter::PreimageCounter(const EntireFraction& frac)
    : num_(frac.numerator),
      den_(frac.denominator),
      dnum_(differentiate(num_.expr())),
      dden_(differentiate(den_.expr())),
      den_constant_(den_.expr().is_constant()) {}

std::vector<Root> PreimageCounter::roots(const SpherePoint& p, double r) const {
  if (!(r > 0.0)) throw std::invalid_argument("roots: radius must be positive");
  if (p.infinite && den_constant_) return {};

  enum class Mode { shifted, inverted, poles } mode;
  if (p.infinite)
    mode = Mode::poles;
  else if (std::abs(p.z) <= 1.0)
    mode = Mode::shifted;
  else
    mode = Mode::inverted;
  const cplx c = p.infinite ? cplx{} : p.z;
  const cplx ic = (mode == Mode::inverted) ? 1.0 / c : cplx{};

  auto combine = [&](Value n, Value d) -> Value {
    switch (mode) {
      case Mode::shifted:
        return extended::sub(n, extended::mul(Value::finite(c), d));
      case Mode::inverted:
        return extended::sub(extended::mul(Value::finite(ic), n), d);
      case Mode::poles:
        return d;
    }
    return Value::indeterminate();
  };
  const ComplexFn g = [&](cplx z) { return combine(num_.evaluate(z), den_.evaluate(z)); };
  const ComplexFn dg = [&](cplx z) { return combine(dnum_.evaluate(z), dden_.evaluate(z)); };

  auto newton = [&](cplx z, int mult) -> std::optional<cplx> {
    for (int it = 0; it < 100; ++it) {
      const Value gz = g(z), dz = dg(z);
      if (!gz.is_finite() || !dz.is_finite()) return std::nullopt;
      if (gz.z == cplx{}) return z;
      if (dz.z == cplx{}) return std::nullopt;
      const cplx step = static_cast<double>(mult) * gz.z / dz.z;
      z -= step;
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return std::nullopt;
      if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(z))) return z;
    }
    return std::nullopt;
  };

  std::vector<Root> found;
  bool done = false;
  for (int attempt = 0; attempt < 4 && !done; ++attempt) {
    found.clear();
    const double s = r * (1.0137 + 0.0311 * attempt);
    const Box outer{-s, -s, s, s};
    int w0;
    try {
      w0 = box_winding(g, dg, outer);
    } catch (const NumericError&) {
      continue;  // a solution on the outer square; enlarge it
    }
    const double tiny = 1e-10 * std::max(1.0, s);
    std::vector<std::pair<Box, int>> stack{{outer, w0}};
    while (!stack.empty()) {
      const auto [box, w] = stack.back();
      stack.pop_back();
      if (w == 0) continue;
      if (w < 0) throw NumericError("count", "negative winding for an entire function");
      const double width = box.width();
      if (w == 1) {
        if (auto z = newton(box.center(), 1); z && box.contains(*z, 1e-9 * width)) {
          found.push_back({*z, 1});
          continue;
        }
      }
      if (width < tiny) {
        const auto z = newton(box.center(), w);
        found.push_back({z && box.contains(*z, width) ? *z : box.center(), w});
        continue;
      }
      bool split = false;
      for (double t : kSplit) {
        const double xm = box.x0 + t * (box.x1 - box.x0);
        const double ym = box.y0 + t * (box.y1 - box.y0);
        const std::array<Box, 4> kids = {Box{box.x0, box.y0, xm, ym}, Box{xm, box.y0, box.x1, ym},
                                         Box{box.x0, ym, xm, box.y1}, Box{xm, ym, box.x1, box.y1}};
        std::array<int, 4> kw{};
        try {
          for (int k = 0; k < 4; ++k) kw[k] = box_winding(g, dg, kids[k]);
        } catch (const NumericError&) {
          continue;
        }
        if (kw[0] + kw[1] + kw[2] + kw[3] != w) continue;
        for (int k = 3; k >= 0; --k) stack.emplace_back(kids[k], kw[k]);
        split = true;
        break;
      }
      if (!split) {
        if (width < 1e4 * tiny) {
          found.push_back({box.center(), w});
          continue;
        }
        throw NumericError("count", "could not isolate solutions near " +
                                        std::to_string(box.center().real()) + "+" +
                                        std::to_string(box.center().imag()) + "i");
      }
    }
    done = true;
  }
  if (!done) throw NumericError("count", "solutions on every enclosing square tried");

  std::vector<Root> inside;
  for (const Root& rt : found) {
    const double a = std::abs(rt.z);
    if (std::abs(a - r) <= 1e-9 * r)
      throw NumericError("count", "solution on |z| = r; perturb the radius");
    if (a < r) inside.push_back(rt);
  }
  std::sort(inside.begin(), inside.end(), [](const Root& a, const Root& b) {
    if (a.z.real() != b.z.real()) return a.z.real() < b.z.real();
    return a.z.imag() < b.z.imag();
  });
  return inside;
}

int count_preimages(const CompiledMap& m, const SpherePoint& p, double r) {
  return PreimageCounter(m).count(p, r);
}

MeanDegree mean_degree(const CompiledMap& m, double r, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("mean_degree: need at least one sample");
  const PreimageCounter counter(m);
  const std::size_t budget = n_samples + n_samples / 10 + 16;
  const auto pts = sample_sphere_uniform(seed, budget);
  MeanDegree out;
  double sum = 0.0, sumsq = 0.0;
  for (const SpherePoint& p : pts) {
    if (out.samples == n_samples) break;
    int d;
    try {
      d = counter.count(p, r);
    } catch (const NumericError&) {
      ++out.resampled;
      continue;
    }
    sum += d;
    sumsq += static_cast<double>(d) * d;
    ++out.samples;
  }
  if (out.samples < n_samples)
    throw NumericError("mean_degree", "resample budget exhausted");
  const double n = static_cast<double>(out.samples);
  out.mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sumsq - n * out.mean * out.mean) / (n - 1)) : 0.0;
  out.stderr_ = std::sqrt(var / n);
  return out;
}

// ---------------------------------------------------------------------------
// Islands

int IslandScan::degree_sum() const {
  int s = 0;
  for (const auto& i : islands) s += i.degree;
  return s;
}

namespace {

// chordal(f(z), center) - radius at every node; NaN where f is 0/0.
std::vector<double> disk_field(const GridValues& gv, const SphericalDisk& disk) {
  const std::size_t n = gv.re.size();
  std::vector<double> v(n);
  const auto& kt = kernels::table();
  if (disk.center.infinite)
    kt.chordal_to_infinity(gv.re.data(), gv.im.data(), v.data(), n);
  else
    kt.chordal(gv.re.data(), gv.im.data(), disk.center.z.real(), disk.center.z.imag(), v.data(),
               n);
  for (std::size_t k = 0; k < n; ++k) {
    switch (gv.kinds[k]) {
      case ValueKind::indeterminate:
        v[k] = std::numeric_limits<double>::quiet_NaN();
        continue;
      case ValueKind::infinite:
        v[k] = chordal_distance(SpherePoint::infinity(), disk.center);
        break;
      case ValueKind::finite:
        if (std::abs(gv.re[k]) > 1e150 || std::abs(gv.im[k]) > 1e150)
          v[k] = chordal_distance(SpherePoint::at({gv.re[k], gv.im[k]}), disk.center);
        break;
    }
    v[k] -= disk.radius;
  }
  return v;
}

struct ComponentStats {
  int imin = std::numeric_limits<int>::max(), jmin = std::numeric_limits<int>::max();
  int imax = -1, jmax = -1;
  double max_abs = 0.0;
  double deepest = std::numeric_limits<double>::infinity();
  cplx deepest_at{};
  cplx sum{};
  std::size_t nodes = 0;
};

ComplexFn shifted_map(const CompiledMap& m, const SpherePoint& c) {
  if (c.infinite)
    return [&m](cplx z) { return extended::div(Value::finite({1.0, 0.0}), m.f().evaluate(z)); };
  const cplx w = c.z;
  return [&m, w](cplx z) { return extended::sub(m.f().evaluate(z), Value::finite(w)); };
}

}  // namespace

IslandScan find_islands(const CompiledMap& m, const SphericalDisk& disk, double r, int resolution,
                        int disk_index) {
  if (resolution < 16) throw std::invalid_argument("find_islands: resolution must be >= 16");
  const GridValues gv = sample_grid(m.f(), Grid{r, resolution});
  return find_islands(m, gv, disk, disk_index);
}

IslandScan find_islands(const CompiledMap& m, const GridValues& gv, const SphericalDisk& disk,
                        int disk_index) {
  disk.validate();
  const Grid& g = gv.grid;
  const double r = g.r, h = g.step();
  const int side = g.nodes_per_side();
  std::vector<double> field = disk_field(gv, disk);

  std::vector<std::uint8_t> mask(g.node_count(), 0);
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i) {
      const std::size_t k = g.index(i, j);
      mask[k] = std::abs(g.node(i, j)) <= r && field[k] < 0.0;
    }
  int ncomp = 0;
  const std::vector<int> label = label_components(g, mask, 4, ncomp);

  std::vector<ComponentStats> stats(ncomp);
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i) {
      const std::size_t k = g.index(i, j);
      if (label[k] < 0) continue;
      ComponentStats& s = stats[label[k]];
      const cplx z = g.node(i, j);
      s.imin = std::min(s.imin, i), s.imax = std::max(s.imax, i);
      s.jmin = std::min(s.jmin, j), s.jmax = std::max(s.jmax, j);
      s.max_abs = std::max(s.max_abs, std::abs(z));
      if (field[k] < s.deepest) s.deepest = field[k], s.deepest_at = z;
      s.sum += z;
      ++s.nodes;
    }

  const ComplexFn shifted = shifted_map(m, disk.center);
  const ComplexFn deriv = [&m](cplx z) { return m.df().evaluate(z); };

  IslandScan scan;
  scan.disk_index = disk_index;
  std::vector<double> zr, zi, hs;
  for (int c = 0; c < ncomp; ++c) {
    const ComponentStats& s = stats[c];
    if (s.max_abs > r - 1.5 * h) {
      ++scan.nonproper;
      continue;
    }
    const bool ambiguous = s.max_abs > r - 10.0 * h;

    // Isolate this component in the field: other nodes read as outside.
    const int i0 = std::max(0, s.imin - 1), i1 = std::min(g.n, s.imax + 1);
    const int j0 = std::max(0, s.jmin - 1), j1 = std::min(g.n, s.jmax + 1);
    std::vector<double> saved;
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        const std::size_t k = g.index(i, j);
        saved.push_back(field[k]);
        if (label[k] != c && !(field[k] >= 0.0)) field[k] = std::abs(field[k]);
        if (std::isnan(field[k])) field[k] = 1.0;
      }
    std::vector<Polyline> loops = march(g, field, {i0, j0, i1, j1});
    std::size_t pos = 0;
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) field[g.index(i, j)] = saved[pos++];

    IslandRecord rec;
    rec.disk_index = disk_index;
    for (const auto& l : loops)
      if (!l.closed) throw NumericError("islands", "island boundary is not closed");
    rec.boundary = std::move(loops);
    rec.chi = 2 - static_cast<int>(rec.boundary.size());
    rec.degree = 0;
    for (const auto& l : rec.boundary) rec.degree += winding_number(shifted, l.pts, true, "islands");
    if (rec.degree <= 0 && !ambiguous)
      throw NumericError("islands", "non-positive island degree; refine the grid");
    rec.ramification = rec.degree - rec.chi;
    rec.critical_points = -1;
    if (!disk.center.infinite) {
      rec.critical_points = 0;
      for (const auto& l : rec.boundary)
        rec.critical_points += winding_number(deriv, l.pts, true, "islands");
    }
    rec.centroid = s.sum / static_cast<double>(s.nodes);
    rec.representative = s.deepest_at;
    rec.leftmost = rec.boundary.empty() ? rec.centroid : rec.boundary.front().pts.front();
    for (const auto& l : rec.boundary)
      for (cplx p : l.pts)
        if (p.real() < rec.leftmost.real() ||
            (p.real() == rec.leftmost.real() && p.imag() < rec.leftmost.imag()))
          rec.leftmost = p;

    zr.clear(), zi.clear();
    for (int j = s.jmin; j <= s.jmax; ++j)
      for (int i = s.imin; i <= s.imax; ++i)
        if (label[g.index(i, j)] == c) {
          const cplx z = g.node(i, j);
          zr.push_back(z.real());
          zi.push_back(z.imag());
        }
    hs.resize(zr.size());
    density_squared(m, zr, zi, hs);
    double acc = 0.0;
    for (double v : hs) acc += v;
    rec.area_share = acc * h * h / disk.area();

    (ambiguous ? scan.ambiguous : scan.islands).push_back(std::move(rec));
  }
  auto by_left = [](const IslandRecord& a, const IslandRecord& b) {
    if (a.leftmost.real() != b.leftmost.real()) return a.leftmost.real() < b.leftmost.real();
    return a.leftmost.imag() < b.leftmost.imag();
  };
  std::sort(scan.islands.begin(), scan.islands.end(), by_left);
  std::sort(scan.ambiguous.begin(), scan.ambiguous.end(), by_left);
  return scan;
}

int island_degree(const CompiledMap& m, const IslandRecord& island, const SpherePoint& center) {
  const ComplexFn shifted = shifted_map(m, center);
  int d = 0;
  for (const auto& l : island.boundary) d += winding_number(shifted, l.pts, true, "islands");
  if (d <= 0) throw NumericError("islands", "island degree is not positive");
  return d;
}

int total_ramification(std::span<const IslandRecord> islands) {
  int s = 0;
  for (const auto& i : islands) s += i.degree - i.chi;
  return s;
}

std::string islands_csv(std::span<const IslandScan> scans) {
  std::string out = "disk_index,chi,degree,ramification,centroid_x,centroid_y\n";
  char buf[200];
  for (const auto& s : scans)
    for (const auto& i : s.islands) {
      std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.12g,%.12g\n", i.disk_index, i.chi, i.degree,
                    i.ramification, i.centroid.real(), i.centroid.imag());
      out += buf;
    }
  return out;
}

}  // namespace ahlfors
