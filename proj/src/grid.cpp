#include "ahlfors/grid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <string>
#include <unordered_map>

namespace ahlfors {

GridValues sample_grid(const Program& f, const Grid& g) {
  GridValues out;
  out.grid = g;
  const std::size_t total = g.node_count();
  out.re.resize(total);
  out.im.resize(total);
  out.kinds.resize(total);
  const int side = g.nodes_per_side();
  std::vector<double> zr(side), zi(side);
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      const cplx z = g.node(i, j);
      zr[i] = z.real();
      zi[i] = z.imag();
    }
    const std::size_t off = g.index(0, j);
    f.evaluate(zr, zi, std::span(out.re).subspan(off, side), std::span(out.im).subspan(off, side),
               std::span(out.kinds).subspan(off, side));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Marching squares

namespace {

struct Segment {
  std::int64_t from, to;  // edge ids
};

}  // namespace

std::vector<Polyline> march(const Grid& g, std::span<const double> field, CellRange cells,
                            const MarchOptions& opt) {
  cells.i0 = std::max(cells.i0, 0);
  cells.j0 = std::max(cells.j0, 0);
  cells.i1 = std::min(cells.i1, g.n);
  cells.j1 = std::min(cells.j1, g.n);

  auto hid = [&](int i, int j) { return static_cast<std::int64_t>(2 * g.index(i, j)); };
  auto vid = [&](int i, int j) { return static_cast<std::int64_t>(2 * g.index(i, j) + 1); };

  std::unordered_map<std::int64_t, cplx> point;
  std::vector<Segment> segs;

  auto crossing = [&](std::int64_t id) {
    auto it = point.find(id);
    if (it != point.end()) return;
    const std::size_t base = static_cast<std::size_t>(id / 2);
    const int i = static_cast<int>(base % static_cast<std::size_t>(g.n + 1));
    const int j = static_cast<int>(base / static_cast<std::size_t>(g.n + 1));
    const int i2 = (id % 2 == 0) ? i + 1 : i;
    const int j2 = (id % 2 == 0) ? j : j + 1;
    const cplx a = g.node(i, j), b = g.node(i2, j2);
    const double va = field[g.index(i, j)], vb = field[g.index(i2, j2)];
    cplx p;
    if (opt.locate) {
      p = opt.locate(a, va, b, vb);
    } else {
      const double t = va / (va - vb);
      p = a + t * (b - a);
    }
    point.emplace(id, p);
  };

  for (int j = cells.j0; j < cells.j1; ++j) {
    for (int i = cells.i0; i < cells.i1; ++i) {
      const double v[4] = {field[g.index(i, j)], field[g.index(i + 1, j)],
                           field[g.index(i + 1, j + 1)], field[g.index(i, j + 1)]};
      if (std::isnan(v[0]) || std::isnan(v[1]) || std::isnan(v[2]) || std::isnan(v[3])) continue;
      bool neg[4];
      int count = 0;
      for (int k = 0; k < 4; ++k) count += (neg[k] = v[k] < 0.0);
      if (count == 0 || count == 4) continue;
      // Edge k joins corner k and corner k+1 (counter-clockwise from bottom-left).
      const std::int64_t edge[4] = {hid(i, j), vid(i + 1, j), hid(i, j + 1), vid(i, j)};
      auto add = [&](int from, int to) {
        const std::int64_t a = edge[(from + 4) % 4], b = edge[(to + 4) % 4];
        crossing(a);
        crossing(b);
        segs.push_back({a, b});
      };
      const bool saddle = count == 2 && neg[0] == neg[2];
      if (!saddle) {
        int first = 0;
        while (!(neg[first] && !neg[(first + 3) % 4])) ++first;
        int last = first;
        while (neg[(last + 1) % 4]) last = (last + 1) % 4;
        add(last, first - 1);
        continue;
      }
      const int k = neg[0] ? 0 : 1;  // negative corners are k and k+2
      const bool join = opt.join_negatives ? opt.join_negatives(i, j) : false;
      if (join) {
        add(k, k + 1);
        add(k + 2, k + 3);
      } else {
        add(k, k - 1);
        add(k + 2, k + 1);
      }
    }
  }

  // Link segments head to tail.
  std::unordered_map<std::int64_t, std::size_t> by_start;
  std::unordered_map<std::int64_t, std::size_t> by_end;
  by_start.reserve(segs.size());
  by_end.reserve(segs.size());
  for (std::size_t s = 0; s < segs.size(); ++s) {
    by_start.emplace(segs[s].from, s);
    by_end.emplace(segs[s].to, s);
  }
  std::vector<char> used(segs.size(), 0);
  std::vector<Polyline> out;
  auto follow = [&](std::size_t s) {
    Polyline pl;
    pl.pts.push_back(point.at(segs[s].from));
    const std::int64_t start = segs[s].from;
    while (true) {
      used[s] = 1;
      const std::int64_t to = segs[s].to;
      if (to == start) {
        pl.closed = true;
        break;
      }
      pl.pts.push_back(point.at(to));
      auto it = by_start.find(to);
      if (it == by_start.end() || used[it->second]) break;
      s = it->second;
    }
    out.push_back(std::move(pl));
  };
  // Open curves first (their start has no predecessor), then loops.
  for (std::size_t s = 0; s < segs.size(); ++s)
    if (!used[s] && !by_end.count(segs[s].from)) follow(s);
  for (std::size_t s = 0; s < segs.size(); ++s)
    if (!used[s]) follow(s);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<int> label_components(const Grid& g, std::span<const std::uint8_t> mask,
                                  int connectivity, int& count) {
  const int side = g.nodes_per_side();
  std::vector<int> label(g.node_count(), -1);
  count = 0;
  static constexpr int d4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  static constexpr int d8[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                                   {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  const int nd = connectivity == 8 ? 8 : 4;
  const auto& dirs = connectivity == 8 ? d8 : d4;
  std::deque<std::pair<int, int>> queue;
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      const std::size_t k = g.index(i, j);
      if (!mask[k] || label[k] >= 0) continue;
      label[k] = count;
      queue.emplace_back(i, j);
      while (!queue.empty()) {
        const auto [ci, cj] = queue.front();
        queue.pop_front();
        for (int d = 0; d < nd; ++d) {
          const int ni = ci + dirs[d][0], nj = cj + dirs[d][1];
          if (ni < 0 || nj < 0 || ni >= side || nj >= side) continue;
          const std::size_t nk = g.index(ni, nj);
          if (mask[nk] && label[nk] < 0) {
            label[nk] = count;
            queue.emplace_back(ni, nj);
          }
        }
      }
      ++count;
    }
  }
  return label;
}

// ---------------------------------------------------------------------------
// Winding numbers

namespace {

constexpr double kQuarterPi = std::numbers::pi / 4;

cplx finite_value(const ComplexFn& g, cplx z, const char* stage) {
  const Value v = g(z);
  if (!v.is_finite())
    throw NumericError(stage, "map is not finite on the winding path");
  if (v.z == cplx{}) throw NumericError(stage, "winding path passes through a zero");
  return v.z;
}

bool tame(cplx ga, cplx gb, double step) {
  return std::abs(step) <= kQuarterPi && std::abs(gb - ga) <= std::min(std::abs(ga), std::abs(gb));
}

// With a derivative at hand the linearized argument change over a segment is
// also bounded. This catches periodic maps such as exp, whose values can
// agree at both ends and the midpoint of a segment spanning whole periods.
struct Node {
  cplx z, g, d;
};

Node sample(const ComplexFn& g, const ComplexFn* dg, cplx z, const char* stage) {
  Node n{z, finite_value(g, z, stage), {}};
  if (dg) {
    const Value d = (*dg)(z);
    if (!d.is_finite()) throw NumericError(stage, "derivative is not finite on the winding path");
    n.d = d.z;
  }
  return n;
}

bool linear_ok(const Node& n, double len) {
  return std::abs(n.d) * len <= kQuarterPi * std::abs(n.g);
}

double segment_turn(const ComplexFn& g, const ComplexFn* dg, const Node& a, const Node& b,
                    int depth, const char* stage) {
  const Node m = sample(g, dg, 0.5 * (a.z + b.z), stage);
  const double s1 = std::arg(m.g / a.g), s2 = std::arg(b.g / m.g);
  const double half = 0.5 * std::abs(b.z - a.z);
  bool ok = tame(a.g, m.g, s1) && tame(m.g, b.g, s2);
  if (ok && dg) ok = linear_ok(a, half) && linear_ok(m, half) && linear_ok(b, half);
  if (ok) return s1 + s2;
  if (depth >= 48 || std::abs(b.z - a.z) <= 1e-15 * std::max(1.0, std::abs(a.z)))
    throw NumericError(stage, "winding path passes too close to a zero");
  return segment_turn(g, dg, a, m, depth + 1, stage) + segment_turn(g, dg, m, b, depth + 1, stage);
}

double turns(const ComplexFn& g, const ComplexFn* dg, std::span<const cplx> pts, bool closed,
             const char* stage) {
  if (pts.size() < 2) return 0.0;
  double total = 0.0;
  Node prev = sample(g, dg, pts[0], stage);
  const Node first = prev;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const Node cur = sample(g, dg, pts[k], stage);
    total += segment_turn(g, dg, prev, cur, 0, stage);
    prev = cur;
  }
  if (closed) total += segment_turn(g, dg, prev, first, 0, stage);
  return total / (2 * std::numbers::pi);
}

int rounded(double t, const char* stage) {
  const double k = std::round(t);
  if (std::abs(t - k) > 0.1)
    throw NumericError(stage, "winding number " + std::to_string(t) + " is not near an integer");
  return static_cast<int>(k);
}

}  // namespace

double winding_turns(const ComplexFn& g, std::span<const cplx> pts, bool closed,
                     const char* stage) {
  return turns(g, nullptr, pts, closed, stage);
}

int winding_number(const ComplexFn& g, std::span<const cplx> pts, bool closed,
                   const char* stage) {
  return rounded(turns(g, nullptr, pts, closed, stage), stage);
}

int winding_number(const ComplexFn& g, const ComplexFn& dg, std::span<const cplx> pts, bool closed,
                   const char* stage) {
  return rounded(turns(g, &dg, pts, closed, stage), stage);
}

}  // namespace ahlfors
