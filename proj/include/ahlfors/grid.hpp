#pragma once

// Uniform node grids over the square [-r, r]^2, marching squares on node
// fields, connected-component labeling, and winding numbers of a map along
// polylines. Shared by island counting and preimage tracing.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ahlfors/expr.hpp"

namespace ahlfors {

struct Grid {
  double r = 1.0;
  int n = 64;  // cells per side; nodes are (n+1)^2

  int nodes_per_side() const { return n + 1; }
  std::size_t node_count() const {
    return static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 1);
  }
  double step() const { return 2.0 * r / n; }
  cplx node(int i, int j) const { return {-r + step() * i, -r + step() * j}; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(n + 1) +
           static_cast<std::size_t>(i);
  }
};

// Evaluate f at every node (batch path). kinds[k] tells finite / pole / 0/0.
struct GridValues {
  Grid grid;
  std::vector<double> re, im;
  std::vector<ValueKind> kinds;
};
GridValues sample_grid(const Program& f, const Grid& g);

struct Polyline {
  std::vector<cplx> pts;
  bool closed = false;
};

// Cell range [i0, i1) x [j0, j1).
struct CellRange {
  int i0, j0, i1, j1;
};

struct MarchOptions {
  // Called for a saddle cell (i, j). Return true to join the two negative
  // corners through the cell, false to separate them. Default: separate.
  std::function<bool(int, int)> join_negatives;
  // Called with the two edge endpoints and their field values (va < 0 <= vb
  // or the reverse); returns the crossing point. Default: linear.
  std::function<cplx(cplx, double, cplx, double)> locate;
};

// Zero set of a node field (negative = inside). NaN nodes disable every cell
// they touch, so curves end there as open polylines. Output curves keep the
// negative side on their left; closed loops around negative regions run
// counter-clockwise.
std::vector<Polyline> march(const Grid& g, std::span<const double> field, CellRange cells,
                            const MarchOptions& opt = {});

// Connected components of mask (1 = member) on the node lattice.
// Returns labels (-1 for non-members), component count written to count.
std::vector<int> label_components(const Grid& g, std::span<const std::uint8_t> mask,
                                  int connectivity, int& count);

// Number of turns of g around 0 along the polyline (closing it if closed).
// Segments are split until every argument step is at most pi/4 and the
// chord |g(b) - g(a)| stays below min(|g(a)|, |g(b)|). Throws NumericError
// when the map gets too close to 0 on the path or the result is not near an
// integer.
using ComplexFn = std::function<Value(cplx)>;

int winding_number(const ComplexFn& g, std::span<const cplx> pts, bool closed,
                   const char* stage = "winding");

// Same, returning the raw number of turns without rounding.
double winding_turns(const ComplexFn& g, std::span<const cplx> pts, bool closed,
                     const char* stage = "winding");

// With the derivative dg, segments are also split until |dg| * length stays
// below pi/4 * |g| at their ends and midpoint.
int winding_number(const ComplexFn& g, const ComplexFn& dg, std::span<const cplx> pts, bool closed,
                   const char* stage = "winding");

}  // namespace ahlfors
