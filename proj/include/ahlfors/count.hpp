#pragma once

// Preimage counting and islands.
//
// Roots of f = p are found on an entire function g built from f = N/D
// (N - pD, or N/p - D for |p| > 1, or D for p = infinity), by recursive
// subdivision of the square [-r, r]^2 driven by argument-principle winding
// numbers, then polished by Newton. d_n(p) counts distinct points in |z| < r.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ahlfors/expr.hpp"
#include "ahlfors/grid.hpp"
#include "ahlfors/metric.hpp"

namespace ahlfors {

struct Root {
  cplx z;
  int multiplicity = 1;
};

class PreimageCounter {
 public:
  // Throws NumericError("count", ...) if f is not a quotient of entire parts.
  explicit PreimageCounter(const CompiledMap& m);

  // Solutions of f(z) = p in |z| < r, each with its multiplicity, sorted by
  // (real, imag). Throws NumericError when a solution sits on |z| = r.
  std::vector<Root> roots(const SpherePoint& p, double r) const;
  int count(const SpherePoint& p, double r) const { return static_cast<int>(roots(p, r).size()); }

 private:
  explicit PreimageCounter(const EntireFraction& frac);
  Program num_, den_, dnum_, dden_;
  bool den_constant_;
};

int count_preimages(const CompiledMap& m, const SpherePoint& p, double r);

struct MeanDegree {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::size_t resampled = 0;  // sample points rejected (solution on the circle)
};
MeanDegree mean_degree(const CompiledMap& m, double r, std::size_t n_samples, std::uint64_t seed);

struct IslandRecord {
  int disk_index = 0;
  std::vector<Polyline> boundary;  // closed loops, the island on their left
  int chi = 1;
  int degree = 0;
  int ramification = 0;
  int critical_points = 0;  // zeros of f' inside (finite centers only)
  double area_share = 0.0;  // integral of h^2 over the island / disk area
  cplx centroid{};
  cplx representative{};  // grid node deepest inside the disk preimage
  cplx leftmost{};
};

struct IslandScan {
  int disk_index = 0;
  std::vector<IslandRecord> islands;
  std::vector<IslandRecord> ambiguous;  // inside the margin band
  int nonproper = 0;                    // components touching |z| = r

  int degree_sum() const;
};

// Preimage components of the disk inside |z| <= r. Components within 1.5
// grid steps of the circle are not proper; those reaching the 10-cell margin
// band are reported as ambiguous.
IslandScan find_islands(const CompiledMap& m, const SphericalDisk& disk, double r, int resolution,
                        int disk_index = 0);
IslandScan find_islands(const CompiledMap& m, const GridValues& values, const SphericalDisk& disk,
                        int disk_index = 0);

// Argument principle along the island boundary: preimages of center inside.
int island_degree(const CompiledMap& m, const IslandRecord& island, const SpherePoint& center);

int total_ramification(std::span<const IslandRecord> islands);

// disk_index,chi,degree,ramification,centroid_x,centroid_y
std::string islands_csv(std::span<const IslandScan> scans);

}  // namespace ahlfors
