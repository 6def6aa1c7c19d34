#pragma once

// Round metric on the Riemann sphere scaled to total area 1, and pullback
// quantities of a map restricted to the disk |z| <= r:
//   h(z) = |f'(z)| / (sqrt(pi) (1 + |f(z)|^2))
//   a(r) = integral of h^2 over |z| <= r      (mean covering number)
//   l(r) = integral of h over |z| = r         (boundary length)

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ahlfors/expr.hpp"

namespace ahlfors {

struct SpherePoint {
  cplx z{};
  bool infinite = false;

  static SpherePoint at(cplx w) { return {w, false}; }
  static SpherePoint infinity() { return {cplx{}, true}; }
  static SpherePoint from(const Value& v);
};

// (1/sqrt(pi)) |p - q| / (sqrt(1+|p|^2) sqrt(1+|q|^2)); the diameter is 1/sqrt(pi).
double chordal_distance(const SpherePoint& p, const SpherePoint& q);
inline constexpr double kSphereDiameter = 0.56418958354775628694807945156077;

struct SphericalDisk {
  SpherePoint center;
  double radius = 0.0;

  // Throws std::invalid_argument unless 0 < radius < diameter / 2.
  void validate() const;
  bool contains(const SpherePoint& p) const { return chordal_distance(p, center) < radius; }
  // A chordal disk of radius rho has spherical area pi rho^2 (Archimedes).
  double area() const;
};

// h(z). At a pole of f the limit value is returned.
double spherical_density(const CompiledMap& m, cplx z);

// h^2 at many points; uses the vector kernels and falls back to
// spherical_density on lanes the fast path cannot handle.
void density_squared(const CompiledMap& m, std::span<const double> zr,
                     std::span<const double> zi, std::span<double> out);

struct QuadratureOptions {
  double tol = 1e-10;          // accepted when error <= tol * (1 + |I|)
  std::size_t cell_budget = 400'000;
};

// Quadrature gave up. estimate is the best value reached; the worst cell is
// the polar rectangle [rho0, rho1] x [theta0, theta1] with the largest error.
class QuadratureError : public NumericError {
 public:
  QuadratureError(const std::string& what, double estimate, double error, double rho0,
                  double rho1, double theta0, double theta1);
  double estimate;
  double error;
  double rho0, rho1, theta0, theta1;
};

double annulus_area(const CompiledMap& m, double r0, double r1, const QuadratureOptions& opt = {});
double area(const CompiledMap& m, double r, const QuadratureOptions& opt = {});

// Throws NumericError("boundary_length", ...) when the circle runs through a pole.
double boundary_length(const CompiledMap& m, double r, double tol = 1e-12);

// a'(r) as the ring integral of h^2 r over |z| = r.
double area_derivative(const CompiledMap& m, double r, double tol = 1e-12);

struct MetricProfile {
  std::string map;
  std::vector<double> radii;
  std::vector<double> a;
  std::vector<double> l;

  // r,a,l,ratio with 12 significant digits.
  std::string to_csv() const;
};

// Radii need not be sorted on input; the profile comes back ascending.
MetricProfile compute_profile(const CompiledMap& m, std::vector<double> radii,
                              const QuadratureOptions& opt = {});

std::vector<double> select_radii(const CompiledMap& m, double r_min, double r_max, int count);

struct Certificate {
  double integral = 0.0;  // int_{r1}^{r2} (l/a)^2 dr/r
  double bound = 0.0;     // 2 pi / a(r1)
};
Certificate lengtharea_certificate(const CompiledMap& m, double r1, double r2);

std::vector<SpherePoint> sample_sphere_uniform(std::uint64_t seed, std::size_t n);

}  // namespace ahlfors
