#pragma once

// Per-element complex arithmetic shared by the scalar evaluator and the
// scalar kernel backend. The SIMD backends replicate these exact operation
// sequences, so for finite inputs every backend rounds identically.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace ahlfors::ops {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline constexpr double kInvSqrtPi = 0.56418958354775628694807945156077;  // 1/sqrt(pi)
inline constexpr double kInvPi = std::numbers::inv_pi;

inline void mul(double ar, double ai, double br, double bi, double& outr, double& outi) {
  const double re = ar * br - ai * bi;
  const double im = ar * bi + ai * br;
  outr = re;
  outi = im;
}

// A quotient whose denominator is zero or below eps * |numerator| is a pole
// (or 0/0); callers treat it with extended semantics.
inline bool is_pole_quotient(double nr, double ni, double dr, double di) {
  const double dd = dr * dr + di * di;
  const double nn = nr * nr + ni * ni;
  return dd == 0.0 || dd < (kEps * kEps) * nn;
}

inline void div(double nr, double ni, double dr, double di, double& outr, double& outi) {
  const double dd = dr * dr + di * di;
  const double re = (nr * dr + ni * di) / dd;
  const double im = (ni * dr - nr * di) / dd;
  outr = re;
  outi = im;
}

// Out of line on purpose: the compiler may fuse a sin/cos pair into one
// sincos call, which rounds differently on some libm builds. Keeping a single
// definition makes every caller see the same bits.
void exp(double ar, double ai, double& outr, double& outi);
void sin(double ar, double ai, double& outr, double& outi);
void cos(double ar, double ai, double& outr, double& outi);

// h^2 = |f'|^2 / (pi (1 + |f|^2)^2): pullback of the area-1 round metric.
inline double density_sq(double fr, double fi, double dr, double di) {
  const double q = 1.0 + (fr * fr + fi * fi);
  const double num = dr * dr + di * di;
  return (num / (q * q)) * kInvPi;
}

inline double chordal(double wr, double wi, double cr, double ci) {
  const double dx = wr - cr;
  const double dy = wi - ci;
  const double num = std::sqrt(dx * dx + dy * dy);
  const double den = std::sqrt(1.0 + (wr * wr + wi * wi)) * std::sqrt(1.0 + (cr * cr + ci * ci));
  return (num / den) * kInvSqrtPi;
}

inline double chordal_to_infinity(double wr, double wi) {
  return (1.0 / std::sqrt(1.0 + (wr * wr + wi * wi))) * kInvSqrtPi;
}

}  // namespace ahlfors::ops
