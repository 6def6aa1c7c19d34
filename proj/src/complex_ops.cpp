#include "ahlfors/complex_ops.hpp"

namespace ahlfors::ops {

void exp(double ar, double ai, double& outr, double& outi) {
  const double m = std::exp(ar);
  outr = m * std::cos(ai);
  outi = m * std::sin(ai);
}

void sin(double ar, double ai, double& outr, double& outi) {
  const double re = std::sin(ar) * std::cosh(ai);
  const double im = std::cos(ar) * std::sinh(ai);
  outr = re;
  outi = im;
}

void cos(double ar, double ai, double& outr, double& outi) {
  const double re = std::cos(ar) * std::cosh(ai);
  const double im = -(std::sin(ar) * std::sinh(ai));
  outr = re;
  outi = im;
}

}  // namespace ahlfors::ops
