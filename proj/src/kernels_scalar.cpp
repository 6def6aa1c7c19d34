#include "ahlfors/complex_ops.hpp"
#include "ahlfors/kernels.hpp"

namespace ahlfors::kernels::detail {
namespace {

void cadd(const double* ar, const double* ai, const double* br, const double* bi, double* outr,
          double* outi, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    outr[k] = ar[k] + br[k];
    outi[k] = ai[k] + bi[k];
  }
}

void csub(const double* ar, const double* ai, const double* br, const double* bi, double* outr,
          double* outi, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    outr[k] = ar[k] - br[k];
    outi[k] = ai[k] - bi[k];
  }
}

void cmul(const double* ar, const double* ai, const double* br, const double* bi, double* outr,
          double* outi, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) ops::mul(ar[k], ai[k], br[k], bi[k], outr[k], outi[k]);
}

void cdiv(const double* nr, const double* ni, const double* dr, const double* di, double* outr,
          double* outi, std::uint8_t* flags, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    if (ops::is_pole_quotient(nr[k], ni[k], dr[k], di[k])) flags[k] |= 1;
    ops::div(nr[k], ni[k], dr[k], di[k], outr[k], outi[k]);
  }
}

void density_sq(const double* fr, const double* fi, const double* dr, const double* di,
                double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = ops::density_sq(fr[k], fi[k], dr[k], di[k]);
}

void chordal(const double* wr, const double* wi, double cr, double ci, double* out,
             std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = ops::chordal(wr[k], wi[k], cr, ci);
}

void chordal_to_infinity(const double* wr, const double* wi, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = ops::chordal_to_infinity(wr[k], wi[k]);
}

double weighted_sum(const double* w, const double* x, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    for (std::size_t j = 0; j < 4; ++j) lane[j] = lane[j] + w[k + j] * x[k + j];
  }
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; k < n; ++k) s = s + w[k] * x[k];
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{cadd, csub, cmul, cdiv, density_sq, chordal, chordal_to_infinity,
                             weighted_sum};
  return t;
}

}  // namespace ahlfors::kernels::detail
