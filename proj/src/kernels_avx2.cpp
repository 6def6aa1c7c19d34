// Compiled with -mavx2 only; the dispatcher never calls into this table on
// CPUs without AVX2.

#include <immintrin.h>

#include "ahlfors/complex_ops.hpp"
#include "ahlfors/kernels.hpp"

namespace ahlfors::kernels::detail {
namespace {

constexpr std::size_t W = 4;

void cadd(const double* ar, const double* ai, const double* br, const double* bi, double* outr,
          double* outi, std::size_t n) {
  std::size_t k = 0;
  for (; k + W <= n; k += W) {
    _mm256_storeu_pd(outr + k, _mm256_add_pd(_mm256_loadu_pd(ar + k), _mm256_loadu_pd(br + k)));
    _mm256_storeu_pd(outi + k, _mm256_add_pd(_mm256_loadu_pd(ai + k), _mm256_loadu_pd(bi + k)));
  }
  for (; k < n; ++k) {
    outr[k] = ar[k] + br[k];
    outi[k] = ai[k] + bi[k];
  }
}

void csub(const double* ar, const double* ai, const double* br, const double* bi, double* outr,
          double* outi, std::size_t n) {
  std::size_t k = 0;
  for (; k + W <= n; k += W) {
    _mm256_storeu_pd(outr + k, _mm256_sub_pd(_mm256_loadu_pd(ar + k), _mm256_loadu_pd(br + k)));
    _mm256_storeu_pd(outi + k, _mm256_sub_pd(_mm256_loadu_pd(ai + k), _mm256_loadu_pd(bi + k)));
  }
  for (; k < n; ++k) {
    outr[k] = ar[k] - br[k];
    outi[k] = ai[k] - bi[k];
  }
}

void cmul(const double* ar, const double* ai, const double* br, const double* bi, double* outr,
          double* outi, std::size_t n) {
  std::size_t k = 0;
  for (; k + W <= n; k += W) {
    const __m256d xr = _mm256_loadu_pd(ar + k), xi = _mm256_loadu_pd(ai + k);
    const __m256d yr = _mm256_loadu_pd(br + k), yi = _mm256_loadu_pd(bi + k);
    const __m256d re = _mm256_sub_pd(_mm256_mul_pd(xr, yr), _mm256_mul_pd(xi, yi));
    const __m256d im = _mm256_add_pd(_mm256_mul_pd(xr, yi), _mm256_mul_pd(xi, yr));
    _mm256_storeu_pd(outr + k, re);
    _mm256_storeu_pd(outi + k, im);
  }
  for (; k < n; ++k) ops::mul(ar[k], ai[k], br[k], bi[k], outr[k], outi[k]);
}

void cdiv(const double* nr, const double* ni, const double* dr, const double* di, double* outr,
          double* outi, std::uint8_t* flags, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d eps2 = _mm256_set1_pd(ops::kEps * ops::kEps);
  std::size_t k = 0;
  for (; k + W <= n; k += W) {
    const __m256d xr = _mm256_loadu_pd(nr + k), xi = _mm256_loadu_pd(ni + k);
    const __m256d yr = _mm256_loadu_pd(dr + k), yi = _mm256_loadu_pd(di + k);
    const __m256d dd = _mm256_add_pd(_mm256_mul_pd(yr, yr), _mm256_mul_pd(yi, yi));
    const __m256d nn = _mm256_add_pd(_mm256_mul_pd(xr, xr), _mm256_mul_pd(xi, xi));
    const __m256d pole = _mm256_or_pd(_mm256_cmp_pd(dd, zero, _CMP_EQ_OQ),
                                      _mm256_cmp_pd(dd, _mm256_mul_pd(eps2, nn), _CMP_LT_OQ));
    const int mask = _mm256_movemask_pd(pole);
    if (mask != 0) {
      for (std::size_t j = 0; j < W; ++j)
        if (mask & (1 << j)) flags[k + j] |= 1;
    }
    const __m256d re =
        _mm256_div_pd(_mm256_add_pd(_mm256_mul_pd(xr, yr), _mm256_mul_pd(xi, yi)), dd);
    const __m256d im =
        _mm256_div_pd(_mm256_sub_pd(_mm256_mul_pd(xi, yr), _mm256_mul_pd(xr, yi)), dd);
    _mm256_storeu_pd(outr + k, re);
    _mm256_storeu_pd(outi + k, im);
  }
  for (; k < n; ++k) {
    if (ops::is_pole_quotient(nr[k], ni[k], dr[k], di[k])) flags[k] |= 1;
    ops::div(nr[k], ni[k], dr[k], di[k], outr[k], outi[k]);
  }
}

void density_sq(const double* fr, const double* fi, const double* dr, const double* di,
                double* out, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d inv_pi = _mm256_set1_pd(ops::kInvPi);
  std::size_t k = 0;
  for (; k + W <= n; k += W) {
    const __m256d xr = _mm256_loadu_pd(fr + k), xi = _mm256_loadu_pd(fi + k);
    const __m256d yr = _mm256_loadu_pd(dr + k), yi = _mm256_loadu_pd(di + k);
    const __m256d q =
        _mm256_add_pd(one, _mm256_add_pd(_mm256_mul_pd(xr, xr), _mm256_mul_pd(xi, xi)));
    const __m256d num = _mm256_add_pd(_mm256_mul_pd(yr, yr), _mm256_mul_pd(yi, yi));
    _mm256_storeu_pd(out + k, _mm256_mul_pd(_mm256_div_pd(num, _mm256_mul_pd(q, q)), inv_pi));
  }
  for (; k < n; ++k) out[k] = ops::density_sq(fr[k], fi[k], dr[k], di[k]);
}

void chordal(const double* wr, const double* wi, double cr, double ci, double* out,
             std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d k_pi = _mm256_set1_pd(ops::kInvSqrtPi);
  const __m256d vcr = _mm256_set1_pd(cr), vci = _mm256_set1_pd(ci);
  const __m256d cden = _mm256_set1_pd(std::sqrt(1.0 + (cr * cr + ci * ci)));
  std::size_t k = 0;
  for (; k + W <= n; k += W) {
    const __m256d xr = _mm256_loadu_pd(wr + k), xi = _mm256_loadu_pd(wi + k);
    const __m256d dx = _mm256_sub_pd(xr, vcr), dy = _mm256_sub_pd(xi, vci);
    const __m256d num =
        _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)));
    const __m256d wden = _mm256_sqrt_pd(
        _mm256_add_pd(one, _mm256_add_pd(_mm256_mul_pd(xr, xr), _mm256_mul_pd(xi, xi))));
    const __m256d den = _mm256_mul_pd(wden, cden);
    _mm256_storeu_pd(out + k, _mm256_mul_pd(_mm256_div_pd(num, den), k_pi));
  }
  for (; k < n; ++k) out[k] = ops::chordal(wr[k], wi[k], cr, ci);
}

void chordal_to_infinity(const double* wr, const double* wi, double* out, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d k_pi = _mm256_set1_pd(ops::kInvSqrtPi);
  std::size_t k = 0;
  for (; k + W <= n; k += W) {
    const __m256d xr = _mm256_loadu_pd(wr + k), xi = _mm256_loadu_pd(wi + k);
    const __m256d s = _mm256_sqrt_pd(
        _mm256_add_pd(one, _mm256_add_pd(_mm256_mul_pd(xr, xr), _mm256_mul_pd(xi, xi))));
    _mm256_storeu_pd(out + k, _mm256_mul_pd(_mm256_div_pd(one, s), k_pi));
  }
  for (; k < n; ++k) out[k] = ops::chordal_to_infinity(wr[k], wi[k]);
}

double weighted_sum(const double* w, const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + W <= n; k += W)
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(w + k), _mm256_loadu_pd(x + k)));
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; k < n; ++k) s = s + w[k] * x[k];
  return s;
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable t{cadd, csub, cmul, cdiv, density_sq, chordal, chordal_to_infinity,
                             weighted_sum};
  return &t;
}

}  // namespace ahlfors::kernels::detail
