// aarch64 only. Two lanes per vector; same operation order as the scalar path.

#include <arm_neon.h>

#include "ahlfors/complex_ops.hpp"
#include "ahlfors/kernels.hpp"

namespace ahlfors::kernels::detail {
namespace {

constexpr std::size_t W = 2;

void cadd(const double* ar, const double* ai, const double* br, const double* bi, double* outr,
          double* outi, std::size_t n) {
  std::size_t k = 0;
  for (; k + W <= n; k += W) {
    vst1q_f64(outr + k, vaddq_f64(vld1q_f64(ar + k), vld1q_f64(br + k)));
    vst1q_f64(outi + k, vaddq_f64(vld1q_f64(ai + k), vld1q_f64(bi + k)));
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
    vst1q_f64(outr + k, vsubq_f64(vld1q_f64(ar + k), vld1q_f64(br + k)));
    vst1q_f64(outi + k, vsubq_f64(vld1q_f64(ai + k), vld1q_f64(bi + k)));
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
    const float64x2_t xr = vld1q_f64(ar + k), xi = vld1q_f64(ai + k);
    const float64x2_t yr = vld1q_f64(br + k), yi = vld1q_f64(bi + k);
    vst1q_f64(outr + k, vsubq_f64(vmulq_f64(xr, yr), vmulq_f64(xi, yi)));
    vst1q_f64(outi + k, vaddq_f64(vmulq_f64(xr, yi), vmulq_f64(xi, yr)));
  }
  for (; k < n; ++k) ops::mul(ar[k], ai[k], br[k], bi[k], outr[k], outi[k]);
}

void cdiv(const double* nr, const double* ni, const double* dr, const double* di, double* outr,
          double* outi, std::uint8_t* flags, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t eps2 = vdupq_n_f64(ops::kEps * ops::kEps);
  std::size_t k = 0;
  for (; k + W <= n; k += W) {
    const float64x2_t xr = vld1q_f64(nr + k), xi = vld1q_f64(ni + k);
    const float64x2_t yr = vld1q_f64(dr + k), yi = vld1q_f64(di + k);
    const float64x2_t dd = vaddq_f64(vmulq_f64(yr, yr), vmulq_f64(yi, yi));
    const float64x2_t nn = vaddq_f64(vmulq_f64(xr, xr), vmulq_f64(xi, xi));
    const uint64x2_t pole =
        vorrq_u64(vceqq_f64(dd, zero), vcltq_f64(dd, vmulq_f64(eps2, nn)));
    if (vgetq_lane_u64(pole, 0)) flags[k] |= 1;
    if (vgetq_lane_u64(pole, 1)) flags[k + 1] |= 1;
    vst1q_f64(outr + k, vdivq_f64(vaddq_f64(vmulq_f64(xr, yr), vmulq_f64(xi, yi)), dd));
    vst1q_f64(outi + k, vdivq_f64(vsubq_f64(vmulq_f64(xi, yr), vmulq_f64(xr, yi)), dd));
  }
  for (; k < n; ++k) {
    if (ops::is_pole_quotient(nr[k], ni[k], dr[k], di[k])) flags[k] |= 1;
    ops::div(nr[k], ni[k], dr[k], di[k], outr[k], outi[k]);
  }
}

void density_sq(const double* fr, const double* fi, const double* dr, const double* di,
                double* out, std::size_t n) {
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t inv_pi = vdupq_n_f64(ops::kInvPi);
  std::size_t k = 0;
  for (; k + W <= n; k += W) {
    const float64x2_t xr = vld1q_f64(fr + k), xi = vld1q_f64(fi + k);
    const float64x2_t yr = vld1q_f64(dr + k), yi = vld1q_f64(di + k);
    const float64x2_t q = vaddq_f64(one, vaddq_f64(vmulq_f64(xr, xr), vmulq_f64(xi, xi)));
    const float64x2_t num = vaddq_f64(vmulq_f64(yr, yr), vmulq_f64(yi, yi));
    vst1q_f64(out + k, vmulq_f64(vdivq_f64(num, vmulq_f64(q, q)), inv_pi));
  }
  for (; k < n; ++k) out[k] = ops::density_sq(fr[k], fi[k], dr[k], di[k]);
}

void chordal(const double* wr, const double* wi, double cr, double ci, double* out,
             std::size_t n) {
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t k_pi = vdupq_n_f64(ops::kInvSqrtPi);
  const float64x2_t vcr = vdupq_n_f64(cr), vci = vdupq_n_f64(ci);
  const float64x2_t cden = vdupq_n_f64(std::sqrt(1.0 + (cr * cr + ci * ci)));
  std::size_t k = 0;
  for (; k + W <= n; k += W) {
    const float64x2_t xr = vld1q_f64(wr + k), xi = vld1q_f64(wi + k);
    const float64x2_t dx = vsubq_f64(xr, vcr), dy = vsubq_f64(xi, vci);
    const float64x2_t num = vsqrtq_f64(vaddq_f64(vmulq_f64(dx, dx), vmulq_f64(dy, dy)));
    const float64x2_t wden =
        vsqrtq_f64(vaddq_f64(one, vaddq_f64(vmulq_f64(xr, xr), vmulq_f64(xi, xi))));
    vst1q_f64(out + k, vmulq_f64(vdivq_f64(num, vmulq_f64(wden, cden)), k_pi));
  }
  for (; k < n; ++k) out[k] = ops::chordal(wr[k], wi[k], cr, ci);
}

void chordal_to_infinity(const double* wr, const double* wi, double* out, std::size_t n) {
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t k_pi = vdupq_n_f64(ops::kInvSqrtPi);
  std::size_t k = 0;
  for (; k + W <= n; k += W) {
    const float64x2_t xr = vld1q_f64(wr + k), xi = vld1q_f64(wi + k);
    const float64x2_t s =
        vsqrtq_f64(vaddq_f64(one, vaddq_f64(vmulq_f64(xr, xr), vmulq_f64(xi, xi))));
    vst1q_f64(out + k, vmulq_f64(vdivq_f64(one, s), k_pi));
  }
  for (; k < n; ++k) out[k] = ops::chordal_to_infinity(wr[k], wi[k]);
}

double weighted_sum(const double* w, const double* x, std::size_t n) {
  // Two 2-lane accumulators reproduce the four scalar lanes.
  float64x2_t acc01 = vdupq_n_f64(0.0), acc23 = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc01 = vaddq_f64(acc01, vmulq_f64(vld1q_f64(w + k), vld1q_f64(x + k)));
    acc23 = vaddq_f64(acc23, vmulq_f64(vld1q_f64(w + k + 2), vld1q_f64(x + k + 2)));
  }
  double s = (vgetq_lane_f64(acc01, 0) + vgetq_lane_f64(acc01, 1)) +
             (vgetq_lane_f64(acc23, 0) + vgetq_lane_f64(acc23, 1));
  for (; k < n; ++k) s = s + w[k] * x[k];
  return s;
}

}  // namespace

const KernelTable* neon_table() {
  static const KernelTable t{cadd, csub, cmul, cdiv, density_sq, chordal, chordal_to_infinity,
                             weighted_sum};
  return &t;
}

}  // namespace ahlfors::kernels::detail
