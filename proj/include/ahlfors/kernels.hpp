#pragma once

// Data-parallel inner loops over structure-of-arrays complex data.
//
// Every kernel has a scalar reference implementation and, where the target
// supports it, an AVX2 (x86-64) or NEON (aarch64) variant. The variant is
// picked once at startup from the CPU's capabilities and can be overridden
// for testing. All variants use the same operation order without fused
// multiply-add, so results are bit-identical across backends.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace ahlfors::kernels {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
  void (*cadd)(const double* ar, const double* ai, const double* br, const double* bi,
               double* outr, double* outi, std::size_t n);
  void (*csub)(const double* ar, const double* ai, const double* br, const double* bi,
               double* outr, double* outi, std::size_t n);
  void (*cmul)(const double* ar, const double* ai, const double* br, const double* bi,
               double* outr, double* outi, std::size_t n);
  // Sets flags[k] |= 1 when lane k is a pole quotient (see ops::is_pole_quotient).
  void (*cdiv)(const double* nr, const double* ni, const double* dr, const double* di,
               double* outr, double* outi, std::uint8_t* flags, std::size_t n);
  void (*density_sq)(const double* fr, const double* fi, const double* dr, const double* di,
                     double* out, std::size_t n);
  void (*chordal)(const double* wr, const double* wi, double cr, double ci, double* out,
                  std::size_t n);
  void (*chordal_to_infinity)(const double* wr, const double* wi, double* out, std::size_t n);
  // Sum of w[k] * x[k] accumulated in four interleaved lanes, combined as
  // (l0 + l1) + (l2 + l3), then the tail in index order.
  double (*weighted_sum)(const double* w, const double* x, std::size_t n);
};

const KernelTable& table();
const KernelTable& table_for(Backend b);

Backend active_backend();
bool backend_available(Backend b);
// Throws std::invalid_argument when the backend is not available on this CPU.
void force_backend(Backend b);
std::string_view backend_name(Backend b);

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();
}  // namespace detail

}  // namespace ahlfors::kernels
