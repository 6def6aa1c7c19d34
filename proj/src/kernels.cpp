#include "ahlfors/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace ahlfors::kernels {
namespace detail {
#if !defined(AHLFORS_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !defined(AHLFORS_HAVE_NEON)
const KernelTable* neon_table() { return nullptr; }
#endif
}  // namespace detail

namespace {

bool cpu_has(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(AHLFORS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && detail::avx2_table() != nullptr;
#else
      return false;
#endif
    case Backend::neon:
      return detail::neon_table() != nullptr;
  }
  return false;
}

Backend detect() {
  // AHLFORS_KERNELS=scalar pins the reference path (useful when bisecting).
  if (const char* env = std::getenv("AHLFORS_KERNELS"); env && std::string(env) == "scalar")
    return Backend::scalar;
  if (cpu_has(Backend::avx2)) return Backend::avx2;
  if (cpu_has(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{detect()};
  return b;
}

}  // namespace

bool backend_available(Backend b) { return cpu_has(b); }

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void force_backend(Backend b) {
  if (!cpu_has(b))
    throw std::invalid_argument("kernel backend not available: " + std::string(backend_name(b)));
  current().store(b, std::memory_order_relaxed);
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

const KernelTable& table_for(Backend b) {
  switch (b) {
    case Backend::avx2:
      if (auto* t = detail::avx2_table(); t && cpu_has(b)) return *t;
      break;
    case Backend::neon:
      if (auto* t = detail::neon_table()) return *t;
      break;
    case Backend::scalar:
      break;
  }
  return detail::scalar_table();
}

const KernelTable& table() { return table_for(active_backend()); }

}  // namespace ahlfors::kernels
