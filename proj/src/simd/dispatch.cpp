#include <atomic>
#include <cstdlib>
#include <cstring>

#include "gpfr/simd/kernels.hpp"
#include "gpfr/simd/reference.hpp"

namespace gpfr::simd {

#if defined(GPFR_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;  // kernels_avx2.cpp
#endif

namespace {

const KernelTable kScalar{
    "scalar",
    &ref::gemm<float>,
    &ref::dot<float>,
    &ref::axpy<float>,
    &ref::add_column_sums<float>,
    &ref::add_row_bias<float>,
    &ref::relu_forward<float>,
    &ref::relu_backward<float>,
    &ref::tanh_backward<float>,
    &ref::adam_update<float>,
    &ref::rmsprop_update<float>,
};

bool cpu_has_avx2() noexcept {
#if defined(GPFR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* select_default() noexcept {
  if (const char* forced = std::getenv("GPFR_SIMD"); forced && std::strcmp(forced, "scalar") == 0) {
    return &kScalar;
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  return &kScalar;
}

std::atomic<const KernelTable*>& active_slot() noexcept {
  static std::atomic<const KernelTable*> slot{select_default()};
  return slot;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

const KernelTable* avx2_kernels() noexcept {
#if defined(GPFR_HAVE_AVX2)
  static const bool usable = cpu_has_avx2();
  return usable ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() noexcept {
  return *active_slot().load(std::memory_order_relaxed);
}

ScopedKernels::ScopedKernels(const KernelTable& table) noexcept
    : previous_(active_slot().exchange(&table)) {}

ScopedKernels::~ScopedKernels() { active_slot().store(previous_); }

}  // namespace gpfr::simd
