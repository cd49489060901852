#pragma once

// Arithmetic inner loops used by the network layers and optimizers.
//
// Every kernel exists as a portable scalar reference (templated, so the
// gradient checker can run the whole stack in double) and, on x86-64, as an
// AVX2+FMA variant compiled in its own translation unit. The float entry
// points below forward to the table selected at startup: AVX2 when the CPU
// reports avx2 and fma, scalar otherwise. Setting GPFR_SIMD=scalar in the
// environment forces the reference path.
//
// Elementwise kernels are bit-identical across variants. Reductions (gemm,
// dot, column sums) differ only by summation order.

#include <cstddef>
#include <string_view>

namespace gpfr::simd {

enum class Trans : bool { kNo = false, kYes = true };

struct KernelTable {
  std::string_view name;

  // C = alpha * op(A) * op(B) + beta * C, row-major. op(A) is m x k, op(B)
  // is k x n. beta == 0 overwrites C without reading it.
  void (*gemm)(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
               const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta,
               float* c, std::size_t ldc);
  float (*dot)(const float* x, const float* y, std::size_t n);
  // y += a * x
  void (*axpy)(std::size_t n, float a, const float* x, float* y);
  // out[j] += sum_i x[i * cols + j]
  void (*add_column_sums)(const float* x, std::size_t rows, std::size_t cols, float* out);
  // x[i * cols + j] += bias[j]
  void (*add_row_bias)(float* x, std::size_t rows, std::size_t cols, const float* bias);
  void (*relu_forward)(const float* x, float* y, std::size_t n);
  // gx = gy where x > 0, else 0
  void (*relu_backward)(const float* x, const float* gy, float* gx, std::size_t n);
  // gx = gy * (1 - y^2)
  void (*tanh_backward)(const float* y, const float* gy, float* gx, std::size_t n);
  // Adam moment update and parameter step with bias corrections bc1 = 1 - b1^t,
  // bc2 = 1 - b2^t: w -= lr * (m / bc1) / (sqrt(v / bc2) + eps).
  void (*adam_update)(float* w, const float* g, float* m, float* v, std::size_t n, float lr,
                      float b1, float b2, float bc1, float bc2, float eps);
  // s = rho * s + (1 - rho) * g^2; w -= lr * g / (sqrt(s) + eps)
  void (*rmsprop_update)(float* w, const float* g, float* s, std::size_t n, float lr, float rho,
                         float eps);
};

const KernelTable& scalar_kernels() noexcept;
// Null when the build lacks the variant or the CPU cannot run it.
const KernelTable* avx2_kernels() noexcept;

const KernelTable& active_kernels() noexcept;

// Swaps the active table for the lifetime of the guard (tests only; not
// thread-safe against concurrent kernel calls).
class ScopedKernels {
 public:
  explicit ScopedKernels(const KernelTable& table) noexcept;
  ~ScopedKernels();
  ScopedKernels(const ScopedKernels&) = delete;
  ScopedKernels& operator=(const ScopedKernels&) = delete;

 private:
  const KernelTable* previous_;
};

}  // namespace gpfr::simd
