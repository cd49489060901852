#pragma once

// Element-type overloads over the kernel layer: float goes through the
// runtime-selected SIMD table, double through the scalar reference.

#include "gpfr/simd/kernels.hpp"
#include "gpfr/simd/reference.hpp"

namespace gpfr::nn::ops {

using simd::Trans;

inline void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
                 const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta,
                 float* c, std::size_t ldc) {
  simd::active_kernels().gemm(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
inline void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
                 double* c, std::size_t ldc) {
  simd::ref::gemm<double>(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void add_column_sums(const float* x, std::size_t rows, std::size_t cols, float* out) {
  simd::active_kernels().add_column_sums(x, rows, cols, out);
}
inline void add_column_sums(const double* x, std::size_t rows, std::size_t cols, double* out) {
  simd::ref::add_column_sums<double>(x, rows, cols, out);
}

inline void add_row_bias(float* x, std::size_t rows, std::size_t cols, const float* bias) {
  simd::active_kernels().add_row_bias(x, rows, cols, bias);
}
inline void add_row_bias(double* x, std::size_t rows, std::size_t cols, const double* bias) {
  simd::ref::add_row_bias<double>(x, rows, cols, bias);
}

inline void relu_forward(const float* x, float* y, std::size_t n) { simd::active_kernels().relu_forward(x, y, n); }
inline void relu_forward(const double* x, double* y, std::size_t n) { simd::ref::relu_forward<double>(x, y, n); }

inline void relu_backward(const float* x, const float* gy, float* gx, std::size_t n) {
  simd::active_kernels().relu_backward(x, gy, gx, n);
}
inline void relu_backward(const double* x, const double* gy, double* gx, std::size_t n) {
  simd::ref::relu_backward<double>(x, gy, gx, n);
}

inline void tanh_backward(const float* y, const float* gy, float* gx, std::size_t n) {
  simd::active_kernels().tanh_backward(y, gy, gx, n);
}
inline void tanh_backward(const double* y, const double* gy, double* gx, std::size_t n) {
  simd::ref::tanh_backward<double>(y, gy, gx, n);
}

inline void adam_update(float* w, const float* g, float* m, float* v, std::size_t n, float lr, float b1,
                        float b2, float bc1, float bc2, float eps) {
  simd::active_kernels().adam_update(w, g, m, v, n, lr, b1, b2, bc1, bc2, eps);
}
inline void adam_update(double* w, const double* g, double* m, double* v, std::size_t n, double lr,
                        double b1, double b2, double bc1, double bc2, double eps) {
  simd::ref::adam_update<double>(w, g, m, v, n, lr, b1, b2, bc1, bc2, eps);
}

inline void rmsprop_update(float* w, const float* g, float* s, std::size_t n, float lr, float rho, float eps) {
  simd::active_kernels().rmsprop_update(w, g, s, n, lr, rho, eps);
}
inline void rmsprop_update(double* w, const double* g, double* s, std::size_t n, double lr, double rho,
                           double eps) {
  simd::ref::rmsprop_update<double>(w, g, s, n, lr, rho, eps);
}

}  // namespace gpfr::nn::ops
