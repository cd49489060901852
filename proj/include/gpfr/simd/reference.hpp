#pragma once

// Scalar reference kernels, templated on the element type.

#include <cmath>
#include <cstddef>

#include "gpfr/simd/kernels.hpp"

namespace gpfr::simd::ref {

template <class T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = T(0);
    } else if (beta != T(1)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
  }
  if (m == 0 || n == 0 || k == 0 || alpha == T(0)) return;

  if (tb == Trans::kNo) {
    // i-p-j order keeps the inner loop contiguous over B and C.
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * ldc;
      for (std::size_t p = 0; p < k; ++p) {
        const T aip = alpha * (ta == Trans::kNo ? a[i * lda + p] : a[p * lda + i]);
        if (aip == T(0)) continue;
        const T* brow = b + p * ldb;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * ldc;
      for (std::size_t j = 0; j < n; ++j) {
        const T* brow = b + j * ldb;
        T acc = T(0);
        if (ta == Trans::kNo) {
          const T* arow = a + i * lda;
          for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        } else {
          for (std::size_t p = 0; p < k; ++p) acc += a[p * lda + i] * brow[p];
        }
        crow[j] += alpha * acc;
      }
    }
  }
}

template <class T>
T dot(const T* x, const T* y, std::size_t n) {
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <class T>
void axpy(std::size_t n, T a, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <class T>
void add_column_sums(const T* x, std::size_t rows, std::size_t cols, T* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = x + r * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += row[j];
  }
}

template <class T>
void add_row_bias(T* x, std::size_t rows, std::size_t cols, const T* bias) {
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = x + r * cols;
    for (std::size_t j = 0; j < cols; ++j) row[j] += bias[j];
  }
}

template <class T>
void relu_forward(const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <class T>
void relu_backward(const T* x, const T* gy, T* gx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) gx[i] = x[i] > T(0) ? gy[i] : T(0);
}

template <class T>
void tanh_backward(const T* y, const T* gy, T* gx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) gx[i] = gy[i] * (T(1) - y[i] * y[i]);
}

template <class T>
void adam_update(T* w, const T* g, T* m, T* v, std::size_t n, T lr, T b1, T b2, T bc1, T bc2,
                 T eps) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * g[i];
    v[i] = b2 * v[i] + (T(1) - b2) * (g[i] * g[i]);
    const T mhat = m[i] / bc1;
    const T vhat = v[i] / bc2;
    w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

template <class T>
void rmsprop_update(T* w, const T* g, T* s, std::size_t n, T lr, T rho, T eps) {
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = rho * s[i] + (T(1) - rho) * (g[i] * g[i]);
    w[i] -= lr * g[i] / (std::sqrt(s[i]) + eps);
  }
}

}  // namespace gpfr::simd::ref
