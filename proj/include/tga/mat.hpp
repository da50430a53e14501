#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tga {

class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

inline std::string shape_str(int rows, int cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

[[noreturn]] inline void shape_fail(const char* op, int ar, int ac, int br, int bc) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(ar, ac) +
                   " and " + shape_str(br, bc));
}

/// Dense row-major matrix. Element type is float or double; the precision of a
/// whole model is fixed by the template argument of the stack built on top.
template <typename T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, T(0)) {}
  Mat(int r, int c, T fill) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

  static Mat zeros(int r, int c) { return Mat(r, c); }

  T* row(int i) { return a.data() + static_cast<size_t>(i) * cols; }
  const T* row(int i) const { return a.data() + static_cast<size_t>(i) * cols; }

  T& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  T operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  size_t size() const { return a.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  void fill(T v) { std::fill(a.begin(), a.end(), v); }

  void release() {
    rows = cols = 0;
    a.clear();
    a.shrink_to_fit();
  }

  bool all_finite() const {
    for (T v : a)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }
};

// GEMM kernels, all accumulate into C (C must be pre-sized). The inner loops
// are accumulation-free over contiguous rows so they auto-vectorize; A*B^T
// transposes B into a thread-local scratch first, except for very short A
// where the transpose would dominate.

/// C += A * B
template <typename T>
void gemm_nn(const Mat<T>& A, const Mat<T>& B, Mat<T>& C) {
  if (A.cols != B.rows || C.rows != A.rows || C.cols != B.cols)
    shape_fail("gemm_nn", A.rows, A.cols, B.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    const T* __restrict ai = A.row(i);
    T* __restrict ci = C.row(i);
    for (int k = 0; k < A.cols; ++k) {
      const T s = ai[k];
      if (s == T(0)) continue;
      const T* __restrict bk = B.row(k);
      for (int j = 0; j < B.cols; ++j) ci[j] += s * bk[j];
    }
  }
}

/// C += A * B^T
template <typename T>
void gemm_nt(const Mat<T>& A, const Mat<T>& B, Mat<T>& C) {
  if (A.cols != B.cols || C.rows != A.rows || C.cols != B.rows)
    shape_fail("gemm_nt", A.rows, A.cols, B.cols, B.rows);
  if (A.rows >= 4 && B.rows > 1) {
    thread_local std::vector<T> scratch;
    scratch.resize(B.a.size());
    for (int i = 0; i < B.rows; ++i) {
      const T* bi = B.row(i);
      for (int j = 0; j < B.cols; ++j)
        scratch[static_cast<size_t>(j) * B.rows + i] = bi[j];
    }
    // inline nn against the transposed scratch
    for (int i = 0; i < A.rows; ++i) {
      const T* __restrict ai = A.row(i);
      T* __restrict ci = C.row(i);
      for (int k = 0; k < A.cols; ++k) {
        const T s = ai[k];
        if (s == T(0)) continue;
        const T* __restrict bk = scratch.data() + static_cast<size_t>(k) * B.rows;
        for (int j = 0; j < B.rows; ++j) ci[j] += s * bk[j];
      }
    }
    return;
  }
  for (int i = 0; i < A.rows; ++i) {
    const T* __restrict ai = A.row(i);
    T* __restrict ci = C.row(i);
    for (int j = 0; j < B.rows; ++j) {
      const T* __restrict bj = B.row(j);
      T acc = T(0);
      for (int k = 0; k < A.cols; ++k) acc += ai[k] * bj[k];
      ci[j] += acc;
    }
  }
}

/// C += A^T * B
template <typename T>
void gemm_tn(const Mat<T>& A, const Mat<T>& B, Mat<T>& C) {
  if (A.rows != B.rows || C.rows != A.cols || C.cols != B.cols)
    shape_fail("gemm_tn", A.cols, A.rows, B.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    const T* __restrict ai = A.row(i);
    const T* __restrict bi = B.row(i);
    for (int k = 0; k < A.cols; ++k) {
      const T s = ai[k];
      if (s == T(0)) continue;
      T* __restrict ck = C.row(k);
      for (int j = 0; j < B.cols; ++j) ck[j] += s * bi[j];
    }
  }
}

template <typename T>
uint64_t gemm_macs(const Mat<T>& A, int other_dim) {
  return static_cast<uint64_t>(A.rows) * A.cols * other_dim;
}

}  // namespace tga
