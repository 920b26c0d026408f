// NEON variants (aarch64 only). float64x2_t lanes, FMA via vfmaq_f64.

#include <arm_neon.h>

#include <cmath>

#include "spe/simd/kernels.hpp"

namespace spe::simd::detail {
namespace {

template <int ROWS>
inline void tile_4(const ConstMatrixView& a, const ConstMatrixView& b, const MatrixView& c,
                   std::size_t i0, std::size_t j0, bool accumulate) {
  float64x2_t acc0[ROWS];
  float64x2_t acc1[ROWS];
  for (int r = 0; r < ROWS; ++r) {
    if (accumulate) {
      acc0[r] = vld1q_f64(c.row(i0 + r) + j0);
      acc1[r] = vld1q_f64(c.row(i0 + r) + j0 + 2);
    } else {
      acc0[r] = vdupq_n_f64(0.0);
      acc1[r] = vdupq_n_f64(0.0);
    }
  }
  for (std::size_t p = 0; p < a.cols; ++p) {
    const double* brow = b.row(p) + j0;
    const float64x2_t b0 = vld1q_f64(brow);
    const float64x2_t b1 = vld1q_f64(brow + 2);
    for (int r = 0; r < ROWS; ++r) {
      const float64x2_t av = vdupq_n_f64(a.row(i0 + r)[p]);
      acc0[r] = vfmaq_f64(acc0[r], av, b0);
      acc1[r] = vfmaq_f64(acc1[r], av, b1);
    }
  }
  for (int r = 0; r < ROWS; ++r) {
    vst1q_f64(c.row(i0 + r) + j0, acc0[r]);
    vst1q_f64(c.row(i0 + r) + j0 + 2, acc1[r]);
  }
}

template <int ROWS>
inline void row_block(const ConstMatrixView& a, const ConstMatrixView& b, const MatrixView& c,
                      std::size_t i0, bool accumulate) {
  const std::size_t n = b.cols;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) tile_4<ROWS>(a, b, c, i0, j, accumulate);
  for (; j < n; ++j) {
    for (int r = 0; r < ROWS; ++r) {
      double s = accumulate ? c.row(i0 + r)[j] : 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) s = std::fma(a.row(i0 + r)[p], b.row(p)[j], s);
      c.row(i0 + r)[j] = s;
    }
  }
}

void gemm_neon(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate) {
  std::size_t i = 0;
  for (; i + 4 <= a.rows; i += 4) row_block<4>(a, b, c, i, accumulate);
  for (; i < a.rows; ++i) row_block<1>(a, b, c, i, accumulate);
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

}  // namespace

const KernelTable& neon_kernels() {
  static const KernelTable table{gemm_neon, axpy_neon, dot_neon};
  return table;
}

}  // namespace spe::simd::detail
