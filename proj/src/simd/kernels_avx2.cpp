// AVX2 + FMA variants. This file is compiled with -mavx2 -mfma and is only
// entered after a runtime CPU check.

#include <immintrin.h>

#include <cmath>
#include <vector>

#include "spe/simd/kernels.hpp"

namespace spe::simd::detail {
namespace {

// Register-blocked tile: ROWS rows of c times 8 columns (two ymm per row).
// bp is the packed k x 8 panel of b for these columns.
template <int ROWS>
inline void tile_8(const ConstMatrixView& a, const double* bp, const MatrixView& c, std::size_t i0,
                   std::size_t j0, bool accumulate) {
  __m256d acc0[ROWS];
  __m256d acc1[ROWS];
  for (int r = 0; r < ROWS; ++r) {
    if (accumulate) {
      acc0[r] = _mm256_loadu_pd(c.row(i0 + r) + j0);
      acc1[r] = _mm256_loadu_pd(c.row(i0 + r) + j0 + 4);
    } else {
      acc0[r] = _mm256_setzero_pd();
      acc1[r] = _mm256_setzero_pd();
    }
  }
  const double* arows[ROWS];
  for (int r = 0; r < ROWS; ++r) arows[r] = a.row(i0 + r);
  const std::size_t k = a.cols;
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(bp + 8 * p);
    const __m256d b1 = _mm256_loadu_pd(bp + 8 * p + 4);
    for (int r = 0; r < ROWS; ++r) {
      const __m256d av = _mm256_broadcast_sd(arows[r] + p);
      acc0[r] = _mm256_fmadd_pd(av, b0, acc0[r]);
      acc1[r] = _mm256_fmadd_pd(av, b1, acc1[r]);
    }
  }
  for (int r = 0; r < ROWS; ++r) {
    _mm256_storeu_pd(c.row(i0 + r) + j0, acc0[r]);
    _mm256_storeu_pd(c.row(i0 + r) + j0 + 4, acc1[r]);
  }
}

template <int ROWS>
inline void tile_4(const ConstMatrixView& a, const ConstMatrixView& b, const MatrixView& c,
                   std::size_t i0, std::size_t j0, bool accumulate) {
  __m256d acc[ROWS];
  for (int r = 0; r < ROWS; ++r) {
    acc[r] = accumulate ? _mm256_loadu_pd(c.row(i0 + r) + j0) : _mm256_setzero_pd();
  }
  const std::size_t k = a.cols;
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d bv = _mm256_loadu_pd(b.row(p) + j0);
    for (int r = 0; r < ROWS; ++r) {
      acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a.row(i0 + r) + p), bv, acc[r]);
    }
  }
  for (int r = 0; r < ROWS; ++r) _mm256_storeu_pd(c.row(i0 + r) + j0, acc[r]);
}

template <int ROWS>
inline void tile_1(const ConstMatrixView& a, const ConstMatrixView& b, const MatrixView& c,
                   std::size_t i0, std::size_t j, bool accumulate) {
  const std::size_t k = a.cols;
  for (int r = 0; r < ROWS; ++r) {
    const double* arow = a.row(i0 + r);
    double s = accumulate ? c.row(i0 + r)[j] : 0.0;
    for (std::size_t p = 0; p < k; ++p) s = std::fma(arow[p], b.row(p)[j], s);
    c.row(i0 + r)[j] = s;
  }
}

template <int ROWS>
inline void narrow_columns(const ConstMatrixView& a, const ConstMatrixView& b, const MatrixView& c,
                           std::size_t i0, std::size_t j, bool accumulate) {
  const std::size_t n = b.cols;
  for (; j + 4 <= n; j += 4) tile_4<ROWS>(a, b, c, i0, j, accumulate);
  for (; j < n; ++j) tile_1<ROWS>(a, b, c, i0, j, accumulate);
}

constexpr std::size_t kRowBlock = 6;

void gemm_avx2(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate) {
  const std::size_t m = a.rows;
  const std::size_t k = a.cols;
  const std::size_t n = b.cols;
  thread_local std::vector<double> panel;
  panel.resize(8 * k);
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    for (std::size_t p = 0; p < k; ++p) {
      const double* src = b.row(p) + j;
      _mm256_storeu_pd(panel.data() + 8 * p, _mm256_loadu_pd(src));
      _mm256_storeu_pd(panel.data() + 8 * p + 4, _mm256_loadu_pd(src + 4));
    }
    const double* bp = panel.data();
    std::size_t i = 0;
    for (; i + kRowBlock <= m; i += kRowBlock) tile_8<6>(a, bp, c, i, j, accumulate);
    switch (m - i) {
      case 5: tile_8<5>(a, bp, c, i, j, accumulate); break;
      case 4: tile_8<4>(a, bp, c, i, j, accumulate); break;
      case 3: tile_8<3>(a, bp, c, i, j, accumulate); break;
      case 2: tile_8<2>(a, bp, c, i, j, accumulate); break;
      case 1: tile_8<1>(a, bp, c, i, j, accumulate); break;
      default: break;
    }
  }
  if (j == n) return;
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) narrow_columns<4>(a, b, c, i, j, accumulate);
  switch (m - i) {
    case 3: narrow_columns<3>(a, b, c, i, j, accumulate); break;
    case 2: narrow_columns<2>(a, b, c, i, j, accumulate); break;
    case 1: narrow_columns<1>(a, b, c, i, j, accumulate); break;
    default: break;
  }
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  const __m256d acc = _mm256_add_pd(acc0, acc1);
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  double s = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{gemm_avx2, axpy_avx2, dot_avx2};
  return table;
}

}  // namespace spe::simd::detail
