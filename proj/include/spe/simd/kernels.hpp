#pragma once

// Dense double-precision kernels used by the network and encoders.
//
// Every kernel has a portable scalar reference implementation and, where the
// build target allows it, an AVX2+FMA (x86-64) or NEON (aarch64) variant. The
// variant is picked once at startup from the CPU's capabilities; the
// SPE_ISA environment variable ("scalar", "avx2", "neon") overrides it.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace spe::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

// True when this build contains the variant and the CPU can run it.
bool isa_available(Isa isa);

// Best available variant on this machine.
Isa detect_isa();

Isa active_isa();

// Throws std::invalid_argument if the variant is not available.
void set_active_isa(Isa isa);

std::vector<Isa> available_isas();

// Row-major views with an explicit row stride.
struct ConstMatrixView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;

  const double* row(std::size_t r) const { return data + r * stride; }
};

struct MatrixView {
  double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;

  double* row(std::size_t r) const { return data + r * stride; }
  operator ConstMatrixView() const { return {data, rows, cols, stride}; }
};

inline ConstMatrixView const_view(std::span<const double> storage, std::size_t rows,
                                  std::size_t cols) {
  return {storage.data(), rows, cols, cols};
}

inline MatrixView mutable_view(std::span<double> storage, std::size_t rows, std::size_t cols) {
  return {storage.data(), rows, cols, cols};
}

// c = a * b            (accumulate == false)
// c += a * b           (accumulate == true)
// Shapes: a is m x k, b is k x n, c is m x n. Throws on mismatch.
void gemm(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> x, std::span<const double> y);

// dst (cols x rows) = transpose(src (rows x cols)). Not ISA specific.
void transpose(ConstMatrixView src, MatrixView dst);

namespace detail {

// Per-ISA entry points. Shapes are validated by the dispatching wrappers.
using GemmFn = void (*)(ConstMatrixView, ConstMatrixView, MatrixView, bool);
using AxpyFn = void (*)(double, const double*, double*, std::size_t);
using DotFn = double (*)(const double*, const double*, std::size_t);

struct KernelTable {
  GemmFn gemm;
  AxpyFn axpy;
  DotFn dot;
};

const KernelTable& scalar_kernels();
#if defined(SPE_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif
#if defined(SPE_HAVE_NEON)
const KernelTable& neon_kernels();
#endif

}  // namespace detail

}  // namespace spe::simd
