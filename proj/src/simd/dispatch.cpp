#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "spe/simd/kernels.hpp"

namespace spe::simd {
namespace {

const detail::KernelTable& table_for(Isa isa) {
  switch (isa) {
#if defined(SPE_HAVE_AVX2)
    case Isa::avx2: return detail::avx2_kernels();
#endif
#if defined(SPE_HAVE_NEON)
    case Isa::neon: return detail::neon_kernels();
#endif
    default: return detail::scalar_kernels();
  }
}

Isa initial_isa() {
  if (const char* env = std::getenv("SPE_ISA")) {
    const std::string requested(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (requested == isa_name(isa) && isa_available(isa)) return isa;
    }
  }
  return detect_isa();
}

struct ActiveState {
  std::atomic<Isa> isa{initial_isa()};
  std::atomic<const detail::KernelTable*> table{&table_for(isa.load())};
};

ActiveState& state() {
  static ActiveState s;
  return s;
}

const detail::KernelTable& kernels() { return *state().table.load(std::memory_order_relaxed); }

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(SPE_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(SPE_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detect_isa() {
  if (isa_available(Isa::avx2)) return Isa::avx2;
  if (isa_available(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

Isa active_isa() { return state().isa.load(); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("SIMD variant not available: " + std::string(isa_name(isa)));
  }
  state().isa.store(isa);
  state().table.store(&table_for(isa));
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (isa_available(isa)) out.push_back(isa);
  }
  return out;
}

void gemm(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate) {
  if (a.cols != b.rows || c.rows != a.rows || c.cols != b.cols) {
    throw std::invalid_argument("gemm: shape mismatch");
  }
  if (c.rows == 0 || c.cols == 0) return;
  if (a.cols == 0) {
    if (!accumulate) {
      for (std::size_t i = 0; i < c.rows; ++i) {
        for (std::size_t j = 0; j < c.cols; ++j) c.row(i)[j] = 0.0;
      }
    }
    return;
  }
  kernels().gemm(a, b, c, accumulate);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: length mismatch");
  return kernels().dot(x.data(), y.data(), x.size());
}

void transpose(ConstMatrixView src, MatrixView dst) {
  if (dst.rows != src.cols || dst.cols != src.rows) {
    throw std::invalid_argument("transpose: shape mismatch");
  }
  constexpr std::size_t kBlock = 32;
  for (std::size_t i0 = 0; i0 < src.rows; i0 += kBlock) {
    const std::size_t i1 = std::min(src.rows, i0 + kBlock);
    for (std::size_t j0 = 0; j0 < src.cols; j0 += kBlock) {
      const std::size_t j1 = std::min(src.cols, j0 + kBlock);
      for (std::size_t i = i0; i < i1; ++i) {
        const double* s = src.row(i);
        for (std::size_t j = j0; j < j1; ++j) dst.row(j)[i] = s[j];
      }
    }
  }
}

}  // namespace spe::simd
