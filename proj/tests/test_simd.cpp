#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "spe/simd/kernels.hpp"

using namespace spe::simd;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Triple loop in long double as the oracle.
std::vector<double> naive_gemm(const std::vector<double>& a, const std::vector<double>& b,
                               const std::vector<double>& c0, std::size_t m, std::size_t k,
                               std::size_t n, bool accumulate) {
  std::vector<double> c(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double s = accumulate ? c0[i * n + j] : 0.0L;
      for (std::size_t p = 0; p < k; ++p) s += static_cast<long double>(a[i * k + p]) * b[p * n + j];
      c[i * n + j] = static_cast<double>(s);
    }
  }
  return c;
}

struct IsaGuard {
  Isa saved = active_isa();
  ~IsaGuard() { set_active_isa(saved); }
};

}  // namespace

TEST_CASE("every available kernel set matches a long-double gemm oracle") {
  IsaGuard guard;
  std::mt19937_64 rng(11);
  const std::size_t shapes[][3] = {{1, 1, 1},   {7, 3, 5},    {6, 8, 8},   {13, 17, 9},
                                   {128, 64, 128}, {5, 130, 3}, {33, 1, 65}, {2, 256, 1}};
  for (Isa isa : available_isas()) {
    set_active_isa(isa);
    for (const auto& s : shapes) {
      const std::size_t m = s[0], k = s[1], n = s[2];
      const auto a = random_vector(m * k, rng);
      const auto b = random_vector(k * n, rng);
      const auto c0 = random_vector(m * n, rng);
      for (bool acc : {false, true}) {
        auto c = c0;
        gemm(const_view(a, m, k), const_view(b, k, n), mutable_view(c, m, n), acc);
        const auto expect = naive_gemm(a, b, c0, m, k, n, acc);
        for (std::size_t i = 0; i < c.size(); ++i) {
          CHECK(std::abs(c[i] - expect[i]) <= 1e-13 * (1.0 + static_cast<double>(k)));
        }
      }
    }
  }
}

TEST_CASE("vector variants agree with the scalar reference") {
  IsaGuard guard;
  std::mt19937_64 rng(12);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 31u, 64u, 1001u}) {
    const auto x = random_vector(n, rng);
    const auto y0 = random_vector(n, rng);
    set_active_isa(Isa::scalar);
    auto y_ref = y0;
    axpy(0.37, x, y_ref);
    const double d_ref = dot(x, y0);
    for (Isa isa : available_isas()) {
      set_active_isa(isa);
      auto y = y0;
      axpy(0.37, x, y);
      for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(y_ref[i]).epsilon(1e-15));
      CHECK(std::abs(dot(x, y0) - d_ref) <= 1e-14 * (1.0 + static_cast<double>(n)));
    }
  }
}

TEST_CASE("gemm honours row strides of sub-views") {
  IsaGuard guard;
  std::mt19937_64 rng(13);
  const auto big_a = random_vector(10 * 12, rng);
  const auto big_b = random_vector(12 * 9, rng);
  for (Isa isa : available_isas()) {
    set_active_isa(isa);
    std::vector<double> big_c(10 * 11, 5.0);
    // 4x6 block of a (stride 12), 6x5 block of b (stride 9), into c (stride 11).
    gemm(ConstMatrixView{big_a.data() + 1, 4, 6, 12}, ConstMatrixView{big_b.data() + 2, 6, 5, 9},
         MatrixView{big_c.data() + 3, 4, 5, 11}, false);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < 6; ++p) s += big_a[i * 12 + 1 + p] * big_b[p * 9 + 2 + j];
        CHECK(big_c[i * 11 + 3 + j] == doctest::Approx(s).epsilon(1e-14));
      }
      CHECK(big_c[i * 11 + 2] == 5.0);
      CHECK(big_c[i * 11 + 8] == 5.0);
    }
  }
}

TEST_CASE("shape mismatches and unavailable variants are rejected") {
  std::vector<double> a(6), b(6), c(4);
  CHECK_THROWS_AS(gemm(const_view(a, 2, 3), const_view(b, 2, 3), mutable_view(c, 2, 2), false),
                  std::invalid_argument);
  std::vector<double> x(3), y(4);
  CHECK_THROWS_AS(axpy(1.0, x, y), std::invalid_argument);
  CHECK_THROWS_AS(dot(x, y), std::invalid_argument);
  CHECK(isa_available(Isa::scalar));
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (!isa_available(isa)) CHECK_THROWS_AS(set_active_isa(isa), std::invalid_argument);
  }
}

TEST_CASE("transpose") {
  std::vector<double> src{1, 2, 3, 4, 5, 6}, dst(6);
  transpose(const_view(src, 2, 3), mutable_view(dst, 3, 2));
  CHECK(dst == std::vector<double>{1, 4, 2, 5, 3, 6});
}
