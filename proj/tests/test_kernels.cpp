#include "xmkt/simd/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

namespace xmkt {
namespace {

std::vector<const simd::KernelTable*> variants() {
  std::vector<const simd::KernelTable*> v{&simd::scalar_kernels()};
  if (const auto* a = simd::avx2_kernels()) v.push_back(a);
  return v;
}

TEST(Kernels, ActiveIsOneOfTheVariants) {
  const auto& a = simd::active_kernels();
  bool found = false;
  for (const auto* k : variants()) found |= k->name == a.name;
  EXPECT_TRUE(found);
}

TEST(Kernels, MomentsMatchNaiveAcrossTails) {
  std::mt19937_64 eng(1);
  std::normal_distribution<double> N(0.3, 2.0);
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 250u, 251u}) {
    std::vector<double> x(n);
    for (auto& v : x) v = N(eng);
    double mean = 0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    for (const auto* k : variants()) {
      const auto m = k->moments(x.data(), n);
      EXPECT_NEAR(m.mean, mean, 1e-14 * (1 + std::abs(mean))) << k->name << " n=" << n;
      EXPECT_NEAR(m.centered_ss, ss, 1e-12 * (1 + ss)) << k->name << " n=" << n;
    }
  }
}

TEST(Kernels, CenterIsExact) {
  std::vector<double> x(37);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * static_cast<double>(i);
  for (const auto* k : variants()) {
    std::vector<double> out(x.size());
    k->center(x.data(), x.size(), 0.7, out.data());
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(out[i], x[i] - 0.7);
  }
}

TEST(Kernels, CrossVariantsAgree) {
  std::mt19937_64 eng(2);
  std::normal_distribution<double> N;
  for (std::size_t n : {3u, 9u, 250u}) {
    for (std::size_t ny : {1u, 3u, 5u}) {
      for (std::size_t nx : {1u, 4u, 7u}) {
        const std::size_t ldy = n + 1, ldx = n + 3, ldo = nx + 2;
        std::vector<double> ys(ny * ldy), xs(nx * ldx);
        for (auto& v : ys) v = N(eng);
        for (auto& v : xs) v = N(eng);
        std::vector<double> naive(ny * ldo, 0.0);
        for (std::size_t a = 0; a < ny; ++a)
          for (std::size_t b = 0; b < nx; ++b)
            for (std::size_t i = 0; i < n; ++i) naive[a * ldo + b] += ys[a * ldy + i] * xs[b * ldx + i];
        for (const auto* k : variants()) {
          std::vector<double> out(ny * ldo, -7.0);
          k->cross(ys.data(), ldy, ny, xs.data(), ldx, nx, n, out.data(), ldo);
          for (std::size_t a = 0; a < ny; ++a) {
            for (std::size_t b = 0; b < nx; ++b)
              EXPECT_NEAR(out[a * ldo + b], naive[a * ldo + b], 1e-12 * (1.0 + std::sqrt(double(n)))) << k->name;
            for (std::size_t b = nx; b < ldo; ++b) EXPECT_EQ(out[a * ldo + b], -7.0) << "padding touched";
          }
        }
      }
    }
  }
}

}  // namespace
}  // namespace xmkt
