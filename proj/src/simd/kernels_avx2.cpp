// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "xmkt/simd/kernels.hpp"

namespace xmkt::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

Moments moments_avx2(const double* x, std::size_t n) {
  if (n == 0) return {};
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  const double mean = s / static_cast<double>(n);

  const __m256d m = _mm256_set1_pd(mean);
  acc0 = _mm256_setzero_pd();
  acc1 = _mm256_setzero_pd();
  i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), m);
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), m);
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  double ss = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    ss += d * d;
  }
  return {mean, ss};
}

void center_avx2(const double* x, std::size_t n, double shift, double* out) {
  const __m256d m = _mm256_set1_pd(shift);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), m));
  for (; i < n; ++i) out[i] = x[i] - shift;
}

// 2 x 4 register tile: each x load feeds two FMAs and each y load four.
void tile_2x4(const double* y0, const double* y1, const double* const x[4], std::size_t n, double* out0,
              double* out1) {
  __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd(), c02 = _mm256_setzero_pd(),
          c03 = _mm256_setzero_pd();
  __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd(), c12 = _mm256_setzero_pd(),
          c13 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a0 = _mm256_loadu_pd(y0 + i);
    const __m256d a1 = _mm256_loadu_pd(y1 + i);
    __m256d b = _mm256_loadu_pd(x[0] + i);
    c00 = _mm256_fmadd_pd(a0, b, c00);
    c10 = _mm256_fmadd_pd(a1, b, c10);
    b = _mm256_loadu_pd(x[1] + i);
    c01 = _mm256_fmadd_pd(a0, b, c01);
    c11 = _mm256_fmadd_pd(a1, b, c11);
    b = _mm256_loadu_pd(x[2] + i);
    c02 = _mm256_fmadd_pd(a0, b, c02);
    c12 = _mm256_fmadd_pd(a1, b, c12);
    b = _mm256_loadu_pd(x[3] + i);
    c03 = _mm256_fmadd_pd(a0, b, c03);
    c13 = _mm256_fmadd_pd(a1, b, c13);
  }
  double r0[4] = {hsum(c00), hsum(c01), hsum(c02), hsum(c03)};
  double r1[4] = {hsum(c10), hsum(c11), hsum(c12), hsum(c13)};
  for (; i < n; ++i) {
    for (int k = 0; k < 4; ++k) {
      r0[k] += y0[i] * x[k][i];
      r1[k] += y1[i] * x[k][i];
    }
  }
  for (int k = 0; k < 4; ++k) {
    out0[k] = r0[k];
    out1[k] = r1[k];
  }
}

double dot_avx2(const double* y, const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += y[i] * x[i];
  return s;
}

void cross_avx2(const double* ys, std::size_t ldy, std::size_t ny, const double* xs, std::size_t ldx,
                std::size_t nx, std::size_t n, double* out, std::size_t ldo) {
  std::size_t a = 0;
  for (; a + 2 <= ny; a += 2) {
    const double* y0 = ys + a * ldy;
    const double* y1 = y0 + ldy;
    std::size_t b = 0;
    for (; b + 4 <= nx; b += 4) {
      const double* x[4] = {xs + b * ldx, xs + (b + 1) * ldx, xs + (b + 2) * ldx, xs + (b + 3) * ldx};
      tile_2x4(y0, y1, x, n, out + a * ldo + b, out + (a + 1) * ldo + b);
    }
    for (; b < nx; ++b) {
      out[a * ldo + b] = dot_avx2(y0, xs + b * ldx, n);
      out[(a + 1) * ldo + b] = dot_avx2(y1, xs + b * ldx, n);
    }
  }
  for (; a < ny; ++a) {
    for (std::size_t b = 0; b < nx; ++b) out[a * ldo + b] = dot_avx2(ys + a * ldy, xs + b * ldx, n);
  }
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{"avx2", &moments_avx2, &center_avx2, &cross_avx2};
  return table;
}

}  // namespace xmkt::simd
