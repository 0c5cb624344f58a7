#pragma once

// Data-parallel inner loops of the screening step. Every variant computes the
// same quantities; only the summation order differs, so variants agree to a
// few ulps (see tests/test_kernels.cpp). The variant is chosen once per
// process: the best one the CPU supports, or the one named by the
// XMKT_SIMD environment variable ("scalar", "avx2").

#include <cstddef>
#include <string_view>

namespace xmkt::simd {

struct Moments {
  double mean = 0.0;
  double centered_ss = 0.0;  // sum of (x - mean)^2
};

struct KernelTable {
  std::string_view name;

  /// Two-pass mean and centered sum of squares of x[0..n).
  Moments (*moments)(const double* x, std::size_t n);

  /// out[i] = x[i] - shift.
  void (*center)(const double* x, std::size_t n, double shift, double* out);

  /// Cross products of column blocks:
  ///   out[a * ldo + b] = sum_i ys[a * ldy + i] * xs[b * ldx + i]
  /// for a < ny, b < nx, i < n. Columns are contiguous vectors of length n.
  void (*cross)(const double* ys, std::size_t ldy, std::size_t ny, const double* xs, std::size_t ldx,
                std::size_t nx, std::size_t n, double* out, std::size_t ldo);
};

const KernelTable& scalar_kernels();

/// nullptr when the build has no AVX2 variant or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

/// The variant used by the library.
const KernelTable& active_kernels();

}  // namespace xmkt::simd
