#include "xmkt/simd/kernels.hpp"

namespace xmkt::simd {
namespace {

Moments moments_scalar(const double* x, std::size_t n) {
  if (n == 0) return {};
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  const double mean = s / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - mean;
    ss += d * d;
  }
  return {mean, ss};
}

void center_scalar(const double* x, std::size_t n, double shift, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - shift;
}

void cross_scalar(const double* ys, std::size_t ldy, std::size_t ny, const double* xs, std::size_t ldx,
                  std::size_t nx, std::size_t n, double* out, std::size_t ldo) {
  for (std::size_t a = 0; a < ny; ++a) {
    const double* y = ys + a * ldy;
    for (std::size_t b = 0; b < nx; ++b) {
      const double* x = xs + b * ldx;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += y[i] * x[i];
      out[a * ldo + b] = s;
    }
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", &moments_scalar, &center_scalar, &cross_scalar};
  return table;
}

}  // namespace xmkt::simd
