// NEON lane for aarch64, where 128-bit NEON is baseline.

#include <arm_neon.h>

#include "raes/simd/kernels.hpp"

namespace raes::simd::neon {

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  for (; i + 2 <= n; i += 2) acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
  double sum = vaddvq_f64(acc0) + vaddvq_f64(acc1);
  for (; i < n; ++i) sum += x[i] * y[i];
  return sum;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void scal(double a, double* x, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_add(const double* x, const double* w, const double* z, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vfmaq_f64(vld1q_f64(x + i), vld1q_f64(w + i), vld1q_f64(z + i)));
  for (; i < n; ++i) out[i] = x[i] + w[i] * z[i];
}

void spmv_unit(const std::uint32_t* offsets, const std::uint32_t* cols, std::size_t n,
               const double* x, double* out) {
  // Gathers are not worth emulating lane by lane here; rows are short.
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::uint32_t k = offsets[i]; k < offsets[i + 1]; ++k) acc += x[cols[k]];
    out[i] = acc;
  }
}

}  // namespace raes::simd::neon
