#pragma once

#include <cstddef>
#include <cstdint>

// Vector kernels behind the spectral solver. Each has a scalar reference
// implementation and SIMD variants; one lane is picked at startup from CPU
// features (override with RAES_SIM_SIMD=scalar). The lanes agree up to
// floating-point reassociation and are equivalence-tested against scalar.

namespace raes::simd {

enum class Lane { scalar, avx2, neon };

Lane active_lane();
const char* lane_name(Lane lane);

double dot(const double* x, const double* y, std::size_t n);
// y += a*x
void axpy(double a, const double* x, double* y, std::size_t n);
// x *= a
void scal(double a, double* x, std::size_t n);
// out = a .* b
void mul(const double* a, const double* b, double* out, std::size_t n);
// out = x + w .* z
void mul_add(const double* x, const double* w, const double* z, double* out, std::size_t n);
// out[i] = sum of x[cols[j]] over row i of a CSR pattern with unit weights
void spmv_unit(const std::uint32_t* offsets, const std::uint32_t* cols, std::size_t n,
               const double* x, double* out);

namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void mul_add(const double* x, const double* w, const double* z, double* out, std::size_t n);
void spmv_unit(const std::uint32_t* offsets, const std::uint32_t* cols, std::size_t n,
               const double* x, double* out);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void mul_add(const double* x, const double* w, const double* z, double* out, std::size_t n);
void spmv_unit(const std::uint32_t* offsets, const std::uint32_t* cols, std::size_t n,
               const double* x, double* out);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void mul_add(const double* x, const double* w, const double* z, double* out, std::size_t n);
void spmv_unit(const std::uint32_t* offsets, const std::uint32_t* cols, std::size_t n,
               const double* x, double* out);
}  // namespace neon
#endif

}  // namespace raes::simd
