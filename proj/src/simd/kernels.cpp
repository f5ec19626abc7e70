#include "raes/simd/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace raes::simd {

namespace scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += x[i] * y[i];
  return sum;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_add(const double* x, const double* w, const double* z, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + w[i] * z[i];
}

void spmv_unit(const std::uint32_t* offsets, const std::uint32_t* cols, std::size_t n,
               const double* x, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::uint32_t k = offsets[i]; k < offsets[i + 1]; ++k) acc += x[cols[k]];
    out[i] = acc;
  }
}

}  // namespace scalar

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scal)(double, double*, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  void (*mul_add)(const double*, const double*, const double*, double*, std::size_t);
  void (*spmv_unit)(const std::uint32_t*, const std::uint32_t*, std::size_t, const double*,
                    double*);
  Lane lane;
};

constexpr Table kScalarTable = {scalar::dot,     scalar::axpy,     scalar::scal, scalar::mul,
                                scalar::mul_add, scalar::spmv_unit, Lane::scalar};

Table pick_table() {
  if (const char* force = std::getenv("RAES_SIM_SIMD");
      force && std::string_view(force) == "scalar")
    return kScalarTable;
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return {avx2::dot, avx2::axpy, avx2::scal, avx2::mul, avx2::mul_add, avx2::spmv_unit,
            Lane::avx2};
#endif
#if defined(__aarch64__)
  return {neon::dot, neon::axpy, neon::scal, neon::mul, neon::mul_add, neon::spmv_unit,
          Lane::neon};
#endif
  return kScalarTable;
}

const Table& table() {
  static const Table t = pick_table();
  return t;
}

}  // namespace

Lane active_lane() { return table().lane; }

const char* lane_name(Lane lane) {
  switch (lane) {
    case Lane::scalar: return "scalar";
    case Lane::avx2: return "avx2";
    case Lane::neon: return "neon";
  }
  return "?";
}

double dot(const double* x, const double* y, std::size_t n) { return table().dot(x, y, n); }

void axpy(double a, const double* x, double* y, std::size_t n) { table().axpy(a, x, y, n); }

void scal(double a, double* x, std::size_t n) { table().scal(a, x, n); }

void mul(const double* a, const double* b, double* out, std::size_t n) {
  table().mul(a, b, out, n);
}

void mul_add(const double* x, const double* w, const double* z, double* out, std::size_t n) {
  table().mul_add(x, w, z, out, n);
}

void spmv_unit(const std::uint32_t* offsets, const std::uint32_t* cols, std::size_t n,
               const double* x, double* out) {
  table().spmv_unit(offsets, cols, n, x, out);
}

}  // namespace raes::simd
