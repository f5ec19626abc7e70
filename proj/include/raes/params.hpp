#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>

#include "raes/errors.hpp"

namespace raes {

inline int ceil_log2(std::uint64_t n) {
  if (n < 2) throw ConfigError("ceil_log2: n must be >= 2");
  return std::bit_width(n - 1);
}

// Integer power, saturating at uint64 max for absurd exponents.
inline std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (base != 0 && r > UINT64_MAX / base) return UINT64_MAX;
    r *= base;
  }
  return r;
}

// Default per-round churn volume: floor(n / ceil(log2 n)^k).
inline std::size_t auto_churn_rate(std::uint64_t n, int k) {
  const std::uint64_t denom = ipow(static_cast<std::uint64_t>(ceil_log2(n)), k);
  return static_cast<std::size_t>(n / denom);
}

// Run-wide protocol parameters: stable size n, degree floor d, slack c with
// cap delta_cap = floor(c*d), polylog exponent k, bootstrap budget B, and the
// per-round neighbor-refresh probability.
struct ProtocolParams {
  std::uint64_t n = 0;
  int d = 0;
  double c = 0.0;
  int delta_cap = 0;
  int k = 1;
  int bootstrap_rounds_max = 0;
  double refresh_prob = 0.0;

  static ProtocolParams make(std::uint64_t n, int d, double c, int k,
                             std::optional<double> refresh_prob = {},
                             std::optional<int> bootstrap_rounds_max = {}) {
    if (n < 2) throw ConfigError("params: n must be >= 2");
    if (d < 1 || static_cast<std::uint64_t>(d) >= n)
      throw ConfigError("params: d must satisfy 1 <= d <= n-1");
    if (!(c > 1.0)) throw ConfigError("params: c must be > 1");
    if (k < 1) throw ConfigError("params: k must be >= 1");
    ProtocolParams p;
    p.n = n;
    p.d = d;
    p.c = c;
    // c is a human-entered rational; the epsilon keeps 2.9*10 from flooring to 28.
    p.delta_cap = static_cast<int>(std::floor(c * d + 1e-9));
    if (p.delta_cap <= d) throw ConfigError("params: floor(c*d) must exceed d");
    if (static_cast<std::uint64_t>(p.delta_cap) >= n)
      throw ConfigError("params: floor(c*d) must be < n");
    p.k = k;
    p.bootstrap_rounds_max = bootstrap_rounds_max.value_or(10 * ceil_log2(n));
    if (p.bootstrap_rounds_max < 1) throw ConfigError("params: bootstrap budget must be >= 1");
    const double denom = static_cast<double>(ipow(static_cast<std::uint64_t>(ceil_log2(n)), k));
    p.refresh_prob = refresh_prob.value_or(1.0 / denom);
    if (p.refresh_prob < 0.0 || p.refresh_prob > 1.0)
      throw ConfigError("params: refresh_prob must be in [0,1]");
    return p;
  }
};

}  // namespace raes
