#include "raes/metrics.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <vector>

#include "raes/errors.hpp"
#include "raes/rng.hpp"
#include "raes/simd/kernels.hpp"

namespace raes::metrics {

namespace {

// {component count, largest component size}
std::pair<std::size_t, std::size_t> component_scan(const Snapshot& s) {
  const std::size_t n = s.size();
  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> stack;
  std::size_t count = 0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (seen[i]) continue;
    ++count;
    stack.assign(1, static_cast<std::uint32_t>(i));
    seen[i] = 1;
    std::size_t sz = 0;
    while (!stack.empty()) {
      const std::uint32_t u = stack.back();
      stack.pop_back();
      ++sz;
      for (std::uint32_t w : s.row(u)) {
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    largest = std::max(largest, sz);
  }
  return {count, largest};
}

// Applies B = 2I - L = I + D^{-1/2} A D^{-1/2} through the SIMD kernels.
struct SpectralOperator {
  explicit SpectralOperator(const Snapshot& snap) : s(snap) {
    const std::size_t n = snap.size();
    inv_sqrt_deg.resize(n);
    scaled.resize(n);
    gathered.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t deg = snap.degree_at(i);
      inv_sqrt_deg[i] = deg ? 1.0 / std::sqrt(static_cast<double>(deg)) : 0.0;
    }
  }

  void apply(const double* x, double* y) const {
    const std::size_t n = s.size();
    simd::mul(x, inv_sqrt_deg.data(), scaled.data(), n);
    simd::spmv_unit(s.offsets().data(), s.cols().data(), n, scaled.data(), gathered.data());
    simd::mul_add(x, inv_sqrt_deg.data(), gathered.data(), y, n);
  }

  const Snapshot& s;
  std::vector<double> inv_sqrt_deg;
  mutable std::vector<double> scaled;
  mutable std::vector<double> gathered;
};

// Largest eigenvalue of the symmetric tridiagonal T(alpha, beta) of order m,
// by Sturm-count bisection inside the Gershgorin interval.
double tridiag_max_eig(const std::vector<double>& alpha, const std::vector<double>& beta, int m) {
  double lo = alpha[0];
  double hi = alpha[0];
  for (int i = 0; i < m; ++i) {
    const double r = (i > 0 ? std::abs(beta[i - 1]) : 0.0) + (i < m - 1 ? std::abs(beta[i]) : 0.0);
    lo = std::min(lo, alpha[i] - r);
    hi = std::max(hi, alpha[i] + r);
  }
  lo -= 1e-10 * (1.0 + std::abs(lo));
  hi += 1e-10 * (1.0 + std::abs(hi));

  auto count_below = [&](double x) {
    int cnt = 0;
    double d = 1.0;
    for (int i = 0; i < m; ++i) {
      const double off = i > 0 ? beta[i - 1] * beta[i - 1] / d : 0.0;
      d = (alpha[i] - x) - off;
      if (std::abs(d) < 1e-30) d = -1e-30;
      if (d < 0.0) ++cnt;
    }
    return cnt;
  };

  for (int it = 0; it < 120 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count_below(mid) >= m) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Unit eigenvector of T at (numerically exact) eigenvalue theta, by inverse
// iteration with a pivoted tridiagonal LU. Falls back to e_m if the solve
// degenerates, which only makes the residual bound conservative.
std::vector<double> tridiag_top_eigvec(const std::vector<double>& alpha,
                                       const std::vector<double>& beta, int m, double theta) {
  if (m == 1) return {1.0};
  std::vector<double> dl(beta.begin(), beta.begin() + (m - 1));
  std::vector<double> du(beta.begin(), beta.begin() + (m - 1));
  std::vector<double> dd(m);
  std::vector<double> du2(std::max(0, m - 2), 0.0);
  std::vector<char> swapped(m - 1, 0);
  for (int i = 0; i < m; ++i) dd[i] = alpha[i] - theta;

  for (int i = 0; i + 1 < m; ++i) {
    if (std::abs(dd[i]) >= std::abs(dl[i])) {
      if (std::abs(dd[i]) < 1e-300) dd[i] = 1e-300;
      const double fact = dl[i] / dd[i];
      dl[i] = fact;
      dd[i + 1] -= fact * du[i];
    } else {
      swapped[i] = 1;
      const double fact = dd[i] / dl[i];
      dd[i] = dl[i];
      dl[i] = fact;
      const double tmp = du[i];
      du[i] = dd[i + 1];
      dd[i + 1] = tmp - fact * dd[i + 1];
      if (i + 2 < m) {
        du2[i] = du[i + 1];
        du[i + 1] = -fact * du[i + 1];
      }
    }
  }
  if (std::abs(dd[m - 1]) < 1e-300) dd[m - 1] = 1e-300;

  auto solve = [&](std::vector<double>& b) {
    for (int i = 0; i + 1 < m; ++i) {
      if (!swapped[i]) {
        b[i + 1] -= dl[i] * b[i];
      } else {
        const double tmp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = tmp - dl[i] * b[i];
      }
    }
    b[m - 1] /= dd[m - 1];
    b[m - 2] = (b[m - 2] - du[m - 2] * b[m - 1]) / dd[m - 2];
    for (int i = m - 3; i >= 0; --i)
      b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / dd[i];
  };

  std::vector<double> s(m, 1.0 / std::sqrt(static_cast<double>(m)));
  for (int iter = 0; iter < 2; ++iter) {
    solve(s);
    double mx = 0.0;
    for (double x : s) mx = std::max(mx, std::abs(x));
    if (!(mx > 0.0) || !std::isfinite(mx)) {
      s.assign(m, 0.0);
      s[m - 1] = 1.0;
      return s;
    }
    const double inv = 1.0 / mx;
    for (auto& x : s) x *= inv;
  }
  double nrm = 0.0;
  for (double x : s) nrm += x * x;
  nrm = std::sqrt(nrm);
  for (auto& x : s) x /= nrm;
  return s;
}

// Lanczos with full reorthogonalization on B = 2I - L, deflating the known
// kernel direction (sqrt-degree vector; the graph is connected here). The
// top Ritz value converges to 2 - lambda2; the classic bound beta*|s_last|
// controls the eigenvalue error.
double lambda2_lanczos(const Snapshot& snap, double tol) {
  const std::size_t n = snap.size();
  SpectralOperator op(snap);

  std::vector<double> kernel(n);
  for (std::size_t i = 0; i < n; ++i)
    kernel[i] = std::sqrt(static_cast<double>(snap.degree_at(i)));
  {
    const double nrm = std::sqrt(simd::dot(kernel.data(), kernel.data(), n));
    simd::scal(1.0 / nrm, kernel.data(), n);
  }

  const int max_basis = static_cast<int>(std::min<std::size_t>(n - 1, 350));
  long budget = 100000;  // total matvec cap

  Rng rng(0x7261657376326cULL);  // fixed start seed keeps the metric a pure function
  std::vector<double> start(n);
  for (auto& x : start) x = rng.next_double() - 0.5;

  auto prepare_start = [&](std::vector<double>& v) {
    for (int tries = 0; tries < 100; ++tries) {
      const double c = simd::dot(kernel.data(), v.data(), n);
      simd::axpy(-c, kernel.data(), v.data(), n);
      const double nrm = std::sqrt(simd::dot(v.data(), v.data(), n));
      if (nrm > 1e-12) {
        simd::scal(1.0 / nrm, v.data(), n);
        return;
      }
      for (auto& x : v) x = rng.next_double() - 0.5;
    }
    throw EigenSolveError("lambda2: degenerate start vector", 0.0,
                          std::numeric_limits<double>::infinity());
  };

  std::vector<std::vector<double>> basis;
  std::vector<double> alpha, beta;
  std::vector<double> w(n);
  double best_theta = 0.0;
  double best_resid = std::numeric_limits<double>::infinity();

  while (budget > 0) {
    prepare_start(start);
    basis.clear();
    alpha.clear();
    beta.clear();
    basis.push_back(start);

    for (int j = 0; j < max_basis && budget > 0; ++j) {
      op.apply(basis[j].data(), w.data());
      --budget;
      if (j > 0) simd::axpy(-beta[j - 1], basis[j - 1].data(), w.data(), n);
      const double a = simd::dot(basis[j].data(), w.data(), n);
      alpha.push_back(a);
      simd::axpy(-a, basis[j].data(), w.data(), n);

      auto reorth = [&]() {
        const double ck = simd::dot(kernel.data(), w.data(), n);
        simd::axpy(-ck, kernel.data(), w.data(), n);
        for (const auto& q : basis) {
          const double cq = simd::dot(q.data(), w.data(), n);
          simd::axpy(-cq, q.data(), w.data(), n);
        }
      };
      const double pre = std::sqrt(simd::dot(w.data(), w.data(), n));
      reorth();
      double b = std::sqrt(simd::dot(w.data(), w.data(), n));
      if (b < 0.5 * pre) {  // heavy cancellation: one more pass
        reorth();
        b = std::sqrt(simd::dot(w.data(), w.data(), n));
      }

      const int m = j + 1;
      const double theta = tridiag_max_eig(alpha, beta, m);
      const std::vector<double> ritz = tridiag_top_eigvec(alpha, beta, m, theta);
      const double resid = b * std::abs(ritz[m - 1]);
      if (resid < best_resid) {
        best_resid = resid;
        best_theta = theta;
      }
      if (resid <= tol || b <= 1e-13) return std::clamp(2.0 - theta, 0.0, 2.0);

      if (m == max_basis) {
        // basis full: restart from the current Ritz vector
        start.assign(n, 0.0);
        for (int i = 0; i < m; ++i) simd::axpy(ritz[i], basis[i].data(), start.data(), n);
        break;
      }
      beta.push_back(b);
      basis.push_back(w);
      simd::scal(1.0 / b, basis.back().data(), n);
    }
  }
  throw EigenSolveError("lambda2: matvec budget exhausted before tolerance",
                        std::clamp(2.0 - best_theta, 0.0, 2.0), best_resid);
}

}  // namespace

double exact_edge_expansion(const Snapshot& s) {
  const std::size_t n = s.size();
  if (n < 2) throw ConfigError("exact_edge_expansion: need at least 2 nodes");
  if (n > kExactExpansionMaxNodes)
    throw ConfigError("exact_edge_expansion: n > " + std::to_string(kExactExpansionMaxNodes) +
                      ", use the spectral bounds");

  std::array<std::uint32_t, kExactExpansionMaxNodes> adj{};
  for (std::size_t i = 0; i < n; ++i)
    for (std::uint32_t w : s.row(i)) adj[i] |= (1u << w);

  const std::size_t half = n / 2;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const int size = std::popcount(mask);
    if (static_cast<std::size_t>(size) > half) continue;
    int boundary = 0;
    const std::uint32_t outside = ~mask;
    for (std::uint32_t bits = mask; bits; bits &= bits - 1)
      boundary += std::popcount(adj[std::countr_zero(bits)] & outside);
    const double h = static_cast<double>(boundary) / size;
    if (h < best) best = h;
    if (best == 0.0) break;
  }
  return best;
}

double lambda2(const Snapshot& s, double tol) {
  if (s.size() < 2) throw ConfigError("lambda2: need at least 2 nodes");
  if (!(tol > 0.0)) throw ConfigError("lambda2: tol must be positive");
  // Eigenvalue 0 has multiplicity = component count (isolated nodes included).
  if (component_scan(s).first > 1) return 0.0;
  return lambda2_lanczos(s, tol);
}

std::pair<double, double> cheeger_bounds(double lam2, int min_deg, int max_deg) {
  if (!(lam2 >= 0.0) || lam2 > 2.0 + 1e-9)
    throw ConfigError("cheeger_bounds: lam2 outside [0,2]");
  if (min_deg < 1 || max_deg < min_deg) throw ConfigError("cheeger_bounds: bad degree bounds");
  const double capped = std::min(lam2, 2.0);
  return {0.5 * min_deg * capped, max_deg * std::sqrt(2.0 * capped)};
}

Snapshot d_core(const Snapshot& s, int d) {
  if (d < 1) throw ConfigError("d_core: d must be >= 1");
  const std::size_t n = s.size();
  std::vector<std::int64_t> deg(n);
  std::vector<char> dead(n, 0);
  std::vector<std::uint32_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    deg[i] = static_cast<std::int64_t>(s.degree_at(i));
    if (deg[i] < d) {
      dead[i] = 1;
      stack.push_back(static_cast<std::uint32_t>(i));
    }
  }
  while (!stack.empty()) {
    const std::uint32_t u = stack.back();
    stack.pop_back();
    for (std::uint32_t w : s.row(u)) {
      if (!dead[w] && --deg[w] < d) {
        dead[w] = 1;
        stack.push_back(w);
      }
    }
  }

  std::vector<std::uint32_t> newidx(n, UINT32_MAX);
  std::vector<NodeId> ids;
  std::vector<std::int64_t> join_rounds;
  for (std::size_t i = 0; i < n; ++i) {
    if (dead[i]) continue;
    newidx[i] = static_cast<std::uint32_t>(ids.size());
    ids.push_back(s.id_at(i));
    join_rounds.push_back(s.join_round_at(i));
  }
  std::vector<std::uint32_t> offsets(ids.size() + 1, 0);
  std::vector<std::uint32_t> cols;
  std::size_t out = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (dead[i]) continue;
    std::uint32_t row_len = 0;
    for (std::uint32_t w : s.row(i)) {
      if (!dead[w]) {
        cols.push_back(newidx[w]);
        ++row_len;
      }
    }
    offsets[out + 1] = offsets[out] + row_len;
    ++out;
  }
  return Snapshot(s.round(), std::move(ids), std::move(join_rounds), std::move(offsets),
                  std::move(cols));
}

std::pair<std::size_t, double> core_report(const Snapshot& s, const ProtocolParams& params,
                                           double tol) {
  const Snapshot core = d_core(s, params.d);
  if (core.size() < 2) return {core.size(), 0.0};
  return {core.size(), lambda2(core, tol)};
}

DegreeStats degree_stats(const Snapshot& s, int d, int delta_cap) {
  DegreeStats st;
  const std::size_t n = s.size();
  if (n == 0) return st;
  st.min_deg = std::numeric_limits<int>::max();
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int deg = static_cast<int>(s.degree_at(i));
    st.min_deg = std::min(st.min_deg, deg);
    st.max_deg = std::max(st.max_deg, deg);
    total += static_cast<std::size_t>(deg);
    if (deg < d) ++st.below_d;
    if (deg > delta_cap) ++st.above_cap;
  }
  st.mean_deg = static_cast<double>(total) / static_cast<double>(n);
  return st;
}

std::size_t largest_component(const Snapshot& s) { return component_scan(s).second; }

std::size_t component_count(const Snapshot& s) { return component_scan(s).first; }

MetricsRecord measure(const Snapshot& s, const ProtocolParams& params, const MetricsFlags& flags,
                      double tol) {
  MetricsRecord r;
  r.round = s.round();
  r.n_alive = s.size();
  const DegreeStats ds = degree_stats(s, params.d, params.delta_cap);
  r.min_deg = ds.min_deg;
  r.max_deg = ds.max_deg;
  r.mean_deg = ds.mean_deg;
  r.below_d = ds.below_d;

  if (flags.lambda2 && s.size() >= 2) {
    const double l2 = lambda2(s, tol);
    r.lambda2 = l2;
    if (ds.min_deg >= 1) {
      const auto [lo, hi] = cheeger_bounds(l2, ds.min_deg, ds.max_deg);
      r.expansion_lower = lo;
      r.expansion_upper = hi;
    } else {
      // an isolated node forces lambda2 = 0; the bounds collapse with it
      r.expansion_lower = 0.0;
      r.expansion_upper = 0.0;
    }
  }
  if (flags.exact_expansion && s.size() >= 2 && s.size() <= kExactExpansionMaxNodes)
    r.exact_expansion = exact_edge_expansion(s);
  if (flags.core) {
    const auto [size, core_l2] = core_report(s, params, tol);
    r.core_size = size;
    r.core_lambda2 = core_l2;
  }
  if (flags.lcc) r.lcc_size = largest_component(s);
  return r;
}

}  // namespace raes::metrics
