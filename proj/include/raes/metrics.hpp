#pragma once

#include <cstddef>
#include <optional>
#include <utility>

#include "raes/graph.hpp"
#include "raes/params.hpp"

namespace raes {

// Per-round measurement record. Degree statistics are always filled;
// the spectral/enumeration fields are present only when their metric was
// requested (and, for exact expansion, when the snapshot is small enough).
struct MetricsRecord {
  std::int64_t round = 0;
  std::size_t n_alive = 0;
  int min_deg = 0;
  int max_deg = 0;
  double mean_deg = 0.0;
  std::size_t below_d = 0;
  std::int64_t max_below_d_streak = 0;
  std::optional<double> lambda2;
  std::optional<double> expansion_lower;
  std::optional<double> expansion_upper;
  std::optional<double> exact_expansion;
  std::optional<std::size_t> core_size;
  std::optional<double> core_lambda2;
  std::optional<std::size_t> lcc_size;
};

struct MetricsFlags {
  bool lambda2 = true;
  bool core = true;
  bool lcc = true;
  bool exact_expansion = false;
};

namespace metrics {

constexpr double kDefaultTol = 1e-8;
// 2^20 subsets keep the enumeration under a second.
constexpr std::size_t kExactExpansionMaxNodes = 20;

// Exact min over nonempty S, |S| <= n/2, of |boundary(S)| / |S| by subset
// enumeration. Requires 2 <= n <= kExactExpansionMaxNodes.
double exact_edge_expansion(const Snapshot& s);

// Second-smallest eigenvalue of the symmetric normalized Laplacian, to
// absolute tolerance tol. Isolated nodes count as their own components, and
// a disconnected snapshot short-circuits to 0. Throws EigenSolveError if the
// matvec budget runs out.
double lambda2(const Snapshot& s, double tol = kDefaultTol);

// Edge-expansion bounds from the discrete Cheeger inequality:
// lower = min_deg * lam2 / 2, upper = max_deg * sqrt(2 * lam2).
std::pair<double, double> cheeger_bounds(double lam2, int min_deg, int max_deg);

// Iterated k-core with k = d: peel nodes with fewer than d surviving
// neighbors until fixpoint; returns the (possibly empty) induced subgraph.
Snapshot d_core(const Snapshot& s, int d);

// d_core size plus the spectral gap of the core (0 when the core has < 2 nodes).
std::pair<std::size_t, double> core_report(const Snapshot& s, const ProtocolParams& params,
                                           double tol = kDefaultTol);

struct DegreeStats {
  int min_deg = 0;
  int max_deg = 0;
  double mean_deg = 0.0;
  std::size_t below_d = 0;
  std::size_t above_cap = 0;
};
DegreeStats degree_stats(const Snapshot& s, int d, int delta_cap);

std::size_t largest_component(const Snapshot& s);
std::size_t component_count(const Snapshot& s);

// Composes the above per flags. max_below_d_streak is graph-side state and is
// left at 0 for the caller to fill.
MetricsRecord measure(const Snapshot& s, const ProtocolParams& params, const MetricsFlags& flags,
                      double tol = kDefaultTol);

}  // namespace metrics
}  // namespace raes
