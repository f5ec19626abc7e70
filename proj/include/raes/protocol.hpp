#pragma once

#include <cstdint>
#include <vector>

#include "raes/adversary.hpp"
#include "raes/graph.hpp"
#include "raes/metrics.hpp"
#include "raes/params.hpp"
#include "raes/rng.hpp"

namespace raes {

struct PhaseOutcome {
  std::vector<NodeId> refreshed;
  std::uint64_t reconnect_requests = 0;
  std::uint64_t edges_added = 0;
  std::uint64_t edges_dropped_adjust = 0;
  std::size_t nodes_below_d_after = 0;   // the "unlucky" count diagnostic
  std::size_t nodes_above_cap_after = 0; // zero at the end of every full round
};

struct RoundReport {
  std::int64_t round = 0;
  std::size_t churn_removed = 0;
  std::size_t churn_added = 0;
  PhaseOutcome phases;
  MetricsRecord metrics;       // degree stats always; spectral fields when sampled
  bool metrics_sampled = false;
};

// Maintenance phase 1: each node whose degree (at phase start) lies in
// [d, delta_cap] independently drops all neighbors with probability
// refresh_prob. Returns the refreshing set, ascending.
std::vector<NodeId> phase_refresh(OverlayGraph& g, const ProtocolParams& params, Rng& rng);

struct ReconnectStats {
  std::uint64_t requests = 0;     // sum of start-degree deficits
  std::uint64_t edges_added = 0;  // may be lower when a candidate pool runs dry
};

// Reconnection: nodes below d at phase start (processed in ascending id
// order) each request d - d_start new neighbors, sampled uniformly from the
// alive set minus themselves and their current neighbors. Afterwards every
// node of the deficient set has degree >= d.
ReconnectStats phase_reconnect(OverlayGraph& g, const ProtocolParams& params, Rng& rng);

// Degree adjustment: nodes above delta_cap at phase start drop uniformly
// chosen incident edges down to the cap (clamped if concurrent drops already
// shrank them). Returns the number of edges dropped. Afterwards no alive
// node exceeds delta_cap.
std::uint64_t phase_adjust(OverlayGraph& g, const ProtocolParams& params, Rng& rng);

struct BootstrapResult {
  OverlayGraph graph;
  int rounds_used = 0;
  bool converged = false;
};

// Builds the initial overlay from n isolated nodes by alternating
// reconnection and adjustment until every degree lies in [d, delta_cap].
// Running past bootstrap_rounds_max is reported, not thrown.
BootstrapResult run_bootstrap(const ProtocolParams& params, Rng& rng);

// One maintenance round: apply churn, then refresh / reconnect / adjust,
// advance the round counter and the below-d streaks. The churn event must be
// valid for the graph's alive set, else ContractViolation.
RoundReport run_maintenance_round(OverlayGraph& g, const ChurnEvent& churn,
                                  const ProtocolParams& params, Rng& rng);

}  // namespace raes
