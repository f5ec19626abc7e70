#include "raes/protocol.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "raes/errors.hpp"

namespace raes {

namespace {

// min/max/mean/below/above in one pass; cheap enough to run every round.
void fill_degree_metrics(const OverlayGraph& g, const ProtocolParams& params, MetricsRecord& m,
                         std::size_t& above_cap) {
  m.n_alive = g.node_count();
  above_cap = 0;
  if (m.n_alive == 0) return;
  int min_deg = std::numeric_limits<int>::max();
  int max_deg = 0;
  std::size_t total = 0;
  std::size_t below = 0;
  for (NodeId id : g.alive_ids()) {
    const int deg = static_cast<int>(g.degree(id));
    min_deg = std::min(min_deg, deg);
    max_deg = std::max(max_deg, deg);
    total += static_cast<std::size_t>(deg);
    if (deg < params.d) ++below;
    if (deg > params.delta_cap) ++above_cap;
  }
  m.min_deg = min_deg;
  m.max_deg = max_deg;
  m.mean_deg = static_cast<double>(total) / static_cast<double>(m.n_alive);
  m.below_d = below;
}

void validate_churn(const OverlayGraph& g, const ChurnEvent& ev) {
  if (ev.removed.size() != ev.added.size())
    throw ContractViolation("churn: |removed| != |added| (stable-size model)");
  for (std::size_t i = 0; i < ev.removed.size(); ++i) {
    if (i > 0 && !(ev.removed[i - 1] < ev.removed[i]))
      throw ContractViolation("churn: removed ids not strictly ascending");
    if (!g.alive(ev.removed[i]))
      throw ContractViolation("churn: removed id " + std::to_string(ev.removed[i].v) +
                              " is not alive");
  }
  for (std::size_t i = 0; i < ev.added.size(); ++i) {
    if (i > 0 && !(ev.added[i - 1] < ev.added[i]))
      throw ContractViolation("churn: added ids not strictly ascending");
    if (g.id_used(ev.added[i]))
      throw ContractViolation("churn: added id " + std::to_string(ev.added[i].v) +
                              " was already used");
  }
  std::vector<char> covered(ev.added.size(), 0);
  std::vector<std::pair<NodeId, NodeId>> seen_pairs(ev.attachments.begin(), ev.attachments.end());
  std::sort(seen_pairs.begin(), seen_pairs.end());
  if (std::adjacent_find(seen_pairs.begin(), seen_pairs.end()) != seen_pairs.end())
    throw ContractViolation("churn: duplicate attachment pair");
  for (const auto& [arrival, host] : ev.attachments) {
    const auto it = std::lower_bound(ev.added.begin(), ev.added.end(), arrival);
    if (it == ev.added.end() || *it != arrival)
      throw ContractViolation("churn: attachment for a node that is not arriving");
    covered[static_cast<std::size_t>(it - ev.added.begin())] = 1;
    if (!g.alive(host) || std::binary_search(ev.removed.begin(), ev.removed.end(), host))
      throw ContractViolation("churn: attachment host " + std::to_string(host.v) +
                              " is not a surviving pre-existing node");
  }
  for (std::size_t i = 0; i < covered.size(); ++i)
    if (!covered[i])
      throw ContractViolation("churn: arrival " + std::to_string(ev.added[i].v) +
                              " has no attachment edge");
}

}  // namespace

std::vector<NodeId> phase_refresh(OverlayGraph& g, const ProtocolParams& params, Rng& rng) {
  std::vector<NodeId> chosen;
  if (params.refresh_prob <= 0.0) return chosen;
  // Eligibility is fixed by start-of-phase degrees; nothing mutates during
  // the scan, so the live degree is the start degree.
  for (NodeId u : g.alive_ids()) {
    const auto deg = static_cast<int>(g.degree(u));
    if (deg >= params.d && deg <= params.delta_cap && rng.bernoulli(params.refresh_prob))
      chosen.push_back(u);
  }
  std::vector<NodeId> nbrs;
  for (NodeId u : chosen) {
    nbrs.assign(g.neighbors(u).begin(), g.neighbors(u).end());
    for (NodeId w : nbrs) g.remove_edge(u, w);
  }
  return chosen;
}

ReconnectStats phase_reconnect(OverlayGraph& g, const ProtocolParams& params, Rng& rng) {
  if (g.node_count() < static_cast<std::size_t>(params.d) + 1)
    throw ConfigError("phase_reconnect: population smaller than d+1, cannot reach degree d");

  std::vector<std::pair<NodeId, int>> deficient;  // (node, start degree), ascending ids
  for (NodeId u : g.alive_ids()) {
    const auto deg = static_cast<int>(g.degree(u));
    if (deg < params.d) deficient.emplace_back(u, deg);
  }

  ReconnectStats st;
  std::vector<NodeId> exclude;
  for (const auto& [u, start_deg] : deficient) {
    const int need = params.d - start_deg;
    st.requests += static_cast<std::uint64_t>(need);
    // Exclude self and *current* neighbors: requests received since phase
    // start shrink the candidate pool but not the request count.
    const auto nbrs = g.neighbors(u);
    exclude.assign(nbrs.begin(), nbrs.end());
    exclude.insert(std::lower_bound(exclude.begin(), exclude.end(), u), u);
    const std::size_t avail = g.node_count() - exclude.size();
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(need), avail);
    for (NodeId v : g.sample_uniform(take, exclude, rng)) {
      if (!g.add_edge(u, v))
        throw ContractViolation("phase_reconnect: sampled an already-present edge");
      ++st.edges_added;
    }
  }
  return st;
}

std::uint64_t phase_adjust(OverlayGraph& g, const ProtocolParams& params, Rng& rng) {
  std::vector<std::pair<NodeId, int>> over;  // (node, start degree), ascending ids
  for (NodeId u : g.alive_ids()) {
    const auto deg = static_cast<int>(g.degree(u));
    if (deg > params.delta_cap) over.emplace_back(u, deg);
  }

  std::uint64_t dropped = 0;
  std::vector<NodeId> nbrs;
  for (const auto& [u, start_deg] : over) {
    const int cur = static_cast<int>(g.degree(u));
    // Earlier-processed nodes may have dropped edges to u already; never go
    // below the cap, never drop more than we have.
    const int excess = std::min({start_deg - params.delta_cap, cur - params.delta_cap, cur});
    if (excess <= 0) continue;
    nbrs.assign(g.neighbors(u).begin(), g.neighbors(u).end());
    for (int i = 0; i < excess; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) + rng.below(nbrs.size() - static_cast<std::size_t>(i));
      std::swap(nbrs[i], nbrs[j]);
      g.remove_edge(u, nbrs[i]);
      ++dropped;
    }
  }
  return dropped;
}

BootstrapResult run_bootstrap(const ProtocolParams& params, Rng& rng) {
  BootstrapResult res;
  for (std::uint64_t i = 0; i < params.n; ++i) res.graph.add_node(NodeId{i}, 0);
  while (res.rounds_used < params.bootstrap_rounds_max) {
    phase_reconnect(res.graph, params, rng);
    phase_adjust(res.graph, params, rng);
    res.graph.advance_round();
    ++res.rounds_used;
    res.graph.update_streaks(params.d);
    if (res.graph.all_degrees_within(params.d, params.delta_cap)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

RoundReport run_maintenance_round(OverlayGraph& g, const ChurnEvent& churn,
                                  const ProtocolParams& params, Rng& rng) {
  validate_churn(g, churn);
  const std::int64_t processing_round = g.round() + 1;
  for (NodeId r : churn.removed) g.remove_node(r);
  for (NodeId a : churn.added) g.add_node(a, processing_round);
  for (const auto& [arrival, host] : churn.attachments)
    if (!g.add_edge(arrival, host))
      throw ContractViolation("churn: attachment edge already present");

  RoundReport rep;
  rep.phases.refreshed = phase_refresh(g, params, rng);
  const ReconnectStats rec = phase_reconnect(g, params, rng);
  rep.phases.reconnect_requests = rec.requests;
  rep.phases.edges_added = rec.edges_added;
  rep.phases.edges_dropped_adjust = phase_adjust(g, params, rng);

  g.advance_round();
  const std::int64_t max_streak = g.update_streaks(params.d);

  if (g.node_count() != params.n)
    throw ContractViolation("churn: population size drifted from n after round " +
                            std::to_string(g.round()));

  rep.round = g.round();
  rep.churn_removed = churn.removed.size();
  rep.churn_added = churn.added.size();
  rep.metrics.round = g.round();
  rep.metrics.max_below_d_streak = max_streak;
  fill_degree_metrics(g, params, rep.metrics, rep.phases.nodes_above_cap_after);
  rep.phases.nodes_below_d_after = rep.metrics.below_d;
  return rep;
}

}  // namespace raes
