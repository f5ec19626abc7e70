#include "raes/graph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "raes/errors.hpp"

namespace raes {

namespace {

std::string id_str(NodeId id) { return std::to_string(id.v); }

}  // namespace

std::optional<std::size_t> Snapshot::index_of(NodeId id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

Snapshot make_snapshot(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& edges,
                       const std::vector<std::uint64_t>& isolated) {
  std::map<std::uint64_t, std::set<std::uint64_t>> adj;
  for (auto [u, v] : edges) {
    if (u == v) throw ConfigError("make_snapshot: self loop on node " + std::to_string(u));
    adj[u].insert(v);
    adj[v].insert(u);
  }
  for (std::uint64_t u : isolated) adj.try_emplace(u);

  std::vector<NodeId> ids;
  ids.reserve(adj.size());
  for (const auto& [id, _] : adj) ids.push_back(NodeId{id});

  std::vector<std::int64_t> join_rounds(ids.size(), 0);
  std::vector<std::uint32_t> offsets(ids.size() + 1, 0);
  std::vector<std::uint32_t> cols;
  std::size_t i = 0;
  for (const auto& [id, nbrs] : adj) {
    offsets[i + 1] = offsets[i] + static_cast<std::uint32_t>(nbrs.size());
    for (std::uint64_t w : nbrs) {
      auto it = std::lower_bound(ids.begin(), ids.end(), NodeId{w});
      cols.push_back(static_cast<std::uint32_t>(it - ids.begin()));
    }
    ++i;
  }
  return Snapshot(0, std::move(ids), std::move(join_rounds), std::move(offsets), std::move(cols));
}

void OverlayGraph::add_node(NodeId id, std::int64_t round) {
  if (records_.count(id.v) || retired_.count(id.v))
    throw ContractViolation("add_node: id " + id_str(id) + " already used");
  NodeRecord rec;
  rec.join_round = round;
  rec.below_d_since = round;  // degree 0 is deficient for any d >= 1
  rec.dense_pos = alive_dense_.size();
  records_.emplace(id.v, std::move(rec));
  alive_dense_.push_back(id);
  alive_sorted_.insert(std::lower_bound(alive_sorted_.begin(), alive_sorted_.end(), id), id);
}

std::size_t OverlayGraph::remove_node(NodeId id) {
  auto it = records_.find(id.v);
  if (it == records_.end()) throw ContractViolation("remove_node: unknown id " + id_str(id));
  NodeRecord& rec = it->second;

  const std::size_t cut = rec.adj.size();
  for (NodeId w : rec.adj) {
    auto& wadj = records_.at(w.v).adj;
    wadj.erase(std::lower_bound(wadj.begin(), wadj.end(), id));
  }
  edges_ -= cut;

  const std::size_t pos = rec.dense_pos;
  alive_dense_[pos] = alive_dense_.back();
  records_.at(alive_dense_[pos].v).dense_pos = pos;
  alive_dense_.pop_back();

  alive_sorted_.erase(std::lower_bound(alive_sorted_.begin(), alive_sorted_.end(), id));
  records_.erase(it);
  retired_.insert(id.v);
  return cut;
}

bool OverlayGraph::add_edge(NodeId u, NodeId v) {
  auto iu = records_.find(u.v);
  auto iv = records_.find(v.v);
  if (iu == records_.end() || iv == records_.end())
    throw ContractViolation("add_edge: dead endpoint in {" + id_str(u) + "," + id_str(v) + "}");
  if (u == v) return false;
  auto& ua = iu->second.adj;
  auto upos = std::lower_bound(ua.begin(), ua.end(), v);
  if (upos != ua.end() && *upos == v) return false;
  ua.insert(upos, v);
  auto& va = iv->second.adj;
  va.insert(std::lower_bound(va.begin(), va.end(), u), u);
  ++edges_;
  return true;
}

bool OverlayGraph::remove_edge(NodeId u, NodeId v) {
  auto iu = records_.find(u.v);
  auto iv = records_.find(v.v);
  if (iu == records_.end() || iv == records_.end())
    throw ContractViolation("remove_edge: dead endpoint in {" + id_str(u) + "," + id_str(v) + "}");
  auto& ua = iu->second.adj;
  auto upos = std::lower_bound(ua.begin(), ua.end(), v);
  if (upos == ua.end() || *upos != v) return false;
  ua.erase(upos);
  auto& va = iv->second.adj;
  va.erase(std::lower_bound(va.begin(), va.end(), u));
  --edges_;
  return true;
}

std::size_t OverlayGraph::degree(NodeId id) const { return record(id).adj.size(); }

std::span<const NodeId> OverlayGraph::neighbors(NodeId id) const { return record(id).adj; }

const NodeRecord& OverlayGraph::record(NodeId id) const {
  auto it = records_.find(id.v);
  if (it == records_.end()) throw ContractViolation("record: unknown id " + id_str(id));
  return it->second;
}

std::vector<NodeId> OverlayGraph::sample_uniform(std::size_t count,
                                                 std::span<const NodeId> exclude,
                                                 Rng& rng) const {
  auto excluded = [&](NodeId id) {
    return std::binary_search(exclude.begin(), exclude.end(), id);
  };
  std::size_t excluded_alive = 0;
  for (NodeId e : exclude)
    if (alive(e)) ++excluded_alive;
  const std::size_t avail = alive_dense_.size() - excluded_alive;
  if (count > avail)
    throw ConfigError("sample_uniform: requested " + std::to_string(count) + " of " +
                      std::to_string(avail) + " available nodes (n too small for d?)");
  std::vector<NodeId> out;
  if (count == 0) return out;
  out.reserve(count);

  if (count * 3 >= avail) {
    // Dense request: materialize the candidate pool and take a partial shuffle.
    std::vector<NodeId> pool;
    pool.reserve(avail);
    for (NodeId id : alive_sorted_)
      if (!excluded(id)) pool.push_back(id);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
  } else {
    // Sparse request: rejection against the dense alive array.
    std::vector<NodeId> picked;
    while (out.size() < count) {
      const NodeId cand = alive_dense_[rng.below(alive_dense_.size())];
      if (excluded(cand)) continue;
      auto it = std::lower_bound(picked.begin(), picked.end(), cand);
      if (it != picked.end() && *it == cand) continue;
      picked.insert(it, cand);
      out.push_back(cand);
    }
  }
  return out;
}

Snapshot OverlayGraph::snapshot() const {
  const std::size_t n = alive_sorted_.size();
  std::vector<NodeId> ids = alive_sorted_;
  std::vector<std::int64_t> join_rounds(n);
  std::vector<std::uint32_t> offsets(n + 1, 0);
  std::vector<std::uint32_t> cols;
  cols.reserve(2 * edges_);
  for (std::size_t i = 0; i < n; ++i) {
    const NodeRecord& rec = records_.at(ids[i].v);
    join_rounds[i] = rec.join_round;
    offsets[i + 1] = offsets[i] + static_cast<std::uint32_t>(rec.adj.size());
    for (NodeId w : rec.adj) {
      auto it = std::lower_bound(ids.begin(), ids.end(), w);
      cols.push_back(static_cast<std::uint32_t>(it - ids.begin()));
    }
  }
  return Snapshot(round_, std::move(ids), std::move(join_rounds), std::move(offsets),
                  std::move(cols));
}

std::int64_t OverlayGraph::update_streaks(int d) {
  std::int64_t max_streak = 0;
  for (NodeId id : alive_sorted_) {
    auto& rec = records_.at(id.v);
    if (rec.adj.size() < static_cast<std::size_t>(d)) {
      if (!rec.below_d_since) rec.below_d_since = round_;
      max_streak = std::max(max_streak, round_ - *rec.below_d_since + 1);
    } else {
      rec.below_d_since.reset();
    }
  }
  return max_streak;
}

bool OverlayGraph::all_degrees_within(int lo, int hi) const {
  for (NodeId id : alive_sorted_) {
    const std::size_t deg = records_.at(id.v).adj.size();
    if (deg < static_cast<std::size_t>(lo) || deg > static_cast<std::size_t>(hi)) return false;
  }
  return true;
}

}  // namespace raes
