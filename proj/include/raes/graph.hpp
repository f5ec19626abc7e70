#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "raes/rng.hpp"

namespace raes {

// Opaque node identity. Ids are allocated from a monotone 64-bit counter and
// are never reused within a run.
struct NodeId {
  std::uint64_t v = 0;
  friend constexpr auto operator<=>(const NodeId&, const NodeId&) = default;
};

inline std::ostream& operator<<(std::ostream& os, NodeId id) { return os << id.v; }

struct NodeRecord {
  std::int64_t join_round = 0;
  // Start of the current degree-deficient stretch; present iff degree < d at
  // the last streak update.
  std::optional<std::int64_t> below_d_since;
  std::vector<NodeId> adj;  // sorted ascending
  std::size_t dense_pos = 0;
};

// Immutable CSR copy of the overlay at a round boundary. Node slots are
// ordered by ascending id; rows hold neighbor *indices*, sorted.
class Snapshot {
 public:
  Snapshot() = default;
  Snapshot(std::int64_t round, std::vector<NodeId> ids, std::vector<std::int64_t> join_rounds,
           std::vector<std::uint32_t> offsets, std::vector<std::uint32_t> cols)
      : round_(round),
        ids_(std::move(ids)),
        join_rounds_(std::move(join_rounds)),
        offsets_(std::move(offsets)),
        cols_(std::move(cols)) {}

  std::size_t size() const { return ids_.size(); }
  std::size_t edge_count() const { return cols_.size() / 2; }
  std::int64_t round() const { return round_; }

  NodeId id_at(std::size_t i) const { return ids_[i]; }
  std::int64_t join_round_at(std::size_t i) const { return join_rounds_[i]; }
  std::size_t degree_at(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }

  std::span<const std::uint32_t> row(std::size_t i) const {
    return {cols_.data() + offsets_[i], cols_.data() + offsets_[i + 1]};
  }
  std::span<const std::uint32_t> offsets() const { return offsets_; }
  std::span<const std::uint32_t> cols() const { return cols_; }
  std::span<const NodeId> ids() const { return ids_; }

  std::optional<std::size_t> index_of(NodeId id) const;

  // Same node set and same adjacency; round and join data are not compared.
  bool structurally_equal(const Snapshot& other) const {
    return ids_ == other.ids_ && offsets_ == other.offsets_ && cols_ == other.cols_;
  }

 private:
  std::int64_t round_ = 0;
  std::vector<NodeId> ids_;
  std::vector<std::int64_t> join_rounds_;
  std::vector<std::uint32_t> offsets_{0};
  std::vector<std::uint32_t> cols_;
};

// Builds a snapshot from raw undirected edges (plus optional isolated nodes).
// Duplicate edges collapse; self loops are rejected. Used by tests and the
// edge-list CLI path.
Snapshot make_snapshot(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& edges,
                       const std::vector<std::uint64_t>& isolated = {});

// The evolving overlay: node registry plus undirected simple adjacency.
// Single writer; snapshots are immutable values safe to share.
class OverlayGraph {
 public:
  OverlayGraph() = default;

  // id must be fresh (never used in this graph). The new node starts with an
  // empty neighborhood and an open below-d streak.
  void add_node(NodeId id, std::int64_t round);

  // Removes the node and all incident edges; returns how many edges went.
  std::size_t remove_node(NodeId id);

  // Inserts {u,v} if u != v and the edge is absent; returns false otherwise
  // with no mutation. Dead endpoints are a contract violation.
  bool add_edge(NodeId u, NodeId v);
  bool remove_edge(NodeId u, NodeId v);

  bool alive(NodeId id) const { return records_.count(id.v) != 0; }
  bool id_used(NodeId id) const { return alive(id) || retired_.count(id.v) != 0; }
  std::size_t degree(NodeId id) const;
  std::span<const NodeId> neighbors(NodeId id) const;
  const NodeRecord& record(NodeId id) const;

  const std::vector<NodeId>& alive_ids() const { return alive_sorted_; }  // ascending
  std::size_t node_count() const { return alive_sorted_.size(); }
  std::size_t edge_count() const { return edges_; }

  std::int64_t round() const { return round_; }
  void advance_round() { ++round_; }

  // `count` distinct ids uniform over alive \ exclude. `exclude` must be
  // sorted ascending. Throws ConfigError when the population is too small.
  std::vector<NodeId> sample_uniform(std::size_t count, std::span<const NodeId> exclude,
                                     Rng& rng) const;

  Snapshot snapshot() const;

  // Opens/extends/clears per-node below-d streaks against the current round;
  // returns the longest streak currently running.
  std::int64_t update_streaks(int d);

  bool all_degrees_within(int lo, int hi) const;

 private:
  std::unordered_map<std::uint64_t, NodeRecord> records_;
  std::vector<NodeId> alive_sorted_;  // ascending, for ordered scans
  std::vector<NodeId> alive_dense_;   // arbitrary order, for O(1) uniform draws
  std::unordered_set<std::uint64_t> retired_;
  std::size_t edges_ = 0;
  std::int64_t round_ = 0;
};

}  // namespace raes

template <>
struct std::hash<raes::NodeId> {
  std::size_t operator()(raes::NodeId id) const noexcept {
    return std::hash<std::uint64_t>{}(id.v);
  }
};
