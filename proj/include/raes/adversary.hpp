#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "raes/graph.hpp"
#include "raes/rng.hpp"

namespace raes {

// One round's adversarial move. Arrivals are fresh ids; every arrival is
// attached to at least one surviving pre-existing host, and no host takes
// more than delta_h attachments in one event.
struct ChurnEvent {
  std::int64_t round = 0;
  std::vector<NodeId> removed;  // sorted ascending
  std::vector<NodeId> added;    // sorted ascending
  std::vector<std::pair<NodeId, NodeId>> attachments;  // (new, host)
};

enum class AdversaryStrategy { silent, uniform, oldest_first, fringe_growth };

const char* strategy_name(AdversaryStrategy s);
AdversaryStrategy strategy_from_name(const std::string& name);

// Oblivious churn generator. It keeps its own ledger of the alive id set
// (it controls all joins and leaves, so the ledger is exact) and draws from
// its own stream; it never sees overlay edges or the protocol's randomness —
// next_churn takes no graph argument by construction.
class Adversary {
 public:
  Adversary(AdversaryStrategy strategy, std::size_t churn_rate, int delta_h,
            int attachments_per_arrival, std::uint64_t initial_n, Rng rng);

  ChurnEvent next_churn(std::int64_t round);

  std::size_t churn_rate() const { return rate_; }
  int delta_h() const { return delta_h_; }
  std::size_t ledger_size() const { return dense_.size(); }
  bool in_ledger(NodeId id) const { return entries_.count(id.v) != 0; }

 private:
  struct Entry {
    std::int64_t join_round = 0;
    bool inserted = false;  // true for nodes this adversary brought in
    std::size_t dense_pos = 0;
    std::size_t group_pos = 0;  // position in fringe_/originals_
  };

  void ledger_add(NodeId id, std::int64_t join_round, bool inserted);
  void ledger_remove(NodeId id);
  std::vector<NodeId> pick_removals();
  void assign_hosts(ChurnEvent& ev);

  AdversaryStrategy strategy_;
  std::size_t rate_;
  int delta_h_;
  int attach_per_;
  Rng rng_;

  std::unordered_map<std::uint64_t, Entry> entries_;
  std::vector<NodeId> dense_;                       // all alive
  std::set<std::pair<std::int64_t, std::uint64_t>> by_age_;  // (join_round, id)
  std::vector<NodeId> fringe_;     // alive nodes this adversary inserted
  std::vector<NodeId> originals_;  // alive nodes from the initial population
  std::uint64_t next_id_;
};

// Convenience factory matching the common call shape: ids 0..n-1 seed the
// ledger, arrivals are allocated from n upward.
Adversary make_adversary(AdversaryStrategy strategy, std::size_t churn_rate, int delta_h,
                         std::uint64_t n, std::uint64_t seed, int attachments_per_arrival = 1);

// The full churn sequence is a pure function of the adversary's own state, so
// it can be generated up front; replaying it must match interleaved execution.
std::vector<ChurnEvent> pregenerate(Adversary adversary, std::int64_t first_round,
                                    std::int64_t rounds);

// JSON-lines replay format: one event per line with keys
// round, removed[], added[], attachments[][2].
void write_churn_jsonl(std::span<const ChurnEvent> events, const std::string& path);
std::vector<ChurnEvent> read_churn_jsonl(const std::string& path);

}  // namespace raes
