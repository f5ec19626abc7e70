#include "raes/adversary.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <unordered_map>

#include "raes/errors.hpp"

#include "json.hpp"

namespace raes {

using nlohmann::json;

const char* strategy_name(AdversaryStrategy s) {
  switch (s) {
    case AdversaryStrategy::silent: return "silent";
    case AdversaryStrategy::uniform: return "uniform";
    case AdversaryStrategy::oldest_first: return "oldest_first";
    case AdversaryStrategy::fringe_growth: return "fringe_growth";
  }
  return "?";
}

AdversaryStrategy strategy_from_name(const std::string& name) {
  if (name == "silent") return AdversaryStrategy::silent;
  if (name == "uniform") return AdversaryStrategy::uniform;
  if (name == "oldest_first") return AdversaryStrategy::oldest_first;
  if (name == "fringe_growth") return AdversaryStrategy::fringe_growth;
  throw ConfigError("unknown adversary strategy: " + name);
}

namespace {

// count distinct uniform picks from pool; the pool itself stays untouched
std::vector<NodeId> sample_from(const std::vector<NodeId>& pool, std::size_t count, Rng& rng) {
  std::vector<NodeId> out;
  if (count == 0) return out;
  out.reserve(count);
  if (count * 3 >= pool.size()) {
    std::vector<NodeId> copy = pool;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(copy.size() - i));
      std::swap(copy[i], copy[j]);
      out.push_back(copy[i]);
    }
  } else {
    std::vector<NodeId> picked;
    while (out.size() < count) {
      const NodeId cand = pool[rng.below(pool.size())];
      auto it = std::lower_bound(picked.begin(), picked.end(), cand);
      if (it != picked.end() && *it == cand) continue;
      picked.insert(it, cand);
      out.push_back(cand);
    }
  }
  return out;
}

}  // namespace

Adversary::Adversary(AdversaryStrategy strategy, std::size_t churn_rate, int delta_h,
                     int attachments_per_arrival, std::uint64_t initial_n, Rng rng)
    : strategy_(strategy),
      rate_(churn_rate),
      delta_h_(delta_h),
      attach_per_(attachments_per_arrival),
      rng_(rng),
      next_id_(initial_n) {
  if (delta_h_ < 1) throw ConfigError("adversary: delta_h must be >= 1");
  if (attach_per_ < 1 || attach_per_ > delta_h_)
    throw ConfigError("adversary: attachments_per_arrival must be in [1, delta_h]");
  if (rate_ > initial_n / 2) throw ConfigError("adversary: churn_rate must be <= n/2");
  for (std::uint64_t i = 0; i < initial_n; ++i) ledger_add(NodeId{i}, 0, false);
}

void Adversary::ledger_add(NodeId id, std::int64_t join_round, bool inserted) {
  Entry e;
  e.join_round = join_round;
  e.inserted = inserted;
  e.dense_pos = dense_.size();
  dense_.push_back(id);
  auto& group = inserted ? fringe_ : originals_;
  e.group_pos = group.size();
  group.push_back(id);
  by_age_.emplace(join_round, id.v);
  entries_.emplace(id.v, e);
}

void Adversary::ledger_remove(NodeId id) {
  auto it = entries_.find(id.v);
  if (it == entries_.end()) throw ContractViolation("adversary ledger: unknown id");
  const Entry e = it->second;

  dense_[e.dense_pos] = dense_.back();
  entries_.at(dense_[e.dense_pos].v).dense_pos = e.dense_pos;
  dense_.pop_back();

  auto& group = e.inserted ? fringe_ : originals_;
  group[e.group_pos] = group.back();
  entries_.at(group[e.group_pos].v).group_pos = e.group_pos;
  group.pop_back();

  by_age_.erase({e.join_round, id.v});
  entries_.erase(id.v);
}

std::vector<NodeId> Adversary::pick_removals() {
  switch (strategy_) {
    case AdversaryStrategy::silent:
      return {};
    case AdversaryStrategy::uniform:
      return sample_from(dense_, rate_, rng_);
    case AdversaryStrategy::oldest_first: {
      std::vector<NodeId> out;
      out.reserve(rate_);
      auto it = by_age_.begin();
      for (std::size_t i = 0; i < rate_; ++i, ++it) out.push_back(NodeId{it->second});
      return out;
    }
    case AdversaryStrategy::fringe_growth: {
      // erode the part of the graph the adversary did not build; once the
      // originals run out, removals spill into the fringe
      const std::size_t from_originals = std::min(rate_, originals_.size());
      std::vector<NodeId> out = sample_from(originals_, from_originals, rng_);
      if (from_originals < rate_) {
        const auto extra = sample_from(fringe_, rate_ - from_originals, rng_);
        out.insert(out.end(), extra.begin(), extra.end());
      }
      return out;
    }
  }
  return {};
}

void Adversary::assign_hosts(ChurnEvent& ev) {
  std::unordered_map<std::uint64_t, int> usage;  // attachments per host in this event
  auto is_removed = [&](NodeId id) {
    return std::binary_search(ev.removed.begin(), ev.removed.end(), id);
  };

  for (NodeId arrival : ev.added) {
    std::vector<NodeId> hosts_of_arrival;
    auto eligible = [&](NodeId h) {
      if (is_removed(h)) return false;
      if (usage[h.v] >= delta_h_) return false;
      return std::find(hosts_of_arrival.begin(), hosts_of_arrival.end(), h) ==
             hosts_of_arrival.end();
    };

    for (int j = 0; j < attach_per_; ++j) {
      std::optional<NodeId> host;
      // fringe_growth prefers its own previously inserted nodes, then widens
      // to all survivors when that pool is empty or saturated
      const std::vector<NodeId>* pools[2] = {&dense_, nullptr};
      int npools = 1;
      if (strategy_ == AdversaryStrategy::fringe_growth && !fringe_.empty()) {
        pools[0] = &fringe_;
        pools[1] = &dense_;
        npools = 2;
      }
      for (int p = 0; p < npools && !host; ++p) {
        const std::vector<NodeId>& pool = *pools[p];
        if (pool.empty()) continue;
        for (int attempt = 0; attempt < 64 && !host; ++attempt) {
          const NodeId h = pool[rng_.below(pool.size())];
          if (eligible(h)) host = h;
        }
        if (!host) {
          std::vector<NodeId> all;
          for (NodeId h : pool)
            if (eligible(h)) all.push_back(h);
          std::sort(all.begin(), all.end());
          if (!all.empty()) host = all[rng_.below(all.size())];
        }
      }
      if (!host)
        throw ConfigError("adversary: no feasible attachment host under delta_h=" +
                          std::to_string(delta_h_));
      ++usage[host->v];
      hosts_of_arrival.push_back(*host);
      ev.attachments.emplace_back(arrival, *host);
    }
  }
}

ChurnEvent Adversary::next_churn(std::int64_t round) {
  ChurnEvent ev;
  ev.round = round;
  if (strategy_ == AdversaryStrategy::silent || rate_ == 0) return ev;
  if (dense_.empty()) throw ContractViolation("adversary: empty ledger");

  ev.removed = pick_removals();
  std::sort(ev.removed.begin(), ev.removed.end());
  ev.added.reserve(rate_);
  for (std::size_t i = 0; i < rate_; ++i) ev.added.push_back(NodeId{next_id_++});
  assign_hosts(ev);

  for (NodeId r : ev.removed) ledger_remove(r);
  for (NodeId a : ev.added) ledger_add(a, round, true);
  return ev;
}

Adversary make_adversary(AdversaryStrategy strategy, std::size_t churn_rate, int delta_h,
                         std::uint64_t n, std::uint64_t seed, int attachments_per_arrival) {
  return Adversary(strategy, churn_rate, delta_h, attachments_per_arrival, n, Rng(seed));
}

std::vector<ChurnEvent> pregenerate(Adversary adversary, std::int64_t first_round,
                                    std::int64_t rounds) {
  std::vector<ChurnEvent> events;
  events.reserve(static_cast<std::size_t>(rounds));
  for (std::int64_t i = 0; i < rounds; ++i) events.push_back(adversary.next_churn(first_round + i));
  return events;
}

void write_churn_jsonl(std::span<const ChurnEvent> events, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open churn file for writing: " + path);
  for (const ChurnEvent& ev : events) {
    json j;
    j["round"] = ev.round;
    auto& rem = j["removed"] = json::array();
    for (NodeId id : ev.removed) rem.push_back(id.v);
    auto& add = j["added"] = json::array();
    for (NodeId id : ev.added) add.push_back(id.v);
    auto& att = j["attachments"] = json::array();
    for (const auto& [a, h] : ev.attachments) att.push_back(json::array({a.v, h.v}));
    os << j.dump() << '\n';
  }
  if (!os) throw ConfigError("error writing churn file: " + path);
}

std::vector<ChurnEvent> read_churn_jsonl(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open churn file: " + path);
  std::vector<ChurnEvent> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      ChurnEvent ev;
      ev.round = j.at("round").get<std::int64_t>();
      for (const auto& v : j.at("removed")) ev.removed.push_back(NodeId{v.get<std::uint64_t>()});
      for (const auto& v : j.at("added")) ev.added.push_back(NodeId{v.get<std::uint64_t>()});
      for (const auto& pair : j.at("attachments")) {
        if (!pair.is_array() || pair.size() != 2)
          throw ConfigError("attachment entries must be [new, host] pairs");
        ev.attachments.emplace_back(NodeId{pair[0].get<std::uint64_t>()},
                                    NodeId{pair[1].get<std::uint64_t>()});
      }
      events.push_back(std::move(ev));
    } catch (const json::exception& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": bad churn event: " + e.what());
    }
  }
  return events;
}

}  // namespace raes
