// Acceptance suite: one criterion per function, each printing a PASS/FAIL
// line with the measured numbers. Run all or a single one with --criterion N.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "raes/adversary.hpp"
#include "raes/harness.hpp"
#include "raes/metrics.hpp"
#include "raes/protocol.hpp"

using namespace raes;

namespace {

// Thresholds frozen from pilot runs (see the values printed by the suite):
// - kTauLambda2: post-bootstrap spectral gap floor, calibrated at n=256 and
//   reused unchanged at n=1024 and 4096.
// - kTauCoreLambda2: steady-state core spectral gap floor under uniform churn
//   at n=1024, k=2.
constexpr double kTauLambda2 = 0.15;
constexpr double kTauCoreLambda2 = 0.10;
// Streak ceiling: no node may stay below d for more than 4*ceil(log2 n)
// consecutive rounds in the criterion-3 runs.
constexpr int kStreakCeilingFactor = 4;

int g_threads = 2;

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex err_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, threads); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failed.load()) throw std::runtime_error(first_error);
}

double median_int(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

struct BootstrapStats {
  int converged = 0;
  std::vector<int> rounds;
  std::vector<double> lambda2s;  // converged seeds only
  std::vector<bool> degree_ok, connected_ok;
};

BootstrapStats bootstrap_batch(std::uint64_t n, int seeds, bool with_lambda2) {
  BootstrapStats stats;
  stats.rounds.resize(seeds, -1);
  stats.lambda2s.resize(seeds, -1.0);
  stats.degree_ok.resize(seeds, false);
  stats.connected_ok.resize(seeds, false);
  std::vector<char> conv(seeds, 0);
  parallel_for(static_cast<std::size_t>(seeds), g_threads, [&](std::size_t i) {
    const ProtocolParams params = ProtocolParams::make(n, 3, 2.0, 2);
    RngStreams streams = derive_streams(static_cast<std::uint64_t>(i) + 1);
    const BootstrapResult res = run_bootstrap(params, streams.protocol);
    stats.rounds[i] = res.rounds_used;
    conv[i] = res.converged ? 1 : 0;
    if (res.converged && with_lambda2) {
      const Snapshot s = res.graph.snapshot();
      stats.degree_ok[i] = res.graph.all_degrees_within(3, 6);
      stats.connected_ok[i] = metrics::largest_component(s) == s.size();
      stats.lambda2s[i] = metrics::lambda2(s, 1e-6);
    }
  });
  for (char c : conv) stats.converged += c;
  return stats;
}

ExperimentConfig churn_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.n = 1024;
  cfg.d = 3;
  cfg.c = 2.0;
  cfg.k = 2;
  cfg.rounds = 1000;
  cfg.seed = seed;
  cfg.adversary.strategy = AdversaryStrategy::uniform;  // auto rate = 10
  cfg.metrics_flags.lambda2 = false;
  cfg.metrics_flags.lcc = false;
  cfg.metrics_flags.core = true;
  cfg.metrics_tol = 1e-6;
  return cfg;
}

bool criterion1() {
  const std::uint64_t sizes[] = {256, 1024, 4096};
  std::vector<double> medians;
  bool ok = true;
  std::ostringstream detail;
  for (std::uint64_t n : sizes) {
    const BootstrapStats st = bootstrap_batch(n, 100, false);
    const double med = median_int(st.rounds);
    medians.push_back(med);
    detail << "n=" << n << ": " << st.converged << "/100 converged, median rounds " << med
           << "; ";
    if (st.converged < 95) ok = false;
  }
  // affine growth in log2 n, factor-2 tolerance on the increments
  const double d1 = medians[1] - medians[0];
  const double d2 = medians[2] - medians[1];
  const bool slope_ok = d2 <= 2.0 * std::max(d1, 1.0);
  detail << "increments " << d1 << " then " << d2 << (slope_ok ? " (affine)" : " (superlinear)");
  if (!slope_ok) ok = false;
  std::cout << (ok ? "PASS" : "FAIL") << " criterion 1: bootstrap convergence — " << detail.str()
            << '\n';
  return ok;
}

bool criterion2() {
  const std::uint64_t sizes[] = {256, 1024, 4096};
  bool ok = true;
  std::ostringstream detail;
  detail << "tau=" << kTauLambda2 << "; ";
  for (std::uint64_t n : sizes) {
    const BootstrapStats st = bootstrap_batch(n, 100, true);
    int pass = 0;
    double min_l2 = 2.0;
    for (int i = 0; i < 100; ++i) {
      if (st.rounds[i] >= 0 && st.lambda2s[i] >= 0.0) min_l2 = std::min(min_l2, st.lambda2s[i]);
      if (st.lambda2s[i] >= kTauLambda2 && st.degree_ok[i] && st.connected_ok[i]) ++pass;
    }
    detail << "n=" << n << ": " << pass << "/100 pass (min lambda2 " << min_l2 << "); ";
    if (pass < 90) ok = false;
  }
  std::cout << (ok ? "PASS" : "FAIL") << " criterion 2: post-bootstrap expansion — "
            << detail.str() << '\n';
  return ok;
}

bool criterion3() {
  const int seeds = 20;
  std::vector<std::int64_t> bad_rounds(seeds, 0), total_rounds(seeds, 0);
  std::vector<std::int64_t> max_streaks(seeds, 0);
  std::vector<double> min_core_l2(seeds, 2.0);
  std::vector<double> min_core_frac(seeds, 1.0);
  parallel_for(seeds, g_threads, [&](std::size_t i) {
    ExperimentConfig cfg = churn_config(i + 1);
    const Trace t = run_experiment(cfg);
    if (!t.bootstrap_converged) {
      bad_rounds[i] = cfg.rounds;
      total_rounds[i] = cfg.rounds;
      return;
    }
    for (const RoundReport& r : t.reports) {
      if (!r.metrics_sampled) continue;
      ++total_rounds[i];
      const bool deg_ok = r.metrics.max_deg <= 6;
      const double core_frac =
          r.metrics.core_size ? static_cast<double>(*r.metrics.core_size) / 1024.0 : 0.0;
      const double core_l2 = r.metrics.core_lambda2 ? *r.metrics.core_lambda2 : 0.0;
      min_core_l2[i] = std::min(min_core_l2[i], core_l2);
      min_core_frac[i] = std::min(min_core_frac[i], core_frac);
      if (!deg_ok || core_frac < 0.9 || core_l2 < kTauCoreLambda2) ++bad_rounds[i];
      max_streaks[i] = std::max(max_streaks[i], r.metrics.max_below_d_streak);
    }
  });
  std::int64_t bad = 0, total = 0, worst_streak = 0;
  double worst_l2 = 2.0, worst_frac = 1.0;
  for (int i = 0; i < seeds; ++i) {
    bad += bad_rounds[i];
    total += total_rounds[i];
    worst_streak = std::max(worst_streak, max_streaks[i]);
    worst_l2 = std::min(worst_l2, min_core_l2[i]);
    worst_frac = std::min(worst_frac, min_core_frac[i]);
  }
  const double good_frac = total ? 1.0 - static_cast<double>(bad) / total : 0.0;
  const std::int64_t streak_ceiling = kStreakCeilingFactor * ceil_log2(1024);
  const bool streak_ok = worst_streak <= streak_ceiling;
  const bool ok = good_frac >= 0.99 && total == 20 * 1000 && streak_ok;
  std::cout << (ok ? "PASS" : "FAIL") << " criterion 3: churn resilience — " << bad << "/" << total
            << " bad sampled rounds (" << 100.0 * good_frac << "% good, need >= 99%); min core "
            << worst_frac * 1024 << " nodes, min core_lambda2 " << worst_l2 << " (tau'="
            << kTauCoreLambda2 << "); max below-d streak " << worst_streak << " (ceiling "
            << streak_ceiling << ")\n";
  return ok;
}

bool criterion4() {
  const int pairs = 20;
  int lower_without = 0;
  int overcap_violations = 0;
  std::vector<double> gaps;
  for (int i = 0; i < pairs; ++i) {
    ExperimentConfig cfg;
    cfg.n = 1024;
    cfg.d = 3;
    cfg.c = 2.0;
    cfg.k = 2;
    cfg.rounds = 2000;
    cfg.seed = 1000 + static_cast<std::uint64_t>(i);
    cfg.adversary.strategy = AdversaryStrategy::fringe_growth;
    cfg.adversary.delta_h = 4;
    cfg.adversary.attachments_per_arrival = 3;  // arrivals enter at degree d
    cfg.metrics_flags.lambda2 = false;
    cfg.metrics_flags.lcc = false;
    cfg.metrics_every = 5;
    cfg.metrics_tol = 1e-6;
    const auto [with_refresh, no_refresh] = run_comparison_norefresh(cfg);
    if (!with_refresh.summary.overcap_rounds.empty() ||
        !no_refresh.summary.overcap_rounds.empty())
      ++overcap_violations;
    const auto mw = median_core_lambda2_tail(with_refresh, 200);
    const auto mn = median_core_lambda2_tail(no_refresh, 200);
    if (!mw || !mn) continue;
    gaps.push_back(*mw - *mn);
    if (*mn < *mw) ++lower_without;
  }
  std::sort(gaps.begin(), gaps.end());
  const double median_gap =
      gaps.empty() ? 0.0
                   : (gaps.size() % 2 ? gaps[gaps.size() / 2]
                                      : 0.5 * (gaps[gaps.size() / 2 - 1] + gaps[gaps.size() / 2]));
  const bool ok = overcap_violations == 0 && lower_without >= 16 &&
                  static_cast<int>(gaps.size()) == pairs && median_gap > 0.0;
  std::cout << (ok ? "PASS" : "FAIL")
            << " criterion 4: refresh differential — no-refresh lower in " << lower_without << "/"
            << pairs << " pairs (need >= 16), median gap " << median_gap
            << " (need > 0), overcap violations " << overcap_violations << '\n';
  return ok;
}

bool criterion5() {
  bool ok = true;
  std::ostringstream detail;
  using Edges = std::vector<std::pair<std::uint64_t, std::uint64_t>>;

  // (a) closed-form spectra within 1e-6
  int spectra_bad = 0;
  for (std::uint64_t n = 2; n <= 12; ++n) {
    Edges e;
    for (std::uint64_t i = 0; i < n; ++i)
      for (std::uint64_t j = i + 1; j < n; ++j) e.emplace_back(i, j);
    const double got = metrics::lambda2(make_snapshot(e));
    if (std::abs(got - static_cast<double>(n) / (n - 1)) > 1e-6) ++spectra_bad;
  }
  for (std::uint64_t n = 3; n <= 12; ++n) {
    Edges e;
    for (std::uint64_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    const double expect = 1.0 - std::cos(2.0 * std::numbers::pi / static_cast<double>(n));
    if (std::abs(metrics::lambda2(make_snapshot(e)) - expect) > 1e-6) ++spectra_bad;
  }
  for (std::uint64_t m = 2; m <= 12; ++m) {
    Edges e;
    for (std::uint64_t i = 1; i <= m; ++i) e.emplace_back(0, i);
    if (std::abs(metrics::lambda2(make_snapshot(e)) - 1.0) > 1e-6) ++spectra_bad;
  }
  detail << "closed-form spectra violations " << spectra_bad << "; ";
  if (spectra_bad) ok = false;

  // (b) Cheeger containment on random near-regular graphs, zero violations
  int containment_bad = 0;
  Rng rng(0xACCE57);
  for (int g = 0; g < 120; ++g) {
    const std::uint64_t n = 6 + rng.below(11);
    Edges e;
    for (std::uint64_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    for (int round = 0; round < 2; ++round) {
      std::vector<std::uint64_t> perm(n);
      for (std::uint64_t i = 0; i < n; ++i) perm[i] = i;
      for (std::uint64_t i = 0; i + 1 < n; ++i) std::swap(perm[i], perm[i + rng.below(n - i)]);
      for (std::uint64_t i = 0; i + 1 < n; i += 2)
        e.emplace_back(std::min(perm[i], perm[i + 1]), std::max(perm[i], perm[i + 1]));
    }
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    const Snapshot s = make_snapshot(e);
    const double h = metrics::exact_edge_expansion(s);
    const double l2 = metrics::lambda2(s);
    int mind = 1 << 30, maxd = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      mind = std::min(mind, static_cast<int>(s.degree_at(i)));
      maxd = std::max(maxd, static_cast<int>(s.degree_at(i)));
    }
    const auto [lo, hi] = metrics::cheeger_bounds(l2, mind, maxd);
    if (h < lo - 1e-9 || h > hi + 1e-9) ++containment_bad;
  }
  detail << "containment violations " << containment_bad << "/120; ";
  if (containment_bad) ok = false;

  // (c) exact expansion values
  const Snapshot k4 = make_snapshot({{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  Edges c6e;
  for (std::uint64_t i = 0; i < 6; ++i) c6e.emplace_back(i, (i + 1) % 6);
  const Snapshot c6 = make_snapshot(c6e);
  const Snapshot tri2 = make_snapshot({{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  const bool exact_ok = metrics::exact_edge_expansion(k4) == 2.0 &&
                        metrics::exact_edge_expansion(c6) == 2.0 / 3.0 &&
                        metrics::exact_edge_expansion(tri2) == 0.0;
  detail << "exact values " << (exact_ok ? "match" : "MISMATCH");
  if (!exact_ok) ok = false;

  std::cout << (ok ? "PASS" : "FAIL") << " criterion 5: metrics oracle suite — " << detail.str()
            << '\n';
  return ok;
}

bool criterion6() {
  // >= 1000 randomized protocol states, zero invariant violations
  std::atomic<long> cases{0};
  std::atomic<long> violations{0};
  const int batches = 250;
  parallel_for(batches, g_threads, [&](std::size_t batch) {
    Rng meta(0xB00 + batch);
    for (int rep = 0; rep < 4; ++rep) {
      const std::uint64_t n = 20 + meta.below(60);
      const int d = 1 + static_cast<int>(meta.below(4));
      const double c = 1.6 + meta.next_double() * 1.4;
      ProtocolParams p;
      try {
        p = ProtocolParams::make(n, d, c, 1, meta.next_double() * 0.4);
      } catch (const ConfigError&) {
        continue;  // floor(c*d) == d for small d: not a valid configuration
      }
      const std::size_t rate = meta.below(n / 4 + 1);
      const int delta_h = 1 + static_cast<int>(meta.below(4));
      const int attach = 1 + static_cast<int>(meta.below(static_cast<std::uint64_t>(delta_h)));
      Rng proto_rng(meta.next_u64());
      Adversary adv(AdversaryStrategy::uniform, rate, delta_h, attach, n, Rng(meta.next_u64()));
      auto res = run_bootstrap(p, proto_rng);
      if (!res.converged) continue;
      OverlayGraph& g = res.graph;
      bool bad = false;
      for (int round = 0; round < 4; ++round) {
        const ChurnEvent ev = adv.next_churn(g.round() + 1);
        // churn validity: rate, attachment-to-survivor and the delta_h ledger
        if (ev.removed.size() != rate || ev.added.size() != rate) bad = true;
        std::unordered_map<std::uint64_t, int> usage;
        for (const auto& [arrival, host] : ev.attachments) {
          if (!g.alive(host)) bad = true;
          if (std::binary_search(ev.removed.begin(), ev.removed.end(), host)) bad = true;
          if (!std::binary_search(ev.added.begin(), ev.added.end(), arrival)) bad = true;
          if (++usage[host.v] > delta_h) bad = true;
        }
        for (NodeId r2 : ev.removed) g.remove_node(r2);
        for (NodeId a2 : ev.added) g.add_node(a2, g.round() + 1);
        for (const auto& [arrival, host] : ev.attachments)
          if (!g.add_edge(arrival, host)) bad = true;

        const auto refreshed = phase_refresh(g, p, proto_rng);
        // refresh guard: members had start degree in [d, cap]... degree may have
        // changed only by their own drop, so check membership was legal via the
        // graph's current state at phase start being unavailable here; instead
        // verify refreshed nodes exist and ended with degree 0 or got re-linked.
        for (NodeId u : refreshed)
          if (!g.alive(u)) bad = true;

        phase_reconnect(g, p, proto_rng);
        for (NodeId u : g.alive_ids())
          if (g.degree(u) < static_cast<std::size_t>(p.d)) bad = true;  // post-reconnect floor

        phase_adjust(g, p, proto_rng);
        for (NodeId u : g.alive_ids()) {
          if (g.degree(u) > static_cast<std::size_t>(p.delta_cap)) bad = true;  // post-adjust cap
          auto nbrs = g.neighbors(u);
          if (!std::is_sorted(nbrs.begin(), nbrs.end())) bad = true;
          for (NodeId w : nbrs) {
            if (w == u) bad = true;  // simplicity
            auto back = g.neighbors(w);
            if (!std::binary_search(back.begin(), back.end(), u)) bad = true;  // symmetry
          }
        }
        g.advance_round();
        g.update_streaks(p.d);
        if (g.node_count() != n) bad = true;  // |V| = n at every boundary
        ++cases;
      }
      if (bad) ++violations;
    }
  });
  const bool ok = cases.load() >= 1000 && violations.load() == 0;
  std::cout << (ok ? "PASS" : "FAIL") << " criterion 6: protocol invariant suite — "
            << cases.load() << " randomized round cases, " << violations.load()
            << " violations\n";
  return ok;
}

bool criterion7() {
  bool ok = true;
  std::ostringstream detail;

  ExperimentConfig a;
  a.n = 256;
  a.d = 3;
  a.c = 2.0;
  a.k = 2;
  a.rounds = 50;
  a.seed = 11;
  a.adversary.strategy = AdversaryStrategy::uniform;
  a.metrics_tol = 1e-6;

  ExperimentConfig b = a;
  b.n = 128;
  b.adversary.strategy = AdversaryStrategy::oldest_first;
  b.adversary.churn_rate = 4;
  b.refresh_prob = 0.05;
  b.rounds = 60;
  b.seed = 12;

  ExperimentConfig c = a;
  c.n = 128;
  c.adversary.strategy = AdversaryStrategy::fringe_growth;
  c.adversary.attachments_per_arrival = 3;
  c.rounds = 40;
  c.seed = 13;

  int repeat_mismatches = 0;
  for (const ExperimentConfig* cfg : {&a, &b, &c}) {
    const std::string run1 = trace_csv_string(run_experiment(*cfg));
    const std::string run2 = trace_csv_string(run_experiment(*cfg));
    if (run1 != run2 || run1.empty()) ++repeat_mismatches;
  }
  detail << "CSV repeat mismatches " << repeat_mismatches << "/3; ";
  if (repeat_mismatches) ok = false;

  // obliviousness end to end: protocol parameters do not touch the churn file
  ExperimentConfig p1 = a;
  p1.output.churn_events = temp_file("raes_acc_events_p1.jsonl");
  p1.refresh_prob = 0.02;
  run_experiment(p1);
  ExperimentConfig p2 = a;
  p2.output.churn_events = temp_file("raes_acc_events_p2.jsonl");
  p2.refresh_prob = 0.3;
  run_experiment(p2);
  const bool churn_same = slurp(*p1.output.churn_events) == slurp(*p2.output.churn_events);
  std::filesystem::remove(*p1.output.churn_events);
  std::filesystem::remove(*p2.output.churn_events);
  detail << "churn file under refresh_prob change: " << (churn_same ? "identical" : "DIFFERS");
  if (!churn_same) ok = false;

  std::cout << (ok ? "PASS" : "FAIL") << " criterion 7: determinism & obliviousness — "
            << detail.str() << '\n';
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
    if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) g_threads = std::atoi(argv[++i]);
  }
  if (g_threads < 1) g_threads = 1;

  bool (*criteria[])() = {criterion1, criterion2, criterion3, criterion4,
                          criterion5, criterion6, criterion7};
  int failures = 0;
  for (int i = 1; i <= 7; ++i) {
    if (only != 0 && only != i) continue;
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = criteria[i - 1]();
    } catch (const std::exception& e) {
      std::cout << "FAIL criterion " << i << ": exception: " << e.what() << '\n';
    }
    const auto dt = std::chrono::duration_cast<std::chrono::seconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    std::cout << "  [criterion " << i << " took " << dt << "s]\n";
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
