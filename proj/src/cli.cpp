#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "raes/errors.hpp"
#include "raes/harness.hpp"
#include "raes/metrics.hpp"
#include "raes/simd/kernels.hpp"

#include "CLI11.hpp"

namespace raes {

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("RAES_SIM_SEED");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long long parsed = std::strtoull(v, &end, 10);
  if (end == v || *end != '\0') throw ConfigError("RAES_SIM_SEED is not an unsigned integer");
  return static_cast<std::uint64_t>(parsed);
}

void print_metrics(std::ostream& os, const MetricsRecord& m) {
  os << "  nodes=" << m.n_alive << " degrees: min=" << m.min_deg << " max=" << m.max_deg
     << " mean=" << m.mean_deg << " below_d=" << m.below_d << '\n';
  if (m.lambda2)
    os << "  lambda2=" << *m.lambda2 << " expansion in [" << *m.expansion_lower << ", "
       << *m.expansion_upper << "]\n";
  if (m.exact_expansion) os << "  exact_expansion=" << *m.exact_expansion << '\n';
  if (m.core_size) os << "  core: size=" << *m.core_size << " lambda2=" << *m.core_lambda2 << '\n';
  if (m.lcc_size) os << "  largest_component=" << *m.lcc_size << '\n';
}

void print_trace_summary(std::ostream& os, const Trace& t) {
  const TraceSummary& s = t.summary;
  os << "bootstrap: " << (t.bootstrap_converged ? "converged" : "did NOT converge") << " in "
     << t.bootstrap_rounds_used << " rounds\n";
  os << "maintenance rounds: " << t.reports.size() << '\n';
  if (s.min_core_size)
    os << "core_size: min=" << *s.min_core_size << " median=" << *s.median_core_size << '\n';
  if (s.min_lambda2)
    os << "lambda2:   min=" << *s.min_lambda2 << " median=" << *s.median_lambda2 << '\n';
  os << "max below-d streak: " << s.max_below_d_streak << '\n';
  os << "rounds with max_deg above cap: " << s.overcap_rounds.size() << '\n';
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> read_edge_list(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open edge list: " + path);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::uint64_t u = 0, v = 0;
    if (!(ls >> u >> v))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected \"u v\"");
    std::string rest;
    if (ls >> rest)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": trailing tokens");
    edges.emplace_back(u, v);
  }
  return edges;
}

struct CommonOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> rounds;
  std::optional<std::int64_t> metrics_every;
  std::optional<std::string> csv, json_path, churn_events;

  void apply(ExperimentConfig& cfg) const {
    if (seed)
      cfg.seed = *seed;
    else if (auto env = env_seed())
      cfg.seed = *env;
    if (rounds) cfg.rounds = *rounds;
    if (metrics_every) cfg.metrics_every = *metrics_every;
    if (csv) cfg.output.csv = *csv;
    if (json_path) cfg.output.json = *json_path;
    if (churn_events) cfg.output.churn_events = *churn_events;
  }
};

int cmd_bootstrap(std::uint64_t n, int d, double c, int k, std::optional<std::uint64_t> seed,
                  std::optional<int> rounds_max, double tol) {
  const ProtocolParams params = ProtocolParams::make(n, d, c, k, std::nullopt, rounds_max);
  std::uint64_t use_seed = 1;
  if (seed)
    use_seed = *seed;
  else if (auto env = env_seed())
    use_seed = *env;
  RngStreams streams = derive_streams(use_seed);
  const BootstrapResult res = run_bootstrap(params, streams.protocol);
  std::cout << "bootstrap: n=" << n << " d=" << d << " c=" << c << " delta_cap=" << params.delta_cap
            << " seed=" << use_seed << '\n';
  if (!res.converged) {
    std::cout << "did NOT converge within " << params.bootstrap_rounds_max << " rounds\n";
    return 1;
  }
  std::cout << "converged in " << res.rounds_used << " rounds\n";
  MetricsFlags flags;
  flags.exact_expansion = n <= metrics::kExactExpansionMaxNodes;
  const MetricsRecord m = metrics::measure(res.graph.snapshot(), params, flags, tol);
  print_metrics(std::cout, m);
  return 0;
}

int cmd_run(const std::string& config_path, const CommonOverrides& ov) {
  ExperimentConfig cfg = load_config_file(config_path);
  ov.apply(cfg);
  const Trace t = run_experiment(cfg);
  print_trace_summary(std::cout, t);
  if (cfg.output.csv) std::cout << "csv: " << *cfg.output.csv << '\n';
  if (cfg.output.json) std::cout << "json: " << *cfg.output.json << '\n';
  if (cfg.output.churn_events) std::cout << "churn events: " << *cfg.output.churn_events << '\n';
  return t.bootstrap_converged ? 0 : 1;
}

int cmd_compare(const std::string& config_path, const CommonOverrides& ov,
                std::int64_t tail_window) {
  ExperimentConfig cfg = load_config_file(config_path);
  ov.apply(cfg);
  const auto [with_refresh, no_refresh] = run_comparison_norefresh(cfg);
  if (!with_refresh.bootstrap_converged || !no_refresh.bootstrap_converged) {
    std::cout << "bootstrap did not converge\n";
    return 1;
  }
  std::cout << "== with refresh ==\n";
  print_trace_summary(std::cout, with_refresh);
  std::cout << "== without refresh ==\n";
  print_trace_summary(std::cout, no_refresh);
  const auto mw = median_core_lambda2_tail(with_refresh, tail_window);
  const auto mn = median_core_lambda2_tail(no_refresh, tail_window);
  if (mw && mn) {
    std::cout << "median core_lambda2 over final " << tail_window << " rounds: with=" << *mw
              << " without=" << *mn << " gap=" << (*mw - *mn) << '\n';
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, std::optional<std::uint64_t> seed, int threads) {
  std::ifstream is(config_path);
  if (!is) throw ConfigError("cannot open config file: " + config_path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(config_path + ": invalid JSON: " + e.what());
  }
  if (seed)
    j["seed"] = *seed;
  else if (auto env = env_seed())
    j["seed"] = *env;

  std::vector<SweepPoint> points = expand_sweep(j);
  if (points.empty()) {
    std::cout << "sweep: no points\n";
    return 0;
  }
  if (threads < 1) threads = 1;

  std::vector<std::string> lines(points.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size() || failed.load()) return;
      try {
        const Trace t = run_experiment(points[i].config);
        std::ostringstream os;
        os << "point " << points[i].point_index << " rep " << points[i].repeat_index << ": n="
           << points[i].config.n << " d=" << points[i].config.d << " k=" << points[i].config.k
           << " seed=" << points[i].config.seed << " bootstrap=" << t.bootstrap_rounds_used
           << (t.bootstrap_converged ? "" : " (failed)");
        if (t.summary.min_core_size)
          os << " min_core=" << *t.summary.min_core_size
             << " median_lambda2=" << *t.summary.median_lambda2;
        lines[i] = os.str();
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failed.load()) throw ConfigError("sweep point failed: " + first_error);
  for (const auto& line : lines) std::cout << line << '\n';
  return 0;
}

int cmd_expansion(const std::string& input, int d, double c, double tol) {
  const auto edges = read_edge_list(input);
  if (edges.empty()) throw ConfigError("edge list is empty: " + input);
  const Snapshot s = make_snapshot(edges);
  // params here only feed d / delta_cap into the stats; pad n so tiny inputs validate
  const auto cap = static_cast<std::uint64_t>(std::floor(c * d + 1e-9));
  const ProtocolParams params =
      ProtocolParams::make(std::max<std::uint64_t>(s.size(), cap + 2), d, c, 1);
  MetricsFlags flags;
  flags.exact_expansion = s.size() <= metrics::kExactExpansionMaxNodes;
  const MetricsRecord m = metrics::measure(s, params, flags, tol);
  std::cout << "graph: " << s.size() << " nodes, " << s.edge_count() << " edges (d=" << d
            << ", delta_cap=" << params.delta_cap << ")\n";
  print_metrics(std::cout, m);
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"RAES/D-RAES overlay maintenance simulator"};
  app.require_subcommand(1);

  // bootstrap
  auto* boot = app.add_subcommand("bootstrap", "run the bootstrap construction only");
  std::uint64_t bn = 1024;
  int bd = 3, bk = 2;
  double bc = 2.0, btol = metrics::kDefaultTol;
  std::optional<std::uint64_t> bseed;
  std::optional<int> bmax;
  boot->add_option("--n", bn, "stable network size")->required();
  boot->add_option("--d", bd, "degree floor")->required();
  boot->add_option("--c", bc, "slack factor (cap = floor(c*d))")->required();
  boot->add_option("--k", bk, "polylog exponent");
  boot->add_option("--seed", bseed, "master seed");
  boot->add_option("--bootstrap-rounds-max", bmax, "round budget");
  boot->add_option("--tol", btol, "eigensolver tolerance");

  // run
  auto* run = app.add_subcommand("run", "run a full experiment from a config file");
  std::string run_config;
  CommonOverrides run_ov;
  run->add_option("--config", run_config, "JSON config file")->required();
  run->add_option("--seed", run_ov.seed, "override the master seed");
  run->add_option("--rounds", run_ov.rounds, "override the maintenance horizon");
  run->add_option("--metrics-every", run_ov.metrics_every, "override the metrics stride");
  run->add_option("--csv", run_ov.csv, "override the CSV output path");
  run->add_option("--json", run_ov.json_path, "override the JSON output path");
  run->add_option("--churn-events", run_ov.churn_events, "override the churn JSONL path");

  // compare
  auto* cmp = app.add_subcommand("compare", "refresh vs no-refresh differential run");
  std::string cmp_config;
  CommonOverrides cmp_ov;
  std::int64_t cmp_tail = 200;
  cmp->add_option("--config", cmp_config, "JSON config file (fringe_growth adversary)")
      ->required();
  cmp->add_option("--seed", cmp_ov.seed, "override the master seed");
  cmp->add_option("--rounds", cmp_ov.rounds, "override the maintenance horizon");
  cmp->add_option("--metrics-every", cmp_ov.metrics_every, "override the metrics stride");
  cmp->add_option("--csv", cmp_ov.csv, "CSV output base path");
  cmp->add_option("--json", cmp_ov.json_path, "JSON output base path");
  cmp->add_option("--churn-events", cmp_ov.churn_events, "churn JSONL base path");
  cmp->add_option("--tail-window", cmp_tail, "rounds in the closing comparison window");

  // sweep
  auto* swp = app.add_subcommand("sweep", "cartesian sweep over listed parameter values");
  std::string swp_config;
  std::optional<std::uint64_t> swp_seed;
  int swp_threads = static_cast<int>(std::thread::hardware_concurrency());
  swp->add_option("--config", swp_config, "JSON config file with a \"sweep\" object")->required();
  swp->add_option("--seed", swp_seed, "override the master seed");
  swp->add_option("--threads", swp_threads, "worker threads");

  // expansion
  auto* exp = app.add_subcommand("expansion", "metrics for a whitespace edge-list file");
  std::string exp_input;
  int exp_d = 3;
  double exp_c = 2.0, exp_tol = metrics::kDefaultTol;
  exp->add_option("--input", exp_input, "edge list (\"u v\" per line, # comments)")->required();
  exp->add_option("--d", exp_d, "degree floor used for core/below-d stats");
  exp->add_option("--c", exp_c, "slack factor");
  exp->add_option("--tol", exp_tol, "eigensolver tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }

  try {
    if (boot->parsed()) return cmd_bootstrap(bn, bd, bc, bk, bseed, bmax, btol);
    if (run->parsed()) return cmd_run(run_config, run_ov);
    if (cmp->parsed()) return cmd_compare(cmp_config, cmp_ov, cmp_tail);
    if (swp->parsed()) return cmd_sweep(swp_config, swp_seed, swp_threads);
    if (exp->parsed()) return cmd_expansion(exp_input, exp_d, exp_c, exp_tol);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace raes
