#include "raes/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>
#include <string>

#include "raes/errors.hpp"

namespace raes {

using nlohmann::json;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json optional_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}
json optional_to_json(const std::optional<std::size_t>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

json metrics_to_json(const MetricsRecord& m) {
  json j;
  j["round"] = m.round;
  j["n_alive"] = m.n_alive;
  j["min_deg"] = m.min_deg;
  j["max_deg"] = m.max_deg;
  j["mean_deg"] = m.mean_deg;
  j["below_d"] = m.below_d;
  j["max_below_d_streak"] = m.max_below_d_streak;
  j["lambda2"] = optional_to_json(m.lambda2);
  j["expansion_lower"] = optional_to_json(m.expansion_lower);
  j["expansion_upper"] = optional_to_json(m.expansion_upper);
  j["exact_expansion"] = optional_to_json(m.exact_expansion);
  j["core_size"] = optional_to_json(m.core_size);
  j["core_lambda2"] = optional_to_json(m.core_lambda2);
  j["lcc_size"] = optional_to_json(m.lcc_size);
  return j;
}

MetricsRecord metrics_from_json(const json& j) {
  MetricsRecord m;
  m.round = j.at("round").get<std::int64_t>();
  m.n_alive = j.at("n_alive").get<std::size_t>();
  m.min_deg = j.at("min_deg").get<int>();
  m.max_deg = j.at("max_deg").get<int>();
  m.mean_deg = j.at("mean_deg").get<double>();
  m.below_d = j.at("below_d").get<std::size_t>();
  m.max_below_d_streak = j.at("max_below_d_streak").get<std::int64_t>();
  m.lambda2 = optional_from_json<double>(j, "lambda2");
  m.expansion_lower = optional_from_json<double>(j, "expansion_lower");
  m.expansion_upper = optional_from_json<double>(j, "expansion_upper");
  m.exact_expansion = optional_from_json<double>(j, "exact_expansion");
  m.core_size = optional_from_json<std::size_t>(j, "core_size");
  m.core_lambda2 = optional_from_json<double>(j, "core_lambda2");
  m.lcc_size = optional_from_json<std::size_t>(j, "lcc_size");
  return m;
}

json report_to_json(const RoundReport& r) {
  json j;
  j["round"] = r.round;
  j["churn_removed"] = r.churn_removed;
  j["churn_added"] = r.churn_added;
  json refreshed = json::array();
  for (NodeId id : r.phases.refreshed) refreshed.push_back(id.v);
  j["phases"] = {{"refreshed", std::move(refreshed)},
                 {"reconnect_requests", r.phases.reconnect_requests},
                 {"edges_added", r.phases.edges_added},
                 {"edges_dropped_adjust", r.phases.edges_dropped_adjust},
                 {"nodes_below_d_after", r.phases.nodes_below_d_after},
                 {"nodes_above_cap_after", r.phases.nodes_above_cap_after}};
  j["metrics"] = metrics_to_json(r.metrics);
  j["sampled"] = r.metrics_sampled;
  return j;
}

RoundReport report_from_json(const json& j) {
  RoundReport r;
  r.round = j.at("round").get<std::int64_t>();
  r.churn_removed = j.at("churn_removed").get<std::size_t>();
  r.churn_added = j.at("churn_added").get<std::size_t>();
  const json& p = j.at("phases");
  for (const auto& v : p.at("refreshed")) r.phases.refreshed.push_back(NodeId{v.get<std::uint64_t>()});
  r.phases.reconnect_requests = p.at("reconnect_requests").get<std::uint64_t>();
  r.phases.edges_added = p.at("edges_added").get<std::uint64_t>();
  r.phases.edges_dropped_adjust = p.at("edges_dropped_adjust").get<std::uint64_t>();
  r.phases.nodes_below_d_after = p.at("nodes_below_d_after").get<std::size_t>();
  r.phases.nodes_above_cap_after = p.at("nodes_above_cap_after").get<std::size_t>();
  r.metrics = metrics_from_json(j.at("metrics"));
  r.metrics_sampled = j.at("sampled").get<bool>();
  return r;
}

json summary_to_json(const TraceSummary& s) {
  json j;
  j["min_core_size"] = optional_to_json(s.min_core_size);
  j["median_core_size"] = optional_to_json(s.median_core_size);
  j["min_lambda2"] = optional_to_json(s.min_lambda2);
  j["median_lambda2"] = optional_to_json(s.median_lambda2);
  j["max_below_d_streak"] = s.max_below_d_streak;
  j["overcap_rounds"] = s.overcap_rounds;
  return j;
}

void append_suffix(std::optional<std::string>& path, const std::string& suffix) {
  if (!path) return;
  const auto dot = path->rfind('.');
  const auto slash = path->rfind('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    *path += suffix;
  else
    path->insert(dot, suffix);
}

void suffix_outputs(ExperimentConfig& cfg, const std::string& suffix) {
  append_suffix(cfg.output.csv, suffix);
  append_suffix(cfg.output.json, suffix);
  append_suffix(cfg.output.churn_events, suffix);
}

}  // namespace

ProtocolParams resolve_params(const ExperimentConfig& cfg) {
  return ProtocolParams::make(cfg.n, cfg.d, cfg.c, cfg.k, cfg.refresh_prob,
                              cfg.bootstrap_rounds_max);
}

std::size_t resolve_churn_rate(const ExperimentConfig& cfg) {
  const std::size_t rate =
      cfg.adversary.churn_rate ? *cfg.adversary.churn_rate : auto_churn_rate(cfg.n, cfg.k);
  if (rate > cfg.n / 2) throw ConfigError("adversary: churn_rate must be <= n/2");
  return rate;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("n")) cfg.n = j.at("n").get<std::uint64_t>();
    if (j.contains("d")) cfg.d = j.at("d").get<int>();
    if (j.contains("c")) cfg.c = j.at("c").get<double>();
    if (j.contains("k")) cfg.k = j.at("k").get<int>();
    if (j.contains("refresh_prob") && !j.at("refresh_prob").is_null())
      cfg.refresh_prob = j.at("refresh_prob").get<double>();
    if (j.contains("bootstrap_rounds_max") && !j.at("bootstrap_rounds_max").is_null())
      cfg.bootstrap_rounds_max = j.at("bootstrap_rounds_max").get<int>();
    if (j.contains("adversary")) {
      const json& a = j.at("adversary");
      if (a.contains("strategy"))
        cfg.adversary.strategy = strategy_from_name(a.at("strategy").get<std::string>());
      if (a.contains("churn_rate") && !a.at("churn_rate").is_null()) {
        const json& r = a.at("churn_rate");
        if (r.is_string()) {
          if (r.get<std::string>() != "auto")
            throw ConfigError("adversary.churn_rate must be a number or \"auto\"");
        } else {
          cfg.adversary.churn_rate = r.get<std::size_t>();
        }
      }
      if (a.contains("delta_h")) cfg.adversary.delta_h = a.at("delta_h").get<int>();
      if (a.contains("attachments_per_arrival"))
        cfg.adversary.attachments_per_arrival = a.at("attachments_per_arrival").get<int>();
      if (a.contains("replay_file") && !a.at("replay_file").is_null())
        cfg.adversary.replay_file = a.at("replay_file").get<std::string>();
    }
    if (j.contains("rounds")) cfg.rounds = j.at("rounds").get<std::int64_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("metrics_every")) cfg.metrics_every = j.at("metrics_every").get<std::int64_t>();
    if (j.contains("metrics_tol")) cfg.metrics_tol = j.at("metrics_tol").get<double>();
    if (j.contains("metrics_flags")) {
      MetricsFlags f;
      f.lambda2 = f.core = f.lcc = f.exact_expansion = false;
      for (const auto& v : j.at("metrics_flags")) {
        const std::string name = v.get<std::string>();
        if (name == "lambda2")
          f.lambda2 = true;
        else if (name == "core")
          f.core = true;
        else if (name == "lcc")
          f.lcc = true;
        else if (name == "exact_expansion")
          f.exact_expansion = true;
        else if (name == "degrees")
          ;  // always on
        else
          throw ConfigError("unknown metrics flag: " + name);
      }
      cfg.metrics_flags = f;
    }
    if (j.contains("output")) {
      const json& o = j.at("output");
      if (o.contains("csv") && !o.at("csv").is_null())
        cfg.output.csv = o.at("csv").get<std::string>();
      if (o.contains("json") && !o.at("json").is_null())
        cfg.output.json = o.at("json").get<std::string>();
      if (o.contains("churn_events") && !o.at("churn_events").is_null())
        cfg.output.churn_events = o.at("churn_events").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  if (cfg.rounds < 0) throw ConfigError("rounds must be >= 0");
  if (cfg.metrics_every < 1) throw ConfigError("metrics_every must be >= 1");
  if (!(cfg.metrics_tol > 0.0)) throw ConfigError("metrics_tol must be positive");
  resolve_params(cfg);      // fail fast on bad core parameters
  resolve_churn_rate(cfg);  // and on an impossible churn volume
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  const ProtocolParams params = resolve_params(cfg);
  json j;
  j["n"] = cfg.n;
  j["d"] = cfg.d;
  j["c"] = cfg.c;
  j["k"] = cfg.k;
  j["delta_cap"] = params.delta_cap;
  j["refresh_prob"] = params.refresh_prob;
  j["bootstrap_rounds_max"] = params.bootstrap_rounds_max;
  json a;
  a["strategy"] = strategy_name(cfg.adversary.strategy);
  a["churn_rate"] = resolve_churn_rate(cfg);
  a["delta_h"] = cfg.adversary.delta_h;
  a["attachments_per_arrival"] = cfg.adversary.attachments_per_arrival;
  if (cfg.adversary.replay_file) a["replay_file"] = *cfg.adversary.replay_file;
  j["adversary"] = std::move(a);
  j["rounds"] = cfg.rounds;
  j["seed"] = cfg.seed;
  j["metrics_every"] = cfg.metrics_every;
  j["metrics_tol"] = cfg.metrics_tol;
  json flags = json::array();
  flags.push_back("degrees");
  if (cfg.metrics_flags.lambda2) flags.push_back("lambda2");
  if (cfg.metrics_flags.core) flags.push_back("core");
  if (cfg.metrics_flags.lcc) flags.push_back("lcc");
  if (cfg.metrics_flags.exact_expansion) flags.push_back("exact_expansion");
  j["metrics_flags"] = std::move(flags);
  json o;
  if (cfg.output.csv) o["csv"] = *cfg.output.csv;
  if (cfg.output.json) o["json"] = *cfg.output.json;
  if (cfg.output.churn_events) o["churn_events"] = *cfg.output.churn_events;
  j["output"] = std::move(o);
  return j;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  return config_from_json(j);
}

RngStreams derive_streams(std::uint64_t master_seed) {
  return {Rng::from_tag(master_seed, "protocol"), Rng::from_tag(master_seed, "adversary"),
          Rng::from_tag(master_seed, "metrics")};
}

TraceSummary compute_summary(const std::vector<RoundReport>& reports, int delta_cap) {
  TraceSummary s;
  std::vector<double> cores;
  std::vector<double> lams;
  for (const RoundReport& r : reports) {
    s.max_below_d_streak = std::max(s.max_below_d_streak, r.metrics.max_below_d_streak);
    if (r.metrics.n_alive > 0 && r.metrics.max_deg > delta_cap) s.overcap_rounds.push_back(r.round);
    if (!r.metrics_sampled) continue;
    if (r.metrics.core_size) cores.push_back(static_cast<double>(*r.metrics.core_size));
    if (r.metrics.lambda2) lams.push_back(*r.metrics.lambda2);
  }
  if (!cores.empty()) {
    s.min_core_size = *std::min_element(cores.begin(), cores.end());
    s.median_core_size = median_of(cores);
  }
  if (!lams.empty()) {
    s.min_lambda2 = *std::min_element(lams.begin(), lams.end());
    s.median_lambda2 = median_of(lams);
  }
  return s;
}

Trace run_experiment(const ExperimentConfig& cfg) {
  const ProtocolParams params = resolve_params(cfg);
  const std::size_t rate = resolve_churn_rate(cfg);
  if (cfg.rounds < 0) throw ConfigError("rounds must be >= 0");
  if (cfg.metrics_every < 1) throw ConfigError("metrics_every must be >= 1");

  RngStreams streams = derive_streams(cfg.seed);

  Trace t;
  t.config = cfg;
  t.config.refresh_prob = params.refresh_prob;
  t.config.bootstrap_rounds_max = params.bootstrap_rounds_max;
  t.config.adversary.churn_rate = rate;

  BootstrapResult boot = run_bootstrap(params, streams.protocol);
  t.bootstrap_rounds_used = boot.rounds_used;
  t.bootstrap_converged = boot.converged;
  if (!boot.converged) {
    // failed experiment: no maintenance rounds, outputs still written
    if (cfg.output.csv) write_trace_csv_file(t, *cfg.output.csv);
    if (cfg.output.json) write_trace_json_file(t, *cfg.output.json);
    if (cfg.output.churn_events) write_churn_jsonl({}, *cfg.output.churn_events);
    return t;
  }
  {
    const Snapshot s = boot.graph.snapshot();
    t.bootstrap_metrics = metrics::measure(s, params, cfg.metrics_flags, cfg.metrics_tol);
  }

  std::vector<ChurnEvent> replay;
  const bool use_replay = cfg.adversary.replay_file.has_value();
  if (use_replay) replay = read_churn_jsonl(*cfg.adversary.replay_file);
  Adversary adversary(cfg.adversary.strategy, rate, cfg.adversary.delta_h,
                      cfg.adversary.attachments_per_arrival, cfg.n, streams.adversary);

  OverlayGraph g = std::move(boot.graph);
  std::vector<ChurnEvent> events;
  events.reserve(static_cast<std::size_t>(cfg.rounds));

  for (std::int64_t i = 1; i <= cfg.rounds; ++i) {
    ChurnEvent ev;
    if (use_replay) {
      if (static_cast<std::size_t>(i) > replay.size())
        throw ConfigError("replay file has fewer events than configured rounds");
      ev = replay[static_cast<std::size_t>(i - 1)];
    } else {
      ev = adversary.next_churn(g.round() + 1);
    }
    RoundReport rep = run_maintenance_round(g, ev, params, streams.protocol);
    if (i % cfg.metrics_every == 0 || i == cfg.rounds) {
      const Snapshot s = g.snapshot();
      const std::int64_t streak = rep.metrics.max_below_d_streak;
      rep.metrics = metrics::measure(s, params, cfg.metrics_flags, cfg.metrics_tol);
      rep.metrics.max_below_d_streak = streak;
      rep.metrics_sampled = true;
    }
    events.push_back(std::move(ev));
    t.reports.push_back(std::move(rep));
  }
  t.summary = compute_summary(t.reports, params.delta_cap);

  if (cfg.output.csv) write_trace_csv_file(t, *cfg.output.csv);
  if (cfg.output.json) write_trace_json_file(t, *cfg.output.json);
  if (cfg.output.churn_events) write_churn_jsonl(events, *cfg.output.churn_events);
  return t;
}

std::pair<Trace, Trace> run_comparison_norefresh(const ExperimentConfig& cfg) {
  if (cfg.adversary.strategy != AdversaryStrategy::fringe_growth)
    throw ConfigError("run_comparison_norefresh requires the fringe_growth strategy");
  const double p = resolve_params(cfg).refresh_prob;
  if (!(p > 0.0)) throw ConfigError("run_comparison_norefresh: refresh_prob resolves to 0");

  ExperimentConfig with = cfg;
  with.refresh_prob = p;
  suffix_outputs(with, "_refresh");
  ExperimentConfig without = cfg;
  without.refresh_prob = 0.0;
  suffix_outputs(without, "_norefresh");

  auto fut = std::async(std::launch::async, [&with] { return run_experiment(with); });
  Trace no_refresh = run_experiment(without);
  Trace refresh = fut.get();
  return {std::move(refresh), std::move(no_refresh)};
}

void write_trace_csv(const Trace& t, std::ostream& os) {
  os << "round,churn_removed,churn_added,refreshed,edges_added,edges_dropped_adjust,"
        "min_deg,max_deg,mean_deg,below_d,max_below_d_streak,lambda2,expansion_lower,"
        "expansion_upper,exact_expansion,core_size,core_lambda2,lcc_size\n";
  auto opt_d = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
  auto opt_s = [](const std::optional<std::size_t>& v) {
    return v ? std::to_string(*v) : std::string();
  };
  for (const RoundReport& r : t.reports) {
    if (!r.metrics_sampled) continue;
    const MetricsRecord& m = r.metrics;
    os << r.round << ',' << r.churn_removed << ',' << r.churn_added << ','
       << r.phases.refreshed.size() << ',' << r.phases.edges_added << ','
       << r.phases.edges_dropped_adjust << ',' << m.min_deg << ',' << m.max_deg << ','
       << fmt_double(m.mean_deg) << ',' << m.below_d << ',' << m.max_below_d_streak << ','
       << opt_d(m.lambda2) << ',' << opt_d(m.expansion_lower) << ',' << opt_d(m.expansion_upper)
       << ',' << opt_d(m.exact_expansion) << ',' << opt_s(m.core_size) << ','
       << opt_d(m.core_lambda2) << ',' << opt_s(m.lcc_size) << '\n';
  }
}

std::string trace_csv_string(const Trace& t) {
  std::ostringstream os;
  write_trace_csv(t, os);
  return os.str();
}

void write_trace_csv_file(const Trace& t, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open CSV output: " + path);
  write_trace_csv(t, os);
  if (!os) throw ConfigError("error writing CSV output: " + path);
}

json trace_to_json(const Trace& t) {
  json j;
  j["config"] = config_to_json(t.config);
  j["bootstrap"] = {{"rounds_used", t.bootstrap_rounds_used},
                    {"converged", t.bootstrap_converged},
                    {"metrics", metrics_to_json(t.bootstrap_metrics)}};
  json reports = json::array();
  for (const RoundReport& r : t.reports) reports.push_back(report_to_json(r));
  j["reports"] = std::move(reports);
  j["summary"] = summary_to_json(t.summary);
  return j;
}

void write_trace_json_file(const Trace& t, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open JSON output: " + path);
  os << trace_to_json(t).dump(2) << '\n';
  if (!os) throw ConfigError("error writing JSON output: " + path);
}

Trace load_trace(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open trace: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  Trace t;
  try {
    t.config = config_from_json(j.at("config"));
    t.bootstrap_rounds_used = j.at("bootstrap").at("rounds_used").get<int>();
    t.bootstrap_converged = j.at("bootstrap").at("converged").get<bool>();
    t.bootstrap_metrics = metrics_from_json(j.at("bootstrap").at("metrics"));
    std::int64_t prev_round = -1;
    for (const auto& rj : j.at("reports")) {
      RoundReport r = report_from_json(rj);
      if (r.round <= prev_round) throw ConfigError("trace: report rounds not strictly increasing");
      prev_round = r.round;
      t.reports.push_back(std::move(r));
    }
    t.summary = compute_summary(t.reports, resolve_params(t.config).delta_cap);
    if (summary_to_json(t.summary) != j.at("summary"))
      throw ConfigError("trace: stored summary does not match the reports");
  } catch (const json::exception& e) {
    throw ConfigError(path + ": malformed trace: " + e.what());
  }
  return t;
}

std::uint64_t sweep_seed(std::uint64_t master_seed, std::size_t linear_index) {
  std::uint64_t s = master_seed ^ (0x9e3779b97f4a7c15ULL * (linear_index + 1));
  return splitmix64(s);
}

std::vector<SweepPoint> expand_sweep(const json& sweep_config) {
  json base = sweep_config;
  base.erase("sweep");
  base.erase("seeds");
  const json sweep = sweep_config.value("sweep", json::object());
  const std::size_t repeats = sweep_config.value("seeds", std::size_t{1});
  if (repeats < 1) throw ConfigError("sweep: seeds must be >= 1");

  static const char* kAxes[] = {"n", "d", "c", "k", "refresh_prob", "churn_rate",
                                "delta_h", "attachments_per_arrival", "rounds", "metrics_every"};
  for (const auto& [key, _] : sweep.items()) {
    if (std::find_if(std::begin(kAxes), std::end(kAxes),
                     [&](const char* a) { return key == a; }) == std::end(kAxes))
      throw ConfigError("sweep: unsupported axis: " + key);
  }
  std::vector<std::pair<std::string, json>> axes;
  for (const char* key : kAxes) {
    if (!sweep.contains(key)) continue;
    if (!sweep.at(key).is_array() || sweep.at(key).empty())
      throw ConfigError(std::string("sweep: axis ") + key + " must be a non-empty array");
    axes.emplace_back(key, sweep.at(key));
  }

  std::size_t total = 1;
  for (const auto& [_, vals] : axes) total *= vals.size();

  std::vector<SweepPoint> points;
  for (std::size_t idx = 0; idx < total; ++idx) {
    json cfgj = base;
    std::size_t rem = idx;
    for (const auto& [key, vals] : axes) {
      const json& value = vals[rem % vals.size()];
      rem /= vals.size();
      if (key == "churn_rate" || key == "delta_h" || key == "attachments_per_arrival")
        cfgj["adversary"][key] = value;
      else
        cfgj[key] = value;
    }
    const ExperimentConfig point_cfg = config_from_json(cfgj);
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      SweepPoint sp;
      sp.config = point_cfg;
      sp.point_index = idx;
      sp.repeat_index = rep;
      sp.config.seed = sweep_seed(point_cfg.seed, idx * repeats + rep);
      char suffix[64];
      std::snprintf(suffix, sizeof(suffix), "_p%03zu_r%02zu", idx, rep);
      suffix_outputs(sp.config, suffix);
      points.push_back(std::move(sp));
    }
  }
  return points;
}

std::optional<double> median_core_lambda2_tail(const Trace& t, std::int64_t window) {
  if (t.reports.empty()) return std::nullopt;
  const std::int64_t last = t.reports.back().round;
  std::vector<double> vals;
  for (const RoundReport& r : t.reports) {
    if (!r.metrics_sampled || r.round <= last - window) continue;
    if (r.metrics.core_lambda2) vals.push_back(*r.metrics.core_lambda2);
  }
  if (vals.empty()) return std::nullopt;
  return median_of(vals);
}

}  // namespace raes
