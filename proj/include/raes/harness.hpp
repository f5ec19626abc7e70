#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "raes/adversary.hpp"
#include "raes/metrics.hpp"
#include "raes/params.hpp"
#include "raes/protocol.hpp"
#include "raes/rng.hpp"

#include "json.hpp"

namespace raes {

struct AdversaryConfig {
  AdversaryStrategy strategy = AdversaryStrategy::uniform;
  std::optional<std::size_t> churn_rate;  // nullopt = "auto" = floor(n / ceil(log2 n)^k)
  int delta_h = 4;
  int attachments_per_arrival = 1;
  std::optional<std::string> replay_file;  // replay a recorded JSONL churn sequence
};

struct OutputConfig {
  std::optional<std::string> csv;
  std::optional<std::string> json;
  std::optional<std::string> churn_events;
};

struct ExperimentConfig {
  std::uint64_t n = 1024;
  int d = 3;
  double c = 2.0;
  int k = 2;
  std::optional<double> refresh_prob;        // default 1 / ceil(log2 n)^k
  std::optional<int> bootstrap_rounds_max;   // default 10 * ceil(log2 n)
  AdversaryConfig adversary;
  std::int64_t rounds = 0;
  std::uint64_t seed = 1;
  std::int64_t metrics_every = 1;
  MetricsFlags metrics_flags;
  double metrics_tol = 1e-6;
  OutputConfig output;
};

ProtocolParams resolve_params(const ExperimentConfig& cfg);
std::size_t resolve_churn_rate(const ExperimentConfig& cfg);

ExperimentConfig config_from_json(const nlohmann::json& j);
// Echoes the fully resolved configuration (computed defaults included).
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config_file(const std::string& path);

struct TraceSummary {
  std::optional<double> min_core_size;
  std::optional<double> median_core_size;
  std::optional<double> min_lambda2;
  std::optional<double> median_lambda2;
  std::int64_t max_below_d_streak = 0;
  std::vector<std::int64_t> overcap_rounds;  // boundaries where max_deg > delta_cap
};

struct Trace {
  ExperimentConfig config;
  int bootstrap_rounds_used = 0;
  bool bootstrap_converged = false;
  MetricsRecord bootstrap_metrics;  // snapshot metrics right after bootstrap
  std::vector<RoundReport> reports;
  TraceSummary summary;
};

struct RngStreams {
  Rng protocol;
  Rng adversary;
  Rng metrics;
};

// Domain-separated deterministic streams; the adversary's draws never mix
// with the protocol's, which is what makes obliviousness observable.
RngStreams derive_streams(std::uint64_t master_seed);

TraceSummary compute_summary(const std::vector<RoundReport>& reports, int delta_cap);

// Bootstrap (adversary silent), then cfg.rounds maintenance rounds with churn.
// Expensive metrics run every metrics_every rounds (and on the final round);
// degree statistics are recorded every round. Configured outputs are written
// before returning.
Trace run_experiment(const ExperimentConfig& cfg);

// Two runs sharing the master seed (hence the same churn sequence), differing
// only in refresh_prob: the configured value vs 0. Requires the fringe_growth
// strategy. Returns {with_refresh, without_refresh}.
std::pair<Trace, Trace> run_comparison_norefresh(const ExperimentConfig& cfg);

void write_trace_csv(const Trace& t, std::ostream& os);
std::string trace_csv_string(const Trace& t);
void write_trace_csv_file(const Trace& t, const std::string& path);
nlohmann::json trace_to_json(const Trace& t);
void write_trace_json_file(const Trace& t, const std::string& path);
// Loads a JSON trace and re-derives the summary from the reports, failing on
// mismatch.
Trace load_trace(const std::string& path);

// Derived seed for sweep point/repeat with a given linear index.
std::uint64_t sweep_seed(std::uint64_t master_seed, std::size_t linear_index);

struct SweepPoint {
  ExperimentConfig config;
  std::size_t point_index = 0;
  std::size_t repeat_index = 0;
};
// Expands config["sweep"] (key -> list of values) times config["seeds"]
// repeats into concrete experiment configs with derived seeds and suffixed
// output paths.
std::vector<SweepPoint> expand_sweep(const nlohmann::json& sweep_config);

// Aggregate over the reports of the final `window` rounds.
std::optional<double> median_core_lambda2_tail(const Trace& t, std::int64_t window);

int cli_main(int argc, const char* const* argv);

}  // namespace raes
