#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hems/agent.hpp"
#include "hems/baselines.hpp"
#include "hems/config.hpp"
#include "hems/traces.hpp"

namespace hems {

enum class PolicyId { Proposed, Baseline1, Baseline2, Oracle };

std::string to_string(PolicyId id);
PolicyId policy_from_string(const std::string& name);

// Either a CSV file or a synthetic generator spec.
struct TraceSource {
  std::optional<std::filesystem::path> file;
  SyntheticTraceSpec synthetic;

  TraceSet load() const;
};

struct ExperimentSpec {
  TraceSource train_traces;
  TraceSource test_traces{.file = {}, .synthetic = {.seed = 1001}};
  HomeConfig home;
  TrainConfig train = TrainConfig::desk_scale();
  OracleGrid oracle;
  std::size_t eval_start = 0;
  std::size_t eval_slots = 0;  // 0 = to the end of the test trace
  std::vector<PolicyId> policies{PolicyId::Proposed, PolicyId::Baseline1};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> betas{0.6};
  std::vector<double> disturbances{0.0};  // symmetric half-widths: U[-d, d] °F

  void validate() const;

  // Reads home, train, synthetic.*, oracle.* and experiment.* keys.
  static ExperimentSpec from_config(const KeyValueConfig& cfg);
};

struct RunSummary {
  PolicyId policy = PolicyId::Proposed;
  std::uint64_t seed = 0;
  double beta = 0.0;
  double disturbance = 0.0;
  bool ok = true;
  std::string error;
  double total_energy_cost = 0.0;     // $
  double total_temp_deviation = 0.0;  // °F·slots
  double wall_time_s = 0.0;           // not written to reports
  EpisodeLog log;                     // empty for the oracle
  std::vector<OracleSlot> oracle_schedule;
  std::vector<double> episode_rewards;  // training curve for learned policies
  std::shared_ptr<const TrainReport> model;  // learned policies only
};

// Seed of the environment's disturbance generator for one cell. Shared by all
// policies so they face the same disturbance realizations.
std::uint64_t cell_env_seed(std::uint64_t seed, double disturbance);

using ExperimentProgress = std::function<void(const RunSummary&)>;

// Runs the policy x seed x beta x disturbance product. A failing cell is
// recorded with ok == false; the rest still run.
std::vector<RunSummary> run_experiment(const ExperimentSpec& spec,
                                       const ExperimentProgress& progress = {});

struct StatsRow {
  std::string policy;
  double beta = 0.0;
  double disturbance = 0.0;
  std::size_t n = 0;
  std::size_t failures = 0;
  double cost_mean = 0.0;
  double cost_std = 0.0;      // NaN when n < 2
  double cost_ci_low = 0.0;   // NaN when n < 2
  double cost_ci_high = 0.0;
  double dev_mean = 0.0;
  double dev_std = 0.0;
  double dev_ci_low = 0.0;
  double dev_ci_high = 0.0;

  bool ci_available() const { return n >= 2; }
};

// Per (policy, beta, disturbance): mean, sample std and normal-approximation
// 95% interval of both totals over the successful seeds.
std::vector<StatsRow> summarize(std::span<const RunSummary> runs);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

void write_stats_csv(std::span<const StatsRow> stats, const std::filesystem::path& path);
std::vector<StatsRow> read_stats_csv(const std::filesystem::path& path);

void write_summaries_csv(std::span<const RunSummary> runs, const std::filesystem::path& path);
// Reads the scalar columns back; logs and curves are not part of the file.
std::vector<RunSummary> read_summaries_csv(const std::filesystem::path& path);

// Writes stats.csv, summaries.csv, training_curves.csv, hourly_series.csv and
// one episode log per cell under logs/. Only "csv" is supported.
void emit_report(std::span<const RunSummary> runs, std::span<const StatsRow> stats,
                 const std::string& format, const std::filesystem::path& dir);

std::string log_file_name(const RunSummary& run);

}  // namespace hems
