#include "hems/experiment.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "hems/error.hpp"

namespace hems {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::string& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw SchemaError("unexpected header in " + path.string());
  }
  const std::size_t ncols = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != ncols) throw SchemaError("bad row in " + path.string());
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string fmt(double v) { return std::isnan(v) ? "NA" : format_double(v); }

struct MeanCi {
  double mean = 0.0, std = NAN, lo = NAN, hi = NAN;
};

MeanCi mean_ci(const std::vector<double>& xs) {
  MeanCi out;
  if (xs.empty()) {
    out.mean = NAN;
    return out;
  }
  const double n = static_cast<double>(xs.size());
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / (n - 1.0));
  const double half = 1.96 * out.std / std::sqrt(n);
  out.lo = out.mean - half;
  out.hi = out.mean + half;
  return out;
}

std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

std::string to_string(PolicyId id) {
  switch (id) {
    case PolicyId::Proposed:
      return "proposed";
    case PolicyId::Baseline1:
      return "baseline1";
    case PolicyId::Baseline2:
      return "baseline2";
    case PolicyId::Oracle:
      return "oracle";
  }
  return "proposed";
}

PolicyId policy_from_string(const std::string& name) {
  if (name == "proposed") return PolicyId::Proposed;
  if (name == "baseline1") return PolicyId::Baseline1;
  if (name == "baseline2") return PolicyId::Baseline2;
  if (name == "oracle" || name == "baseline3") return PolicyId::Oracle;
  throw ParameterError("unknown policy '" + name + "'");
}

TraceSet TraceSource::load() const {
  if (file) return load_trace(*file);
  return gen_synthetic(synthetic);
}

void ExperimentSpec::validate() const {
  home.validate();
  train.validate();
  oracle.validate();
  if (seeds.empty()) throw ParameterError("experiment needs at least one seed");
  if (betas.empty()) throw ParameterError("experiment needs at least one beta");
  if (policies.empty()) throw ParameterError("experiment needs at least one policy");
  for (double b : betas) {
    if (!(b > 0.0)) throw ParameterError("beta values must be > 0");
  }
  if (disturbances.empty()) throw ParameterError("experiment needs at least one disturbance level");
  for (double d : disturbances) {
    if (!(d >= 0.0)) throw ParameterError("disturbance levels must be >= 0");
  }
}

ExperimentSpec ExperimentSpec::from_config(const KeyValueConfig& cfg) {
  ExperimentSpec spec;
  spec.home = HomeConfig::from_config(cfg);
  spec.train = TrainConfig::from_config(cfg, TrainConfig::desk_scale());
  spec.oracle = OracleGrid::from_config(cfg);

  SyntheticTraceSpec synthetic = SyntheticTraceSpec::from_config(cfg);
  spec.train_traces.synthetic = synthetic;
  spec.test_traces.synthetic = synthetic;
  spec.test_traces.synthetic.seed = cfg.get_u64("synthetic.test_seed", synthetic.seed + 1000);
  if (cfg.contains("train_trace")) spec.train_traces.file = cfg.get_string("train_trace", "");
  if (cfg.contains("test_trace")) spec.test_traces.file = cfg.get_string("test_trace", "");

  spec.eval_start = cfg.get_u64("experiment.eval_start", spec.eval_start);
  spec.eval_slots = cfg.get_u64("experiment.eval_slots", spec.eval_slots);
  if (cfg.contains("experiment.policies")) {
    spec.policies.clear();
    for (const auto& p : cfg.get_strings("experiment.policies", {})) {
      spec.policies.push_back(policy_from_string(p));
    }
  }
  if (cfg.contains("experiment.seeds")) {
    spec.seeds.clear();
    for (double s : cfg.get_doubles("experiment.seeds", {})) {
      spec.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  spec.betas = cfg.get_doubles("experiment.betas", spec.betas);
  spec.disturbances = cfg.get_doubles("experiment.disturbances", spec.disturbances);
  return spec;
}

std::uint64_t cell_env_seed(std::uint64_t seed, double disturbance) {
  return splitmix64(seed ^ splitmix64(std::bit_cast<std::uint64_t>(disturbance)));
}

std::vector<RunSummary> run_experiment(const ExperimentSpec& spec,
                                       const ExperimentProgress& progress) {
  spec.validate();
  const TraceSet train_traces = spec.train_traces.load();
  const TraceSet test_traces = spec.test_traces.load();
  train_traces.validate();
  test_traces.validate();
  const std::size_t n_slots =
      spec.eval_slots ? spec.eval_slots : test_traces.horizon_len() - spec.eval_start;

  // Trained networks do not depend on the evaluation disturbance; reuse them
  // across disturbance levels.
  std::map<std::tuple<int, std::uint64_t, double>, std::shared_ptr<TrainReport>> trained;
  std::map<std::uint64_t, std::shared_ptr<OracleResult>> oracles;

  std::vector<RunSummary> runs;
  for (PolicyId policy : spec.policies) {
    for (std::uint64_t seed : spec.seeds) {
      for (double beta : spec.betas) {
        for (double dist : spec.disturbances) {
          RunSummary run;
          run.policy = policy;
          run.seed = seed;
          run.beta = beta;
          run.disturbance = dist;
          const auto started = std::chrono::steady_clock::now();

          HomeConfig home = spec.home;
          home.beta = beta;
          HomeConfig eval_home = home;
          eval_home.disturbance_lo = -dist;
          eval_home.disturbance_hi = dist;
          const std::uint64_t env_seed = cell_env_seed(seed, dist);

          try {
            switch (policy) {
              case PolicyId::Baseline1:
                run.log = run_baseline1(test_traces, eval_home, spec.eval_start, n_slots, env_seed);
                break;
              case PolicyId::Proposed:
              case PolicyId::Baseline2: {
                const bool no_ess = policy == PolicyId::Baseline2;
                const HomeConfig train_home = no_ess ? without_ess(home) : home;
                const HomeConfig run_home = no_ess ? without_ess(eval_home) : eval_home;
                auto key = std::make_tuple(static_cast<int>(policy), seed, beta);
                auto& slot = trained[key];
                if (!slot) {
                  TrainConfig cfg = spec.train;
                  cfg.seed = seed;
                  slot = std::make_shared<TrainReport>(train(train_traces, train_home, cfg));
                }
                run.episode_rewards = slot->episode_rewards;
                run.model = slot;
                run.log = evaluate(slot->actor, slot->stats, test_traces, run_home,
                                   spec.eval_start, n_slots, env_seed);
                break;
              }
              case PolicyId::Oracle: {
                const std::uint64_t key = dist > 0.0 ? env_seed : 0;
                auto& slot = oracles[key];
                if (!slot) {
                  const auto noise = disturbance_sequence(eval_home, env_seed, n_slots);
                  slot = std::make_shared<OracleResult>(
                      dp_oracle(test_traces, eval_home, spec.oracle, spec.eval_start, n_slots, noise));
                }
                run.oracle_schedule = slot->schedule;
                run.total_energy_cost = slot->total_cost;
                run.total_temp_deviation = slot->total_deviation;
                break;
              }
            }
            if (policy != PolicyId::Oracle) {
              run.total_energy_cost = run.log.total_cost();
              run.total_temp_deviation = run.log.total_deviation();
            }
          } catch (const std::exception& err) {
            run.ok = false;
            run.error = err.what();
          }
          run.wall_time_s =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
          if (progress) progress(run);
          runs.push_back(std::move(run));
        }
      }
    }
  }
  return runs;
}

std::vector<StatsRow> summarize(std::span<const RunSummary> runs) {
  // Keep first-appearance order of cells.
  std::vector<std::tuple<std::string, double, double>> keys;
  std::map<std::tuple<std::string, double, double>, std::vector<const RunSummary*>> groups;
  for (const auto& r : runs) {
    auto key = std::make_tuple(to_string(r.policy), r.beta, r.disturbance);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<StatsRow> out;
  for (const auto& key : keys) {
    std::vector<double> costs, devs;
    StatsRow row;
    std::tie(row.policy, row.beta, row.disturbance) = key;
    for (const RunSummary* r : groups[key]) {
      if (!r->ok) {
        ++row.failures;
        continue;
      }
      costs.push_back(r->total_energy_cost);
      devs.push_back(r->total_temp_deviation);
    }
    row.n = costs.size();
    const MeanCi c = mean_ci(costs);
    const MeanCi d = mean_ci(devs);
    row.cost_mean = c.mean;
    row.cost_std = c.std;
    row.cost_ci_low = c.lo;
    row.cost_ci_high = c.hi;
    row.dev_mean = d.mean;
    row.dev_std = d.std;
    row.dev_ci_low = d.lo;
    row.dev_ci_high = d.hi;
    out.push_back(row);
  }
  return out;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ParameterError("spearman needs two equal-length samples of size >= 2");
  }
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

namespace {
constexpr const char* kStatsHeader =
    "policy,beta,disturbance,n,failures,cost_mean,cost_std,cost_ci_low,cost_ci_high,dev_mean,"
    "dev_std,dev_ci_low,dev_ci_high";
constexpr const char* kSummaryHeader =
    "policy,seed,beta,disturbance,status,total_energy_cost,total_temp_deviation,error";
}  // namespace

void write_stats_csv(std::span<const StatsRow> stats, const std::filesystem::path& path) {
  std::string out = std::string(kStatsHeader) + "\n";
  for (const auto& s : stats) {
    out += s.policy + "," + fmt(s.beta) + "," + fmt(s.disturbance) + "," + std::to_string(s.n) +
           "," + std::to_string(s.failures);
    for (double v : {s.cost_mean, s.cost_std, s.cost_ci_low, s.cost_ci_high, s.dev_mean, s.dev_std,
                     s.dev_ci_low, s.dev_ci_high}) {
      out += "," + fmt(v);
    }
    out += "\n";
  }
  write_text(path, out);
}

std::vector<StatsRow> read_stats_csv(const std::filesystem::path& path) {
  std::vector<StatsRow> out;
  for (const auto& c : read_csv(path, kStatsHeader)) {
    StatsRow s;
    s.policy = c[0];
    s.beta = parse_double(c[1]);
    s.disturbance = parse_double(c[2]);
    s.n = static_cast<std::size_t>(std::stoull(c[3]));
    s.failures = static_cast<std::size_t>(std::stoull(c[4]));
    double* fields[] = {&s.cost_mean, &s.cost_std, &s.cost_ci_low, &s.cost_ci_high,
                        &s.dev_mean,  &s.dev_std,  &s.dev_ci_low,  &s.dev_ci_high};
    for (std::size_t i = 0; i < 8; ++i) *fields[i] = parse_double(c[5 + i]);
    out.push_back(s);
  }
  return out;
}

void write_summaries_csv(std::span<const RunSummary> runs, const std::filesystem::path& path) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (const auto& r : runs) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out += to_string(r.policy) + "," + std::to_string(r.seed) + "," + fmt(r.beta) + "," +
           fmt(r.disturbance) + "," + (r.ok ? "ok" : "failed") + "," +
           fmt(r.total_energy_cost) + "," + fmt(r.total_temp_deviation) + "," + err + "\n";
  }
  write_text(path, out);
}

std::vector<RunSummary> read_summaries_csv(const std::filesystem::path& path) {
  std::vector<RunSummary> out;
  for (const auto& c : read_csv(path, kSummaryHeader)) {
    RunSummary r;
    r.policy = policy_from_string(c[0]);
    r.seed = std::stoull(c[1]);
    r.beta = parse_double(c[2]);
    r.disturbance = parse_double(c[3]);
    r.ok = c[4] == "ok";
    r.total_energy_cost = parse_double(c[5]);
    r.total_temp_deviation = parse_double(c[6]);
    r.error = c[7];
    out.push_back(std::move(r));
  }
  return out;
}

std::string log_file_name(const RunSummary& run) {
  return to_string(run.policy) + "_seed" + std::to_string(run.seed) + "_beta" + fmt(run.beta) +
         "_dist" + fmt(run.disturbance) + ".csv";
}

void emit_report(std::span<const RunSummary> runs, std::span<const StatsRow> stats,
                 const std::string& format, const std::filesystem::path& dir) {
  if (format != "csv") throw ParameterError("unsupported report format '" + format + "'");
  std::error_code ec;
  std::filesystem::create_directories(dir / "logs", ec);
  if (ec) throw IoError("cannot create " + (dir / "logs").string() + ": " + ec.message());

  write_stats_csv(stats, dir / "stats.csv");
  write_summaries_csv(runs, dir / "summaries.csv");

  std::string curves = "policy,seed,beta,episode,reward,moving_avg\n";
  std::string hourly = "policy,seed,beta,disturbance,slot,hour,price,hvac_kw,ess_kwh,T_in\n";
  for (const auto& r : runs) {
    if (!r.ok) continue;
    const std::string prefix = to_string(r.policy) + "," + std::to_string(r.seed) + "," + fmt(r.beta);
    // Curves are identical across disturbance levels; emit them once.
    if (!r.episode_rewards.empty() && r.disturbance == 0.0) {
      const auto avg = moving_average(r.episode_rewards, kRewardWindow);
      for (std::size_t i = 0; i < r.episode_rewards.size(); ++i) {
        curves += prefix + "," + std::to_string(i) + "," + fmt(r.episode_rewards[i]) + "," +
                  fmt(avg[i]) + "\n";
      }
    }
    const std::string cell = prefix + "," + fmt(r.disturbance) + ",";
    for (const auto& s : r.log.slots) {
      hourly += cell + std::to_string(s.slot) + "," + std::to_string(s.hour) + "," + fmt(s.price) +
                "," + fmt(s.e) + "," + fmt(s.B) + "," + fmt(s.T_in) + "\n";
    }
    for (const auto& s : r.oracle_schedule) {
      hourly += cell + std::to_string(s.slot) + "," + std::to_string(s.slot % kSlotsPerDay) + "," +
                fmt(s.price) + "," + fmt(s.e) + "," + fmt(s.B) + "," + fmt(s.T_in) + "\n";
    }
    if (r.policy == PolicyId::Oracle) {
      OracleResult res;
      res.schedule = r.oracle_schedule;
      res.total_cost = r.total_energy_cost;
      res.total_deviation = r.total_temp_deviation;
      write_oracle_schedule(res, dir / "logs" / log_file_name(r));
    } else {
      write_episode_log(r.log, dir / "logs" / log_file_name(r));
    }
  }
  write_text(dir / "training_curves.csv", curves);
  write_text(dir / "hourly_series.csv", hourly);
}

}  // namespace hems
