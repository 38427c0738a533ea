// Command-line front end: trace generation, training, evaluation, baselines,
// the offline oracle, experiment sweeps and report regeneration.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hems/agent.hpp"
#include "hems/baselines.hpp"
#include "hems/config.hpp"
#include "hems/error.hpp"
#include "hems/experiment.hpp"
#include "hems/traces.hpp"

namespace fs = std::filesystem;
using namespace hems;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string beta;         // comma separated
  std::string disturbance;  // comma separated
  std::optional<int> episodes;
  std::string out = ".";
  std::string trace;       // training / input trace
  std::string test_trace;  // evaluation trace
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "key = value configuration file");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--beta", o.beta, "cost weight(s), comma separated");
  cmd->add_option("--disturbance", o.disturbance, "thermal disturbance half-width(s) in °F");
  cmd->add_option("--episodes", o.episodes, "training episodes");
  cmd->add_option("--out", o.out, "output directory");
}

KeyValueConfig load_config(const CommonOptions& o) {
  return o.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(o.config_path);
}

void warn_unused(const KeyValueConfig& cfg) {
  for (const auto& key : cfg.unused_keys()) {
    std::cerr << "warning: unused config key '" << key << "'\n";
  }
}

std::vector<double> list_or(const std::string& text, std::vector<double> fallback) {
  return text.empty() ? fallback : parse_double_list(text);
}

HomeConfig home_from(const KeyValueConfig& cfg, const CommonOptions& o) {
  HomeConfig home = HomeConfig::from_config(cfg);
  const auto betas = list_or(o.beta, {home.beta});
  home.beta = betas.front();
  const auto dist = list_or(o.disturbance, {home.disturbance_hi});
  if (dist.front() > 0.0) {
    home.disturbance_lo = -dist.front();
    home.disturbance_hi = dist.front();
  }
  home.validate();
  return home;
}

TrainConfig train_from(const KeyValueConfig& cfg, const CommonOptions& o) {
  const bool paper_scale = cfg.get_bool("paper_scale", false);
  TrainConfig t = TrainConfig::from_config(cfg, paper_scale ? TrainConfig{} : TrainConfig::desk_scale());
  if (o.episodes) t.episodes = *o.episodes;
  if (o.seed) t.seed = *o.seed;
  t.validate();
  return t;
}

TraceSet train_traces_from(const KeyValueConfig& cfg, const CommonOptions& o) {
  if (!o.trace.empty()) return load_trace(o.trace);
  if (cfg.contains("train_trace")) return load_trace(cfg.get_string("train_trace", ""));
  return gen_synthetic(SyntheticTraceSpec::from_config(cfg));
}

TraceSet test_traces_from(const KeyValueConfig& cfg, const CommonOptions& o) {
  if (!o.test_trace.empty()) return load_trace(o.test_trace);
  if (cfg.contains("test_trace")) return load_trace(cfg.get_string("test_trace", ""));
  SyntheticTraceSpec spec = SyntheticTraceSpec::from_config(cfg);
  spec.seed = cfg.get_u64("synthetic.test_seed", spec.seed + 1000);
  return gen_synthetic(spec);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void print_totals(const std::string& label, double cost, double deviation) {
  std::printf("%s: total_energy_cost=%.6f $ total_temp_deviation=%.6f F\n", label.c_str(), cost,
              deviation);
}

std::size_t window_len(const TraceSet& traces, std::size_t start, std::size_t slots) {
  return slots ? slots : traces.horizon_len() - start;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smart-home energy management: DDPG training, baselines and offline oracle"};
  app.require_subcommand(1);

  // gen-traces
  CommonOptions gen_opts;
  auto* gen = app.add_subcommand("gen-traces", "write a synthetic trace CSV");
  add_common(gen, gen_opts);
  std::optional<int> gen_days;
  gen->add_option("--days", gen_days, "number of days");

  // train
  CommonOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "train actor and critic networks");
  add_common(train_cmd, train_opts);
  train_cmd->add_option("--trace", train_opts.trace, "training trace CSV");

  // evaluate
  CommonOptions eval_opts;
  std::string model_dir;
  std::size_t eval_start = 0, eval_slots = 0;
  auto* eval_cmd = app.add_subcommand("evaluate", "run a trained actor greedily");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--model", model_dir, "directory written by 'train'")->required();
  eval_cmd->add_option("--trace", eval_opts.test_trace, "evaluation trace CSV");
  eval_cmd->add_option("--start", eval_start, "first slot");
  eval_cmd->add_option("--slots", eval_slots, "number of slots (default: rest of trace)");

  // baseline
  CommonOptions base_opts;
  std::string baseline_policy = "onoff";
  auto* base_cmd = app.add_subcommand("baseline", "run the ON/OFF or no-ESS baseline");
  add_common(base_cmd, base_opts);
  base_cmd->add_option("--policy", baseline_policy, "onoff | no-ess")
      ->check(CLI::IsMember({"onoff", "no-ess", "baseline1", "baseline2"}));
  base_cmd->add_option("--trace", base_opts.trace, "training trace CSV (no-ess only)");
  base_cmd->add_option("--test-trace", base_opts.test_trace, "evaluation trace CSV");
  base_cmd->add_option("--start", eval_start, "first slot");
  base_cmd->add_option("--slots", eval_slots, "number of slots");

  // oracle
  CommonOptions oracle_opts;
  auto* oracle_cmd = app.add_subcommand("oracle", "perfect-information dynamic programming");
  add_common(oracle_cmd, oracle_opts);
  oracle_cmd->add_option("--trace", oracle_opts.test_trace, "trace CSV");
  oracle_cmd->add_option("--start", eval_start, "first slot");
  oracle_cmd->add_option("--slots", eval_slots, "number of slots");

  // experiment
  CommonOptions exp_opts;
  std::string exp_seeds, exp_policies;
  auto* exp_cmd = app.add_subcommand("experiment", "policy x seed x beta x disturbance sweep");
  add_common(exp_cmd, exp_opts);
  exp_cmd->add_option("--seeds", exp_seeds, "seed list, comma separated");
  exp_cmd->add_option("--policies", exp_policies, "proposed,baseline1,baseline2,oracle");

  // report
  CommonOptions rep_opts;
  std::string rep_in;
  auto* rep_cmd = app.add_subcommand("report", "recompute stats.csv from summaries.csv");
  add_common(rep_cmd, rep_opts);
  rep_cmd->add_option("--in", rep_in, "directory holding summaries.csv")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto cfg = load_config(gen_opts);
      SyntheticTraceSpec spec = SyntheticTraceSpec::from_config(cfg);
      if (gen_opts.seed) spec.seed = *gen_opts.seed;
      if (gen_days) spec.days = *gen_days;
      warn_unused(cfg);
      ensure_dir(gen_opts.out);
      const fs::path path = fs::path(gen_opts.out) / "traces.csv";
      write_trace(gen_synthetic(spec), path);
      std::printf("wrote %s\n", path.string().c_str());
      return 0;
    }

    if (train_cmd->parsed()) {
      const auto cfg = load_config(train_opts);
      const HomeConfig home = home_from(cfg, train_opts);
      const TrainConfig tc = train_from(cfg, train_opts);
      const TraceSet traces = train_traces_from(cfg, train_opts);
      warn_unused(cfg);
      ensure_dir(train_opts.out);
      const TrainReport report = train(traces, home, tc, [&](int ep, double) {
        if ((ep + 1) % 50 == 0) std::fprintf(stderr, "episode %d/%d\n", ep + 1, tc.episodes);
      });
      const fs::path out = train_opts.out;
      report.actor.save(out / "actor.weights");
      report.critic.save(out / "critic.weights");
      write_norm_stats(report.stats, out / "norm_stats.csv");
      write_train_report(report, out / "train_report.csv");
      std::printf("trained %d episodes, %llu updates; final moving average reward %.6f\n",
                  tc.episodes, static_cast<unsigned long long>(report.updates),
                  report.moving_average.empty() ? 0.0 : report.moving_average.back());
      return 0;
    }

    if (eval_cmd->parsed()) {
      const auto cfg = load_config(eval_opts);
      const HomeConfig home = home_from(cfg, eval_opts);
      const TraceSet traces = test_traces_from(cfg, eval_opts);
      warn_unused(cfg);
      const Mlp actor = Mlp::load(fs::path(model_dir) / "actor.weights");
      const NormStats stats = load_norm_stats(fs::path(model_dir) / "norm_stats.csv");
      const EpisodeLog log = evaluate(actor, stats, traces, home, eval_start,
                                      window_len(traces, eval_start, eval_slots),
                                      eval_opts.seed.value_or(0));
      ensure_dir(eval_opts.out);
      write_episode_log(log, fs::path(eval_opts.out) / "episode_log.csv");
      print_totals("proposed", log.total_cost(), log.total_deviation());
      return 0;
    }

    if (base_cmd->parsed()) {
      const auto cfg = load_config(base_opts);
      const HomeConfig home = home_from(cfg, base_opts);
      const TraceSet test = test_traces_from(cfg, base_opts);
      const std::size_t n = window_len(test, eval_start, eval_slots);
      EpisodeLog log;
      std::string label;
      if (baseline_policy == "onoff" || baseline_policy == "baseline1") {
        warn_unused(cfg);
        log = run_baseline1(test, home, eval_start, n, base_opts.seed.value_or(0));
        label = "baseline1";
      } else {
        const TrainConfig tc = train_from(cfg, base_opts);
        const TraceSet train_set = train_traces_from(cfg, base_opts);
        warn_unused(cfg);
        log = run_baseline2(train_set, test, home, tc, eval_start, n, tc.seed);
        label = "baseline2";
      }
      ensure_dir(base_opts.out);
      write_episode_log(log, fs::path(base_opts.out) / "episode_log.csv");
      print_totals(label, log.total_cost(), log.total_deviation());
      return 0;
    }

    if (oracle_cmd->parsed()) {
      const auto cfg = load_config(oracle_opts);
      const HomeConfig home = home_from(cfg, oracle_opts);
      const OracleGrid grid = OracleGrid::from_config(cfg);
      const TraceSet traces = test_traces_from(cfg, oracle_opts);
      warn_unused(cfg);
      const std::size_t n = window_len(traces, eval_start, eval_slots);
      const auto noise = disturbance_sequence(home, oracle_opts.seed.value_or(0), n);
      const OracleResult res = dp_oracle(traces, home, grid, eval_start, n, noise);
      ensure_dir(oracle_opts.out);
      write_oracle_schedule(res, fs::path(oracle_opts.out) / "oracle_schedule.csv");
      print_totals("oracle", res.total_cost, res.total_deviation);
      return 0;
    }

    if (exp_cmd->parsed()) {
      const auto cfg = load_config(exp_opts);
      ExperimentSpec spec = ExperimentSpec::from_config(cfg);
      if (!exp_opts.beta.empty()) spec.betas = parse_double_list(exp_opts.beta);
      if (!exp_opts.disturbance.empty()) spec.disturbances = parse_double_list(exp_opts.disturbance);
      if (exp_opts.episodes) spec.train.episodes = *exp_opts.episodes;
      if (!exp_seeds.empty()) {
        spec.seeds.clear();
        for (double s : parse_double_list(exp_seeds)) spec.seeds.push_back(static_cast<std::uint64_t>(s));
      } else if (exp_opts.seed) {
        spec.seeds = {*exp_opts.seed};
      }
      if (!exp_policies.empty()) {
        spec.policies.clear();
        for (const auto& p : split_list(exp_policies)) spec.policies.push_back(policy_from_string(p));
      }
      warn_unused(cfg);
      const auto runs = run_experiment(spec, [](const RunSummary& r) {
        std::fprintf(stderr, "%-9s seed=%llu beta=%g dist=%g %s cost=%.4f dev=%.4f (%.1fs)%s%s\n",
                     to_string(r.policy).c_str(), static_cast<unsigned long long>(r.seed), r.beta,
                     r.disturbance, r.ok ? "ok" : "FAILED", r.total_energy_cost,
                     r.total_temp_deviation, r.wall_time_s, r.ok ? "" : ": ", r.error.c_str());
      });
      const auto stats = summarize(runs);
      emit_report(runs, stats, "csv", exp_opts.out);
      bool all_ok = true;
      for (const auto& r : runs) all_ok = all_ok && r.ok;
      std::printf("%zu cells, report in %s\n", runs.size(), exp_opts.out.c_str());
      return all_ok ? 0 : 1;
    }

    if (rep_cmd->parsed()) {
      const auto runs = read_summaries_csv(fs::path(rep_in) / "summaries.csv");
      ensure_dir(rep_opts.out);
      write_stats_csv(summarize(runs), fs::path(rep_opts.out) / "stats.csv");
      std::printf("wrote %s\n", (fs::path(rep_opts.out) / "stats.csv").string().c_str());
      bool all_ok = true;
      for (const auto& r : runs) all_ok = all_ok && r.ok;
      return all_ok ? 0 : 1;
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  }
  return 0;
}
