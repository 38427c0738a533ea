#include "hems/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hems/error.hpp"

namespace hems {

namespace {

Matrix states_matrix(std::span<const Transition> batch, bool next) {
  Matrix m(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(kStateDim));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& s = next ? batch[i].s_next : batch[i].s;
    for (std::size_t j = 0; j < kStateDim; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s[j];
    }
  }
  return m;
}

Matrix critic_input(const Matrix& states, const Matrix& actions) {
  Matrix x(states.rows(), states.cols() + actions.cols());
  x << states, actions;
  return x;
}

std::string join_doubles(std::initializer_list<double> values) {
  std::string out;
  bool first = true;
  for (double v : values) {
    if (!first) out += ',';
    out += format_double(v);
    first = false;
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

// ---------------------------------------------------------------- replay ---

ReplayBuffer::ReplayBuffer(std::size_t capacity) : storage_(capacity) {
  if (capacity == 0) throw ParameterError("replay buffer capacity must be > 0");
}

void ReplayBuffer::push(const Transition& tr) {
  storage_[head_] = tr;
  head_ = (head_ + 1) % storage_.size();
  size_ = std::min(size_ + 1, storage_.size());
  ++insertions_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw RangeError("replay index " + std::to_string(i) + " out of range");
  const std::size_t oldest = (head_ + storage_.size() - size_) % storage_.size();
  return storage_[(oldest + i) % storage_.size()];
}

std::vector<Transition> ReplayBuffer::sample(std::size_t k, Rng& rng) const {
  if (size_ < k || size_ == 0) {
    throw RangeError("replay buffer holds " + std::to_string(size_) + " transitions, need " +
                     std::to_string(k));
  }
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<Transition> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(at(pick(rng)));
  return out;
}

// ---------------------------------------------------------------- config ---

void TrainConfig::validate() const {
  if (episodes < 0) throw ParameterError("episodes must be >= 0");
  if (slots_per_episode < 1 || kSlotsPerDay % static_cast<std::size_t>(slots_per_episode) != 0) {
    throw ParameterError("slots_per_episode must divide 24");
  }
  if (batch < 1) throw ParameterError("batch must be >= 1");
  if (static_cast<std::size_t>(batch) > buffer_capacity) {
    throw ParameterError("batch must not exceed buffer_capacity");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in [0, 1]");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ParameterError("tau must lie in [0, 1]");
  if (!(alpha_a >= 0.0) || !(alpha_c >= 0.0)) throw ParameterError("learning rates must be >= 0");
  if (!(zeta >= 0.0 && zeta < 1.0)) throw ParameterError("zeta must lie in [0, 1)");
  if (!(xi_min >= 0.0 && xi_min <= 1.0)) throw ParameterError("xi_min must lie in [0, 1]");
  if (actor_hidden.empty() || critic_hidden.empty()) {
    throw ParameterError("actor and critic need at least one hidden layer");
  }
}

TrainConfig TrainConfig::desk_scale() {
  TrainConfig cfg;
  cfg.episodes = 500;
  cfg.buffer_capacity = 2400;
  cfg.zeta = 0.0025;
  cfg.actor_hidden = {64, 64};
  cfg.critic_hidden = {64, 64, 64, 64};
  return cfg;
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& cfg, TrainConfig base) {
  TrainConfig t = base;
  t.episodes = static_cast<int>(cfg.get_int("episodes", t.episodes));
  t.slots_per_episode = static_cast<int>(cfg.get_int("slots_per_episode", t.slots_per_episode));
  t.batch = static_cast<int>(cfg.get_int("batch", t.batch));
  t.buffer_capacity = cfg.get_u64("buffer_capacity", t.buffer_capacity);
  t.gamma = cfg.get_double("gamma", t.gamma);
  t.tau = cfg.get_double("tau", t.tau);
  t.alpha_a = cfg.get_double("alpha_a", t.alpha_a);
  t.alpha_c = cfg.get_double("alpha_c", t.alpha_c);
  t.zeta = cfg.get_double("zeta", t.zeta);
  t.xi_min = cfg.get_double("xi_min", t.xi_min);
  t.seed = cfg.get_u64("seed", t.seed);
  t.actor_hidden = cfg.get_ints("actor_hidden", t.actor_hidden);
  t.critic_hidden = cfg.get_ints("critic_hidden", t.critic_hidden);
  return t;
}

MlpSpec actor_spec(const TrainConfig& cfg, std::uint64_t seed) {
  MlpSpec spec;
  spec.layer_sizes.push_back(static_cast<int>(kStateDim));
  spec.layer_sizes.insert(spec.layer_sizes.end(), cfg.actor_hidden.begin(), cfg.actor_hidden.end());
  spec.layer_sizes.push_back(static_cast<int>(kActionDim));
  spec.output_activations = {Activation::Tanh, Activation::Sigmoid};
  spec.seed = seed;
  return spec;
}

MlpSpec critic_spec(const TrainConfig& cfg, std::uint64_t seed) {
  MlpSpec spec;
  spec.layer_sizes.push_back(static_cast<int>(kStateDim + kActionDim));
  spec.layer_sizes.insert(spec.layer_sizes.end(), cfg.critic_hidden.begin(),
                          cfg.critic_hidden.end());
  spec.layer_sizes.push_back(1);
  spec.output_activations = {Activation::Identity};
  spec.seed = seed;
  return spec;
}

// ------------------------------------------------------------ exploration ---

RawAction denormalize_action(const ActionVector& a, const HomeConfig& home) {
  return {a[0] * std::max(home.c_max, home.d_max), a[1] * home.e_max};
}

double exploration_prob(int episode, const TrainConfig& cfg) {
  const double fill_episodes =
      static_cast<double>(cfg.buffer_capacity) / static_cast<double>(cfg.slots_per_episode);
  const double decayed = 1.0 - cfg.zeta * std::max(0.0, static_cast<double>(episode) - fill_episodes);
  return std::clamp(decayed, cfg.xi_min, 1.0);
}

ActionChoice select_action_train(const Mlp& actor, const StateVector& s_norm, int episode, Rng& rng,
                                 const TrainConfig& cfg, const HomeConfig& home) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double xi = exploration_prob(episode, cfg);
  const double omega = unit(rng);
  ActionChoice choice;
  if (omega > xi) {
    const Eigen::VectorXd y = actor.forward(s_norm);
    choice.normalized = {y(0), y(1)};
  } else {
    const double scale = std::max(home.c_max, home.d_max);
    double f_norm = 0.0;
    if (scale > 0.0) {
      std::uniform_real_distribution<double> f_dist(-home.d_max / scale, home.c_max / scale);
      f_norm = f_dist(rng);
    }
    const double e_norm = unit(rng);
    choice.normalized = {f_norm, e_norm};
    choice.explored = true;
  }
  choice.raw = denormalize_action(choice.normalized, home);
  return choice;
}

// ---------------------------------------------------------------- updates ---

double critic_update(Mlp& critic, const Mlp& critic_target, const Mlp& actor_target,
                     std::span<const Transition> batch, const TrainConfig& cfg) {
  if (batch.empty()) throw RangeError("critic_update: empty batch");
  const auto k = static_cast<Eigen::Index>(batch.size());
  const Matrix s = states_matrix(batch, false);
  const Matrix s_next = states_matrix(batch, true);
  Matrix a(k, static_cast<Eigen::Index>(kActionDim));
  Eigen::VectorXd r(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& tr = batch[static_cast<std::size_t>(i)];
    a(i, 0) = tr.a[0];
    a(i, 1) = tr.a[1];
    r(i) = tr.r;
  }

  const Matrix a_next = actor_target.forward(s_next);
  const Matrix q_next = critic_target.forward(critic_input(s_next, a_next));
  const Eigen::VectorXd y = r + cfg.gamma * q_next.col(0);

  ForwardCache cache;
  const Matrix q = critic.forward(critic_input(s, a), &cache);
  const Eigen::VectorXd diff = q.col(0) - y;
  const double loss = diff.squaredNorm() / static_cast<double>(k);
  if (!std::isfinite(loss)) throw NumericError("critic loss is not finite");

  const Matrix dq = (2.0 / static_cast<double>(k)) * diff;
  const Gradients grads = critic.backward(cache, dq);
  critic.adam_update(grads, cfg.alpha_c);
  return loss;
}

double actor_update(Mlp& actor, const Mlp& critic, std::span<const Transition> batch,
                    const TrainConfig& cfg) {
  if (batch.empty()) throw RangeError("actor_update: empty batch");
  const auto k = static_cast<Eigen::Index>(batch.size());
  const Matrix s = states_matrix(batch, false);

  ForwardCache actor_cache;
  const Matrix a = actor.forward(s, &actor_cache);
  ForwardCache critic_cache;
  const Matrix q = critic.forward(critic_input(s, a), &critic_cache);
  const double mean_q = q.mean();

  // Descend on -mean(Q): dL/dQ_i = -1/K.
  const Matrix dq = Matrix::Constant(k, 1, -1.0 / static_cast<double>(k));
  const Gradients critic_grads = critic.backward(critic_cache, dq, false);
  const Matrix da = critic_grads.input.rightCols(static_cast<Eigen::Index>(kActionDim));
  if (!da.allFinite()) throw NumericError("policy gradient is not finite");
  const Gradients actor_grads = actor.backward(actor_cache, da);
  actor.adam_update(actor_grads, cfg.alpha_a);
  return mean_q;
}

double mean_policy_value(const Mlp& actor, const Mlp& critic, std::span<const Transition> batch) {
  const Matrix s = states_matrix(batch, false);
  return critic.forward(critic_input(s, actor.forward(s))).mean();
}

// ---------------------------------------------------------------- training ---

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

TrainReport train(const TraceSet& traces, const HomeConfig& home, const TrainConfig& cfg,
                  const TrainProgress& progress) {
  cfg.validate();
  home.validate();
  traces.validate();

  Rng master(cfg.seed);
  const std::uint64_t actor_seed = master();
  const std::uint64_t critic_seed = master();
  const std::uint64_t env_seed = master();
  Rng rng(master());

  TrainReport report{.episode_rewards = {},
                     .moving_average = {},
                     .actor = Mlp(actor_spec(cfg, actor_seed)),
                     .critic = Mlp(critic_spec(cfg, critic_seed)),
                     .stats = compute_norm_stats(traces, home),
                     .updates = 0};
  Mlp& actor = report.actor;
  Mlp& critic = report.critic;
  Mlp actor_target = actor;
  Mlp critic_target = critic;

  Environment env(home, traces, env_seed);
  ReplayBuffer buffer(cfg.buffer_capacity);
  const std::size_t days = traces.days();
  const auto k = static_cast<std::size_t>(cfg.batch);
  const auto slots = static_cast<std::size_t>(cfg.slots_per_episode);

  report.episode_rewards.reserve(static_cast<std::size_t>(cfg.episodes));
  for (int episode = 0; episode < cfg.episodes; ++episode) {
    const std::size_t day = static_cast<std::size_t>(episode) % days;
    env.reset(day * kSlotsPerDay, slots);
    StateVector s = preprocess(env.state(), report.stats);
    double total = 0.0;
    while (!env.done()) {
      try {
        const ActionChoice choice = select_action_train(actor, s, episode, rng, cfg, home);
        const StepOutcome out = env.step(choice.raw);
        const StateVector s_next = preprocess(out.next_state, report.stats);
        buffer.push({s, choice.normalized, out.reward, s_next});
        total += out.reward;
        if (buffer.size() >= k) {
          const auto batch = buffer.sample(k, rng);
          critic_update(critic, critic_target, actor_target, batch, cfg);
          actor_update(actor, critic, batch, cfg);
          critic_target.soft_update_from(critic, cfg.tau);
          actor_target.soft_update_from(actor, cfg.tau);
          ++report.updates;
        }
        s = s_next;
      } catch (const NumericError& err) {
        throw NumericError("episode " + std::to_string(episode) + ", slot " +
                           std::to_string(env.steps_taken()) + ": " + err.what());
      }
    }
    report.episode_rewards.push_back(total);
    if (progress) progress(episode, total);
  }
  report.moving_average = moving_average(report.episode_rewards, kRewardWindow);
  return report;
}

void write_train_report(const TrainReport& report, const std::filesystem::path& path) {
  std::string out = "episode,reward,moving_avg\n";
  for (std::size_t i = 0; i < report.episode_rewards.size(); ++i) {
    out += std::to_string(i) + "," + format_double(report.episode_rewards[i]) + "," +
           format_double(report.moving_average[i]) + "\n";
  }
  write_text(path, out);
}

// -------------------------------------------------------------- evaluation ---

double EpisodeLog::total_cost() const {
  double sum = 0.0;
  for (const auto& s : slots) sum += s.c1 + s.c2;
  return sum;
}

double EpisodeLog::total_deviation() const {
  double sum = 0.0;
  for (const auto& s : slots) sum += s.c3;
  return sum;
}

double EpisodeLog::total_reward() const {
  double sum = 0.0;
  for (const auto& s : slots) sum += s.reward;
  return sum;
}

namespace {
constexpr const char* kLogHeader =
    "slot,hour,price,solar,demand,T_out,B,T_in,f,e,g,B_next,T_next,c1,c2,c3,reward,disturbance";
}

void write_episode_log(const EpisodeLog& log, const std::filesystem::path& path) {
  std::string out = std::string(kLogHeader) + "\n";
  for (const auto& r : log.slots) {
    out += std::to_string(r.slot) + "," + std::to_string(r.hour) + "," +
           join_doubles({r.price, r.solar, r.demand, r.T_out, r.B, r.T_in, r.f, r.e, r.g, r.B_next,
                         r.T_next, r.c1, r.c2, r.c3, r.reward, r.disturbance}) +
           "\n";
  }
  write_text(path, out);
}

EpisodeLog load_episode_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kLogHeader) throw SchemaError("unexpected episode log header in " + path.string());
  EpisodeLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_list(line);
    if (cells.size() != 18) throw SchemaError("bad episode log row in " + path.string());
    SlotRecord r;
    r.slot = static_cast<std::size_t>(std::stoull(cells[0]));
    r.hour = std::stoi(cells[1]);
    double* fields[] = {&r.price, &r.solar, &r.demand, &r.T_out, &r.B,  &r.T_in,
                        &r.f,     &r.e,     &r.g,      &r.B_next, &r.T_next, &r.c1,
                        &r.c2,    &r.c3,    &r.reward, &r.disturbance};
    for (std::size_t i = 0; i < 16; ++i) *fields[i] = parse_double(cells[i + 2]);
    log.slots.push_back(r);
  }
  return log;
}

EpisodeLog rollout(const Policy& policy, const TraceSet& traces, const HomeConfig& home,
                   std::size_t start_slot, std::size_t n_slots, std::uint64_t env_seed) {
  Environment env(home, traces, env_seed);
  env.reset(start_slot, n_slots);
  EpisodeLog log;
  log.slots.reserve(n_slots);
  while (!env.done()) {
    const EnvState s = env.state();
    const StepOutcome out = env.step(policy(s));
    SlotRecord r;
    r.slot = s.t;
    r.hour = s.hour;
    r.price = s.v;
    r.solar = s.p;
    r.demand = s.b;
    r.T_out = s.T_out;
    r.B = s.B;
    r.T_in = s.T_in;
    r.f = out.action.f;
    r.e = out.action.e;
    r.g = out.g;
    r.B_next = out.next_state.B;
    r.T_next = out.next_state.T_in;
    r.c1 = out.c1;
    r.c2 = out.c2;
    r.c3 = out.c3;
    r.reward = out.reward;
    r.disturbance = out.disturbance;
    log.slots.push_back(r);
  }
  return log;
}

RawAction actor_action(const Mlp& actor, const NormStats& stats, const EnvState& state,
                       const HomeConfig& home) {
  const StateVector s = preprocess(state, stats);
  const Eigen::VectorXd y = actor.forward(s);
  return denormalize_action({y(0), y(1)}, home);
}

EpisodeLog evaluate(const Mlp& actor, const NormStats& stats, const TraceSet& traces,
                    const HomeConfig& home, std::size_t start_slot, std::size_t n_slots,
                    std::uint64_t env_seed) {
  if (actor.input_dim() != static_cast<int>(kStateDim) ||
      actor.output_dim() != static_cast<int>(kActionDim)) {
    throw ShapeError("evaluate: network is not an actor (7 inputs, 2 outputs)");
  }
  return rollout([&](const EnvState& s) { return actor_action(actor, stats, s, home); }, traces,
                 home, start_slot, n_slots, env_seed);
}

}  // namespace hems
