#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hems/config.hpp"
#include "hems/env.hpp"
#include "hems/nn.hpp"
#include "hems/traces.hpp"

namespace hems {

inline constexpr std::size_t kActionDim = 2;
// Network-side action: (f / max(c_max, d_max), e / e_max).
using ActionVector = std::array<double, kActionDim>;

struct Transition {
  StateVector s{};
  ActionVector a{};
  double r = 0.0;
  StateVector s_next{};
};

// Fixed-capacity ring of transitions; the oldest entry is overwritten once full.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& tr);

  // Uniform with replacement. Throws RangeError when fewer than k are stored.
  std::vector<Transition> sample(std::size_t k, Rng& rng) const;

  // i-th stored transition, oldest first.
  const Transition& at(std::size_t i) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return storage_.size(); }
  std::uint64_t insertions() const { return insertions_; }

 private:
  std::vector<Transition> storage_;
  std::size_t head_ = 0;  // next write position
  std::size_t size_ = 0;
  std::uint64_t insertions_ = 0;
};

struct TrainConfig {
  int episodes = 3000;        // M
  int slots_per_episode = 24;  // P
  int batch = 120;            // K
  std::size_t buffer_capacity = 24000;  // N
  double gamma = 0.995;
  double tau = 0.001;
  double alpha_a = 1e-4;
  double alpha_c = 1e-3;
  double zeta = 0.0005;
  double xi_min = 0.1;
  std::uint64_t seed = 0;
  std::vector<int> actor_hidden{300, 600};
  std::vector<int> critic_hidden{300, 600, 600, 600};

  void validate() const;

  // Reduced run that fits a single workstation core; see README.
  static TrainConfig desk_scale();
  static TrainConfig from_config(const KeyValueConfig& cfg, TrainConfig base);
  static TrainConfig from_config(const KeyValueConfig& cfg) { return from_config(cfg, TrainConfig{}); }
};

MlpSpec actor_spec(const TrainConfig& cfg, std::uint64_t seed);
MlpSpec critic_spec(const TrainConfig& cfg, std::uint64_t seed);

// Physical action from a network-side action.
RawAction denormalize_action(const ActionVector& a, const HomeConfig& home);

// Probability of a uniform random action at `episode` (0-based): 1 until the
// replay memory can have filled (N / P episodes), then linear decay by zeta
// per episode down to xi_min.
double exploration_prob(int episode, const TrainConfig& cfg);

struct ActionChoice {
  RawAction raw;
  ActionVector normalized{};
  bool explored = false;
};

ActionChoice select_action_train(const Mlp& actor, const StateVector& s_norm, int episode, Rng& rng,
                                 const TrainConfig& cfg, const HomeConfig& home);

// One Adam step on the critic against y = r + gamma * Q'(s', mu'(s')).
// Returns the pre-update mean squared error.
double critic_update(Mlp& critic, const Mlp& critic_target, const Mlp& actor_target,
                     std::span<const Transition> batch, const TrainConfig& cfg);

// One Adam step on the actor along the sampled deterministic policy gradient.
// Returns mean Q(s, mu(s)) over the batch before the step.
double actor_update(Mlp& actor, const Mlp& critic, std::span<const Transition> batch,
                    const TrainConfig& cfg);

// Q(s, mu(s)) averaged over the batch.
double mean_policy_value(const Mlp& actor, const Mlp& critic, std::span<const Transition> batch);

struct TrainReport {
  std::vector<double> episode_rewards;
  std::vector<double> moving_average;  // trailing window of 50 episodes
  Mlp actor;
  Mlp critic;
  NormStats stats;
  std::uint64_t updates = 0;
};

inline constexpr std::size_t kRewardWindow = 50;

std::vector<double> moving_average(std::span<const double> values, std::size_t window);

using TrainProgress = std::function<void(int episode, double reward)>;

TrainReport train(const TraceSet& traces, const HomeConfig& home, const TrainConfig& cfg,
                  const TrainProgress& progress = {});

void write_train_report(const TrainReport& report, const std::filesystem::path& path);

struct SlotRecord {
  std::size_t slot = 0;
  int hour = 0;
  double price = 0.0;
  double solar = 0.0;
  double demand = 0.0;
  double T_out = 0.0;
  double B = 0.0;     // at the start of the slot
  double T_in = 0.0;  // at the start of the slot
  double f = 0.0;
  double e = 0.0;
  double g = 0.0;
  double B_next = 0.0;
  double T_next = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double reward = 0.0;
  double disturbance = 0.0;
};

struct EpisodeLog {
  std::vector<SlotRecord> slots;

  double total_cost() const;       // sum of c1 + c2
  double total_deviation() const;  // sum of c3
  double total_reward() const;
};

void write_episode_log(const EpisodeLog& log, const std::filesystem::path& path);
EpisodeLog load_episode_log(const std::filesystem::path& path);

using Policy = std::function<RawAction(const EnvState&)>;

// Runs `policy` for n_slots from start_slot. The environment draws its thermal
// disturbance from a generator seeded with env_seed.
EpisodeLog rollout(const Policy& policy, const TraceSet& traces, const HomeConfig& home,
                   std::size_t start_slot, std::size_t n_slots, std::uint64_t env_seed = 0);

// Greedy actor action for a raw state.
RawAction actor_action(const Mlp& actor, const NormStats& stats, const EnvState& state,
                       const HomeConfig& home);

EpisodeLog evaluate(const Mlp& actor, const NormStats& stats, const TraceSet& traces,
                    const HomeConfig& home, std::size_t start_slot, std::size_t n_slots,
                    std::uint64_t env_seed = 0);

}  // namespace hems
