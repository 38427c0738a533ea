#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "hems/home.hpp"
#include "hems/traces.hpp"

namespace hems {

using Rng = std::mt19937_64;

// Unconstrained action as proposed by a policy.
struct RawAction {
  double f = 0.0;  // ESS power, + charge / - discharge (kW)
  double e = 0.0;  // HVAC input power (kW)
};

// Action after feasibility clipping. Charging and discharging parts are
// derived from the single signed f, so c * d == 0 by construction.
struct FeasibleAction {
  double f = 0.0;
  double e = 0.0;

  double charge() const { return f > 0.0 ? f : 0.0; }
  double discharge() const { return f < 0.0 ? f : 0.0; }
};

struct StepOutcome {
  EnvState next_state;
  FeasibleAction action;
  double reward = 0.0;
  double c1 = 0.0;  // energy cost, $
  double c2 = 0.0;  // depreciation, $
  double c3 = 0.0;  // comfort deviation at the new indoor temperature, °F
  double g = 0.0;   // grid power, kW (negative = export)
  double disturbance = 0.0;
};

// Initial state of an episode starting at a day boundary.
EnvState reset(const HomeConfig& config, const TraceSet& traces, std::size_t start_slot);

FeasibleAction clip_action(const RawAction& raw, const EnvState& state, const HomeConfig& config);

double ess_step(double B, double f, const HomeConfig& config);

double thermal_step(double T_in, double T_out, double e, const HomeConfig& config,
                    double disturbance = 0.0);

// Power balance g + p - d = b + e + c, solved for g.
double grid_power(const EnvState& state, const FeasibleAction& act);

double energy_cost(double g, double v, const HomeConfig& config);

double depreciation_cost(double f, const HomeConfig& config);

double comfort_penalty(double T_in, const HomeConfig& config);

double draw_disturbance(const HomeConfig& config, Rng& rng);

// Disturbance realizations an Environment seeded with `seed` will apply over
// its first `n` steps. Lets perfect-information planners see the same noise.
std::vector<double> disturbance_sequence(const HomeConfig& config, std::uint64_t seed,
                                         std::size_t n);

// One transition. Exogenous channels of the next state are read at t + 1,
// wrapping to slot 0 past the end of the trace.
StepOutcome step(const EnvState& state, const RawAction& raw, const TraceSet& traces,
                 const HomeConfig& config, Rng& rng);

// Stateful wrapper: owns the trace, the disturbance generator and the episode
// cursor. Single-threaded.
class Environment {
 public:
  Environment(HomeConfig config, TraceSet traces, std::uint64_t seed = 0);

  // Starts an episode of `n_slots` transitions at `start_slot`.
  const EnvState& reset(std::size_t start_slot, std::size_t n_slots = kSlotsPerDay);
  StepOutcome step(const RawAction& raw);

  const EnvState& state() const { return state_; }
  const HomeConfig& config() const { return config_; }
  const TraceSet& traces() const { return traces_; }
  bool done() const { return steps_taken_ >= episode_len_; }
  std::size_t steps_taken() const { return steps_taken_; }

 private:
  HomeConfig config_;
  TraceSet traces_;
  Rng rng_;
  EnvState state_;
  std::size_t episode_len_ = 0;
  std::size_t steps_taken_ = 0;
};

}  // namespace hems
