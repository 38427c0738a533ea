#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hems/agent.hpp"
#include "hems/env.hpp"

namespace hems {

// Thermostat with hysteresis: switches on above T_max, off below T_min and
// keeps its mode inside the band. Never touches the ESS.
class OnOffController {
 public:
  explicit OnOffController(bool initially_on = false) : on_(initially_on) {}

  RawAction operator()(const EnvState& state, const HomeConfig& home);
  bool on() const { return on_; }

 private:
  bool on_;
};

EpisodeLog run_baseline1(const TraceSet& traces, const HomeConfig& home, std::size_t start_slot,
                         std::size_t n_slots, std::uint64_t env_seed = 0);

// Copy of `home` with the ESS disabled (c_max = d_max = 0).
HomeConfig without_ess(const HomeConfig& home);

// DDPG trained and evaluated without the ESS.
EpisodeLog run_baseline2(const TraceSet& train_traces, const TraceSet& test_traces,
                         const HomeConfig& home, const TrainConfig& cfg, std::size_t start_slot,
                         std::size_t n_slots, std::uint64_t env_seed = 0,
                         TrainReport* report = nullptr);

struct OracleGrid {
  double B_step = 0.1;     // kWh
  double T_step = 0.5;     // °F
  double T_margin = 10.0;  // grid spans [T_min - margin, T_max + margin], anchored on T_min
  int f_levels = 13;       // evenly spaced over [-d_max, c_max]
  int e_levels = 9;        // evenly spaced over [0, e_max]
  double comfort_penalty = 1e6;  // $ per °F of deviation
  // Adds the HVAC power that lands exactly on T_max as an extra candidate.
  bool band_edge_action = true;

  void validate() const;
  // Half the state steps and 2n - 1 action levels; the coarse grid is a subset.
  OracleGrid refined() const;

  static OracleGrid from_config(const KeyValueConfig& cfg, OracleGrid base);
  static OracleGrid from_config(const KeyValueConfig& cfg) { return from_config(cfg, OracleGrid{}); }
};

struct OracleSlot {
  std::size_t slot = 0;
  double price = 0.0;
  double f = 0.0;
  double e = 0.0;
  double g = 0.0;
  double B = 0.0;     // at the start of the slot
  double T_in = 0.0;  // at the start of the slot
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;  // at the end of the slot
};

struct OracleResult {
  double total_cost = 0.0;       // sum of c1 + c2
  double total_deviation = 0.0;  // sum of c3
  std::vector<OracleSlot> schedule;
};

// Perfect-information minimum of sum(c1 + c2) + penalty * sum(c3) by backward
// induction on a (B, T_in) grid with multilinear interpolation, followed by a
// forward pass on the continuous dynamics. `disturbance`, when non-empty,
// holds the known thermal disturbance of each slot. Throws InfeasibleError if
// some slot leaves the comfort band although no HVAC setting could avoid it.
OracleResult dp_oracle(const TraceSet& traces, const HomeConfig& home, const OracleGrid& grid,
                       std::size_t start_slot, std::size_t horizon,
                       std::span<const double> disturbance = {});

void write_oracle_schedule(const OracleResult& result, const std::filesystem::path& path);

}  // namespace hems
