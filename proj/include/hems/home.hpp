#pragma once

#include <cstddef>

#include "hems/config.hpp"

namespace hems {

// Physical and economic parameters of the home. Temperatures in °F, power in
// kW, energy in kWh, money in $. Defaults follow the published parameter table.
struct HomeConfig {
  double eta_c = 0.95;  // charging efficiency
  double eta_d = 0.95;  // discharging efficiency
  double B_min = 0.6;
  double B_max = 6.0;
  double B_0 = 1.2;
  double c_max = 3.0;
  double d_max = 3.0;
  double e_max = 2.0;
  double T_min = 66.2;
  double T_max = 75.2;
  double epsilon = 0.7;   // thermal inertia
  double eta_hvac = 2.5;  // coefficient of performance
  double A = 0.14;        // thermal conductivity, kW/°F
  double psi = 0.01;      // ESS depreciation, $/kW
  double beta = 1.0;      // cost weight in the reward
  double delta_sell = 0.9;
  double disturbance_lo = 0.0;
  double disturbance_hi = 0.0;
  double T_in_0 = 70.7;
  double norm_temp_margin = 15.0;  // padding around the comfort band for input scaling

  // Throws ParameterError on the first violated invariant.
  void validate() const;

  bool has_disturbance() const { return disturbance_hi > disturbance_lo; }

  // Overlay any keys present in `cfg` (key names match the field names).
  static HomeConfig from_config(const KeyValueConfig& cfg, HomeConfig base);
  static HomeConfig from_config(const KeyValueConfig& cfg) { return from_config(cfg, HomeConfig{}); }
};

// The MDP state s_t = (p, b, B, T_out, T_in, v, hour) plus the absolute slot.
struct EnvState {
  std::size_t t = 0;
  double p = 0.0;      // solar, kW
  double b = 0.0;      // non-shiftable demand, kW
  double B = 0.0;      // stored energy, kWh
  double T_out = 0.0;  // °F
  double T_in = 0.0;   // °F
  double v = 0.0;      // buy price, $/kWh
  int hour = 0;        // t mod 24
};

}  // namespace hems
