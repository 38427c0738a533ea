#include "hems/env.hpp"

#include <algorithm>
#include <cmath>

#include "hems/error.hpp"

namespace hems {

void HomeConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw ParameterError(what);
  };
  require(eta_c > 0.0 && eta_c <= 1.0, "eta_c must lie in (0, 1]");
  require(eta_d > 0.0 && eta_d <= 1.0, "eta_d must lie in (0, 1]");
  require(B_min < B_max, "B_min must be < B_max");
  require(B_min <= B_0 && B_0 <= B_max, "B_0 must lie in [B_min, B_max]");
  require(c_max >= 0.0 && d_max >= 0.0 && e_max >= 0.0, "power limits must be >= 0");
  require(T_min < T_max, "T_min must be < T_max");
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  require(eta_hvac > 0.0, "eta_hvac must be > 0");
  require(A > 0.0, "A must be > 0");
  require(psi >= 0.0, "psi must be >= 0");
  require(beta >= 0.0, "beta must be >= 0");
  require(delta_sell >= 0.0 && delta_sell <= 1.0, "delta_sell must lie in [0, 1]");
  require(disturbance_lo <= 0.0 && 0.0 <= disturbance_hi,
          "disturbance bounds must satisfy lo <= 0 <= hi");
  require(norm_temp_margin >= 0.0, "norm_temp_margin must be >= 0");
  require(std::isfinite(T_in_0), "T_in_0 must be finite");
}

HomeConfig HomeConfig::from_config(const KeyValueConfig& cfg, HomeConfig base) {
  HomeConfig h = base;
  h.eta_c = cfg.get_double("eta_c", h.eta_c);
  h.eta_d = cfg.get_double("eta_d", h.eta_d);
  h.B_min = cfg.get_double("B_min", h.B_min);
  h.B_max = cfg.get_double("B_max", h.B_max);
  h.B_0 = cfg.get_double("B_0", h.B_0);
  h.c_max = cfg.get_double("c_max", h.c_max);
  h.d_max = cfg.get_double("d_max", h.d_max);
  h.e_max = cfg.get_double("e_max", h.e_max);
  h.T_min = cfg.get_double("T_min", h.T_min);
  h.T_max = cfg.get_double("T_max", h.T_max);
  h.epsilon = cfg.get_double("epsilon", h.epsilon);
  h.eta_hvac = cfg.get_double("eta_hvac", h.eta_hvac);
  h.A = cfg.get_double("A", h.A);
  h.psi = cfg.get_double("psi", h.psi);
  h.beta = cfg.get_double("beta", h.beta);
  h.delta_sell = cfg.get_double("delta_sell", h.delta_sell);
  h.disturbance_lo = cfg.get_double("disturbance_lo", h.disturbance_lo);
  h.disturbance_hi = cfg.get_double("disturbance_hi", h.disturbance_hi);
  h.T_in_0 = cfg.get_double("T_in_0", h.T_in_0);
  h.norm_temp_margin = cfg.get_double("norm_temp_margin", h.norm_temp_margin);
  return h;
}

namespace {

void fill_exogenous(EnvState& s, const TraceSet& traces, std::size_t slot) {
  const std::size_t i = slot % traces.horizon_len();
  s.p = traces.solar_kw[i];
  s.b = traces.demand_kw[i];
  s.T_out = traces.outdoor_f[i];
  s.v = traces.price_buy[i];
  s.hour = static_cast<int>(slot % kSlotsPerDay);
}

}  // namespace

EnvState reset(const HomeConfig& config, const TraceSet& traces, std::size_t start_slot) {
  if (start_slot % kSlotsPerDay != 0) {
    throw RangeError("start slot " + std::to_string(start_slot) + " is not a day boundary");
  }
  if (start_slot + kSlotsPerDay > traces.horizon_len()) {
    throw RangeError("start slot " + std::to_string(start_slot) + " leaves less than a day in a " +
                     std::to_string(traces.horizon_len()) + "-slot trace");
  }
  EnvState s;
  s.t = start_slot;
  fill_exogenous(s, traces, start_slot);
  s.B = config.B_0;
  s.T_in = config.T_in_0;
  return s;
}

FeasibleAction clip_action(const RawAction& raw, const EnvState& state, const HomeConfig& config) {
  if (!std::isfinite(raw.f) || !std::isfinite(raw.e)) {
    throw NumericError("non-finite action (f=" + std::to_string(raw.f) +
                       ", e=" + std::to_string(raw.e) + ")");
  }
  FeasibleAction out;
  out.e = std::clamp(raw.e, 0.0, config.e_max);
  if (state.T_in < config.T_min) out.e = 0.0;

  // Headroom can go slightly negative through rounding; never flip sign.
  const double upper = std::max(0.0, std::min(config.c_max, (config.B_max - state.B) / config.eta_c));
  const double lower = std::min(0.0, std::max(-config.d_max, (config.B_min - state.B) * config.eta_d));
  out.f = std::clamp(raw.f, lower, upper);
  return out;
}

double ess_step(double B, double f, const HomeConfig& config) {
  const double c = std::max(f, 0.0);
  const double d = std::min(f, 0.0);
  return B + config.eta_c * c + d / config.eta_d;
}

double thermal_step(double T_in, double T_out, double e, const HomeConfig& config,
                    double disturbance) {
  const double eps = config.epsilon;
  return eps * T_in + (1.0 - eps) * (T_out - (config.eta_hvac / config.A) * e) + disturbance;
}

double grid_power(const EnvState& state, const FeasibleAction& act) {
  return state.b + act.e + act.charge() + act.discharge() - state.p;
}

double energy_cost(double g, double v, const HomeConfig& config) {
  const double u = config.delta_sell * v;
  return 0.5 * (v - u) * std::abs(g) + 0.5 * (v + u) * g;
}

double depreciation_cost(double f, const HomeConfig& config) { return config.psi * std::abs(f); }

double comfort_penalty(double T_in, const HomeConfig& config) {
  return std::max(T_in - config.T_max, 0.0) + std::max(config.T_min - T_in, 0.0);
}

double draw_disturbance(const HomeConfig& config, Rng& rng) {
  if (!config.has_disturbance()) return 0.0;
  std::uniform_real_distribution<double> dist(config.disturbance_lo, config.disturbance_hi);
  return dist(rng);
}

std::vector<double> disturbance_sequence(const HomeConfig& config, std::uint64_t seed,
                                         std::size_t n) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) x = draw_disturbance(config, rng);
  return out;
}

StepOutcome step(const EnvState& state, const RawAction& raw, const TraceSet& traces,
                 const HomeConfig& config, Rng& rng) {
  if (state.t >= traces.horizon_len()) {
    throw RangeError("slot " + std::to_string(state.t) + " is past the end of the trace");
  }
  StepOutcome out;
  out.action = clip_action(raw, state, config);
  out.disturbance = draw_disturbance(config, rng);

  EnvState next;
  next.t = state.t + 1;
  fill_exogenous(next, traces, next.t);
  next.B = std::clamp(ess_step(state.B, out.action.f, config), config.B_min, config.B_max);
  next.T_in = thermal_step(state.T_in, state.T_out, out.action.e, config, out.disturbance);
  out.next_state = next;

  out.g = grid_power(state, out.action);
  out.c1 = energy_cost(out.g, state.v, config);
  out.c2 = depreciation_cost(out.action.f, config);
  out.c3 = comfort_penalty(next.T_in, config);
  out.reward = -config.beta * (out.c1 + out.c2) - out.c3;
  return out;
}

Environment::Environment(HomeConfig config, TraceSet traces, std::uint64_t seed)
    : config_(config), traces_(std::move(traces)), rng_(seed) {
  config_.validate();
  traces_.validate();
  state_ = hems::reset(config_, traces_, 0);
}

const EnvState& Environment::reset(std::size_t start_slot, std::size_t n_slots) {
  if (start_slot + n_slots > traces_.horizon_len()) {
    throw RangeError("episode [" + std::to_string(start_slot) + ", " +
                     std::to_string(start_slot + n_slots) + ") exceeds the trace");
  }
  state_ = hems::reset(config_, traces_, start_slot);
  episode_len_ = n_slots;
  steps_taken_ = 0;
  return state_;
}

StepOutcome Environment::step(const RawAction& raw) {
  if (done()) {
    throw RangeError("episode overrun at slot " + std::to_string(state_.t));
  }
  StepOutcome out = hems::step(state_, raw, traces_, config_, rng_);
  state_ = out.next_state;
  ++steps_taken_;
  return out;
}

}  // namespace hems
