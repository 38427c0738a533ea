#include "hems/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "hems/error.hpp"

namespace hems {

RawAction OnOffController::operator()(const EnvState& state, const HomeConfig& home) {
  if (state.T_in > home.T_max) {
    on_ = true;
  } else if (state.T_in < home.T_min) {
    on_ = false;
  }
  return {0.0, on_ ? home.e_max : 0.0};
}

EpisodeLog run_baseline1(const TraceSet& traces, const HomeConfig& home, std::size_t start_slot,
                         std::size_t n_slots, std::uint64_t env_seed) {
  OnOffController controller;
  return rollout([&](const EnvState& s) { return controller(s, home); }, traces, home, start_slot,
                 n_slots, env_seed);
}

HomeConfig without_ess(const HomeConfig& home) {
  HomeConfig out = home;
  out.c_max = 0.0;
  out.d_max = 0.0;
  return out;
}

EpisodeLog run_baseline2(const TraceSet& train_traces, const TraceSet& test_traces,
                         const HomeConfig& home, const TrainConfig& cfg, std::size_t start_slot,
                         std::size_t n_slots, std::uint64_t env_seed, TrainReport* report) {
  const HomeConfig no_ess = without_ess(home);
  TrainReport trained = train(train_traces, no_ess, cfg);
  EpisodeLog log =
      evaluate(trained.actor, trained.stats, test_traces, no_ess, start_slot, n_slots, env_seed);
  if (report) *report = std::move(trained);
  return log;
}

// ------------------------------------------------------------------ oracle ---

void OracleGrid::validate() const {
  if (!(B_step > 0.0) || !(T_step > 0.0)) throw ParameterError("oracle grid steps must be > 0");
  if (!(T_margin >= 0.0)) throw ParameterError("oracle T margin must be >= 0");
  if (f_levels < 1 || e_levels < 1) throw ParameterError("oracle action grids need >= 1 level");
  if (!(comfort_penalty >= 0.0)) throw ParameterError("oracle comfort penalty must be >= 0");
}

OracleGrid OracleGrid::refined() const {
  OracleGrid g = *this;
  g.B_step = B_step / 2.0;
  g.T_step = T_step / 2.0;
  g.f_levels = 2 * f_levels - 1;
  g.e_levels = 2 * e_levels - 1;
  return g;
}

OracleGrid OracleGrid::from_config(const KeyValueConfig& cfg, OracleGrid base) {
  OracleGrid g = base;
  g.B_step = cfg.get_double("oracle.B_step", g.B_step);
  g.T_step = cfg.get_double("oracle.T_step", g.T_step);
  g.T_margin = cfg.get_double("oracle.T_margin", g.T_margin);
  g.f_levels = static_cast<int>(cfg.get_int("oracle.f_levels", g.f_levels));
  g.e_levels = static_cast<int>(cfg.get_int("oracle.e_levels", g.e_levels));
  g.comfort_penalty = cfg.get_double("oracle.comfort_penalty", g.comfort_penalty);
  g.band_edge_action = cfg.get_bool("oracle.band_edge_action", g.band_edge_action);
  return g;
}

namespace {

// Sorted node coordinates with clamped linear lookup.
class Axis {
 public:
  Axis(double lo, double hi, double step) {
    const double span = (hi - lo) / step;
    const auto n = static_cast<std::size_t>(std::floor(span + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) nodes_.push_back(lo + static_cast<double>(i) * step);
    if (hi - nodes_.back() > 1e-9 * std::max(1.0, std::abs(hi))) nodes_.push_back(hi);
    nodes_.back() = std::max(nodes_.back(), hi);
  }

  std::size_t size() const { return nodes_.size(); }
  double operator[](std::size_t i) const { return nodes_[i]; }

  // Cell index i and weight w of node i + 1 such that x ~ (1 - w) n_i + w n_{i+1}.
  std::pair<std::size_t, double> locate(double x) const {
    if (nodes_.size() == 1 || x <= nodes_.front()) return {0, 0.0};
    if (x >= nodes_.back()) return {nodes_.size() - 2, 1.0};
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
    return {i, (x - nodes_[i]) / (nodes_[i + 1] - nodes_[i])};
  }

 private:
  std::vector<double> nodes_;
};

std::vector<double> levels(double lo, double hi, int n) {
  std::vector<double> out;
  if (n == 1 || hi <= lo) {
    out.push_back(std::clamp(0.0, lo, hi));
    return out;
  }
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  // Idling must always be available.
  if (lo <= 0.0 && hi >= 0.0 && std::none_of(out.begin(), out.end(), [](double x) { return x == 0.0; })) {
    out.push_back(0.0);
  }
  return out;
}

struct Exogenous {
  double p, b, T_out, v, w;
};

class ValueTable {
 public:
  ValueTable(const Axis& B, const Axis& T) : B_(B), T_(T), v_(B.size() * T.size(), 0.0) {}

  double& at(std::size_t i, std::size_t j) { return v_[i * T_.size() + j]; }

  double interpolate(double B, double T) const {
    if (B_.size() == 1 && T_.size() == 1) return v_[0];
    const auto [i, wb] = B_.locate(B);
    const auto [j, wt] = T_.locate(T);
    const std::size_t i1 = std::min(i + 1, B_.size() - 1);
    const std::size_t j1 = std::min(j + 1, T_.size() - 1);
    const std::size_t nt = T_.size();
    return (1.0 - wb) * ((1.0 - wt) * v_[i * nt + j] + wt * v_[i * nt + j1]) +
           wb * ((1.0 - wt) * v_[i1 * nt + j] + wt * v_[i1 * nt + j1]);
  }

 private:
  const Axis& B_;
  const Axis& T_;
  std::vector<double> v_;
};

struct Choice {
  double value = std::numeric_limits<double>::infinity();
  FeasibleAction action;
};

// Candidate HVAC powers for indoor temperature T (before clipping).
void hvac_candidates(const std::vector<double>& e_grid, const OracleGrid& grid,
                     const HomeConfig& home, double T, const Exogenous& x,
                     std::vector<double>& out) {
  out = e_grid;
  if (!grid.band_edge_action) return;
  const double k = home.eta_hvac / home.A;
  const double eps = home.epsilon;
  const double e_edge = (eps * T + (1.0 - eps) * x.T_out + x.w - home.T_max) / ((1.0 - eps) * k);
  if (e_edge > 0.0 && e_edge < home.e_max) out.push_back(e_edge);
}

Choice best_action(const EnvState& s, const Exogenous& x, const std::vector<double>& f_grid,
                   const std::vector<double>& e_grid, const OracleGrid& grid,
                   const HomeConfig& home, const ValueTable& next, std::vector<double>& e_buf) {
  hvac_candidates(e_grid, grid, home, s.T_in, x, e_buf);
  Choice best;
  for (double e_raw : e_buf) {
    for (double f_raw : f_grid) {
      const FeasibleAction a = clip_action({f_raw, e_raw}, s, home);
      const double T_next = thermal_step(s.T_in, x.T_out, a.e, home, x.w);
      const double B_next = std::clamp(ess_step(s.B, a.f, home), home.B_min, home.B_max);
      const double g = grid_power(s, a);
      const double value = energy_cost(g, x.v, home) + depreciation_cost(a.f, home) +
                           grid.comfort_penalty * comfort_penalty(T_next, home) +
                           next.interpolate(B_next, T_next);
      if (value < best.value) {
        best.value = value;
        best.action = a;
      }
    }
  }
  return best;
}

}  // namespace

OracleResult dp_oracle(const TraceSet& traces, const HomeConfig& home, const OracleGrid& grid,
                       std::size_t start_slot, std::size_t horizon,
                       std::span<const double> disturbance) {
  home.validate();
  grid.validate();
  if (horizon == 0 || start_slot + horizon > traces.horizon_len()) {
    throw RangeError("oracle window [" + std::to_string(start_slot) + ", " +
                     std::to_string(start_slot + horizon) + ") exceeds the trace");
  }
  if (!disturbance.empty() && disturbance.size() < horizon) {
    throw RangeError("oracle needs one disturbance value per slot");
  }

  const Axis B_axis(home.B_min, home.B_max, grid.B_step);
  const double steps_below = std::ceil(grid.T_margin / grid.T_step - 1e-9);
  const double T_lo = home.T_min - steps_below * grid.T_step;
  const Axis T_axis(T_lo, home.T_max + grid.T_margin, grid.T_step);
  const std::vector<double> f_grid = levels(-home.d_max, home.c_max, grid.f_levels);
  const std::vector<double> e_grid = levels(0.0, home.e_max, grid.e_levels);

  const auto exogenous = [&](std::size_t k) {
    const std::size_t t = start_slot + k;
    return Exogenous{traces.solar_kw[t], traces.demand_kw[t], traces.outdoor_f[t],
                     traces.price_buy[t], disturbance.empty() ? 0.0 : disturbance[k]};
  };

  // Backward induction; tables[k] is the cost-to-go at the start of slot k.
  std::vector<ValueTable> tables(horizon + 1, ValueTable(B_axis, T_axis));
  std::vector<double> e_buf;
  for (std::size_t k = horizon; k-- > 0;) {
    const Exogenous x = exogenous(k);
    EnvState s;
    s.p = x.p;
    s.b = x.b;
    s.T_out = x.T_out;
    s.v = x.v;
    for (std::size_t i = 0; i < B_axis.size(); ++i) {
      s.B = B_axis[i];
      for (std::size_t j = 0; j < T_axis.size(); ++j) {
        s.T_in = T_axis[j];
        tables[k].at(i, j) =
            best_action(s, x, f_grid, e_grid, grid, home, tables[k + 1], e_buf).value;
      }
    }
  }

  // Forward pass on the continuous dynamics.
  OracleResult result;
  result.schedule.reserve(horizon);
  EnvState s;
  s.B = home.B_0;
  s.T_in = home.T_in_0;
  for (std::size_t k = 0; k < horizon; ++k) {
    const Exogenous x = exogenous(k);
    s.t = start_slot + k;
    s.p = x.p;
    s.b = x.b;
    s.T_out = x.T_out;
    s.v = x.v;
    s.hour = static_cast<int>(s.t % kSlotsPerDay);
    const Choice c = best_action(s, x, f_grid, e_grid, grid, home, tables[k + 1], e_buf);

    OracleSlot row;
    row.slot = s.t;
    row.price = x.v;
    row.f = c.action.f;
    row.e = c.action.e;
    row.g = grid_power(s, c.action);
    row.B = s.B;
    row.T_in = s.T_in;
    row.c1 = energy_cost(row.g, x.v, home);
    row.c2 = depreciation_cost(row.f, home);
    const double T_next = thermal_step(s.T_in, x.T_out, row.e, home, x.w);
    row.c3 = comfort_penalty(T_next, home);

    if (row.c3 > 1e-6) {
      const double e_full = s.T_in < home.T_min ? 0.0 : home.e_max;
      const double hottest_best = thermal_step(s.T_in, x.T_out, e_full, home, x.w);
      const double coldest_best = thermal_step(s.T_in, x.T_out, 0.0, home, x.w);
      if (hottest_best > home.T_max + 1e-9) {
        throw InfeasibleError(s.t, "indoor temperature exceeds T_max even at full HVAC power");
      }
      if (coldest_best < home.T_min - 1e-9) {
        throw InfeasibleError(s.t, "indoor temperature falls below T_min with the HVAC off");
      }
    }

    result.total_cost += row.c1 + row.c2;
    result.total_deviation += row.c3;
    result.schedule.push_back(row);

    s.B = std::clamp(ess_step(s.B, row.f, home), home.B_min, home.B_max);
    s.T_in = T_next;
  }
  return result;
}

void write_oracle_schedule(const OracleResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "slot,f,e,g,B,T_in,c1,c2,c3\n";
  for (const auto& r : result.schedule) {
    out << r.slot;
    for (double v : {r.f, r.e, r.g, r.B, r.T_in, r.c1, r.c2, r.c3}) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace hems
