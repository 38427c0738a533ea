#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hems/config.hpp"
#include "hems/home.hpp"

namespace hems {

inline constexpr std::size_t kSlotsPerDay = 24;

// Time-aligned hourly exogenous series.
struct TraceSet {
  std::vector<double> solar_kw;
  std::vector<double> demand_kw;
  std::vector<double> outdoor_f;
  std::vector<double> price_buy;
  double slot_duration_h = 1.0;

  std::size_t horizon_len() const { return solar_kw.size(); }
  std::size_t days() const { return horizon_len() / kSlotsPerDay; }

  // Throws LengthError / ValidationError when an invariant fails.
  void validate() const;

  // Copy of slots [start, start + len).
  TraceSet slice(std::size_t start, std::size_t len) const;

  bool operator==(const TraceSet&) const = default;
};

inline constexpr const char* kTraceHeader = "hour,solar_kw,demand_kw,outdoor_f,price_buy";

TraceSet load_trace(const std::filesystem::path& path);
TraceSet parse_trace(const std::string& csv_text);
void write_trace(const TraceSet& traces, const std::filesystem::path& path);
std::string format_trace(const TraceSet& traces);

struct SyntheticTraceSpec {
  int days = 31;
  double solar_peak_kw = 3.0;  // half-sine between sunrise and sunset
  double sunrise_hour = 6.0;
  double sunset_hour = 20.0;
  double demand_base_kw = 0.6;
  double demand_peak_kw = 2.0;  // evening peak height (total, not increment)
  double demand_peak_hour = 19.0;
  double outdoor_mean_f = 86.0;
  double outdoor_amplitude_f = 9.0;  // sinusoid peaking at 15:00
  double price_offpeak = 0.08;
  double price_onpeak = 0.25;
  int onpeak_start_hour = 14;  // on-peak window is [start, end)
  int onpeak_end_hour = 20;
  double solar_noise = 0.3;
  double demand_noise = 0.2;
  double outdoor_noise = 2.0;
  double price_noise = 0.0;
  std::uint64_t seed = 1;

  void validate() const;

  // Keys use the `synthetic.` prefix, e.g. `synthetic.days = 31`.
  static SyntheticTraceSpec from_config(const KeyValueConfig& cfg, SyntheticTraceSpec base);
  static SyntheticTraceSpec from_config(const KeyValueConfig& cfg) { return from_config(cfg, SyntheticTraceSpec{}); }
};

TraceSet gen_synthetic(const SyntheticTraceSpec& spec);

inline constexpr std::size_t kStateDim = 7;
using StateVector = std::array<double, kStateDim>;

// Channel order of the network input.
enum class Channel : std::size_t { Solar, Demand, Energy, Outdoor, Indoor, Price, Hour };

struct ChannelRange {
  double min = 0.0;
  double max = 0.0;
  bool constant() const { return max == min; }
  bool operator==(const ChannelRange&) const = default;
};

struct NormStats {
  std::array<ChannelRange, kStateDim> channels;

  const ChannelRange& operator[](Channel c) const { return channels[static_cast<std::size_t>(c)]; }
  ChannelRange& operator[](Channel c) { return channels[static_cast<std::size_t>(c)]; }

  bool operator==(const NormStats&) const = default;
};

NormStats compute_norm_stats(const TraceSet& traces, const HomeConfig& config);

// (x - min) / (max - min) clamped to [0, 1]; constant channels map to 0.5.
StateVector preprocess(const EnvState& state, const NormStats& stats);

StateVector raw_state_vector(const EnvState& state);

void write_norm_stats(const NormStats& stats, const std::filesystem::path& path);
NormStats load_norm_stats(const std::filesystem::path& path);

}  // namespace hems
