#include "hems/traces.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "hems/error.hpp"

namespace hems {

namespace {

constexpr std::array<const char*, 5> kColumns = {"hour", "solar_kw", "demand_kw", "outdoor_f",
                                                 "price_buy"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void check_row(std::size_t row, double solar, double demand, double outdoor, double price) {
  if (!std::isfinite(solar) || !std::isfinite(demand) || !std::isfinite(outdoor) ||
      !std::isfinite(price)) {
    throw ValidationError(row, "non-finite value");
  }
  if (solar < 0.0) throw ValidationError(row, "solar_kw must be >= 0");
  if (demand < 0.0) throw ValidationError(row, "demand_kw must be >= 0");
  if (price <= 0.0) throw ValidationError(row, "price_buy must be > 0");
}

}  // namespace

void TraceSet::validate() const {
  const std::size_t n = horizon_len();
  if (demand_kw.size() != n || outdoor_f.size() != n || price_buy.size() != n) {
    throw LengthError("trace channels have different lengths");
  }
  if (n < kSlotsPerDay || n % kSlotsPerDay != 0) {
    throw LengthError("horizon of " + std::to_string(n) +
                      " slots is not a positive multiple of 24");
  }
  for (std::size_t t = 0; t < n; ++t) {
    check_row(t, solar_kw[t], demand_kw[t], outdoor_f[t], price_buy[t]);
  }
}

TraceSet TraceSet::slice(std::size_t start, std::size_t len) const {
  if (start + len > horizon_len()) {
    throw RangeError("slice [" + std::to_string(start) + ", " + std::to_string(start + len) +
                     ") exceeds horizon " + std::to_string(horizon_len()));
  }
  const auto cut = [&](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(start),
                               v.begin() + static_cast<std::ptrdiff_t>(start + len));
  };
  TraceSet out;
  out.solar_kw = cut(solar_kw);
  out.demand_kw = cut(demand_kw);
  out.outdoor_f = cut(outdoor_f);
  out.price_buy = cut(price_buy);
  out.slot_duration_h = slot_duration_h;
  return out;
}

TraceSet parse_trace(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty trace file");

  const auto header = split_csv_line(line);
  std::array<int, kColumns.size()> index{};
  index.fill(-1);
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto it = std::find_if(kColumns.begin(), kColumns.end(),
                                 [&](const char* c) { return header[i] == c; });
    if (it == kColumns.end()) throw SchemaError("unexpected column '" + header[i] + "'");
    auto& slot = index[static_cast<std::size_t>(it - kColumns.begin())];
    if (slot != -1) throw SchemaError("duplicate column '" + header[i] + "'");
    slot = static_cast<int>(i);
  }
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    if (index[c] == -1) throw SchemaError(std::string("missing column '") + kColumns[c] + "'");
  }

  TraceSet traces;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw SchemaError("row " + std::to_string(row) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(cells.size()));
    }
    const auto value = [&](std::size_t c) {
      try {
        return parse_double(cells[static_cast<std::size_t>(index[c])]);
      } catch (const ParameterError&) {
        throw ValidationError(row, std::string("unparseable ") + kColumns[c]);
      }
    };
    const double hour = value(0);
    if (hour != static_cast<double>(row)) {
      throw ValidationError(row, "hour column is not contiguous (expected " +
                                     std::to_string(row) + ")");
    }
    const double solar = value(1);
    const double demand = value(2);
    const double outdoor = value(3);
    const double price = value(4);
    check_row(row, solar, demand, outdoor, price);
    traces.solar_kw.push_back(solar);
    traces.demand_kw.push_back(demand);
    traces.outdoor_f.push_back(outdoor);
    traces.price_buy.push_back(price);
    ++row;
  }
  if (row < kSlotsPerDay || row % kSlotsPerDay != 0) {
    throw LengthError("trace has " + std::to_string(row) + " rows; need a positive multiple of 24");
  }
  return traces;
}

TraceSet load_trace(const std::filesystem::path& path) { return parse_trace(read_file(path)); }

std::string format_trace(const TraceSet& traces) {
  std::string out = std::string(kTraceHeader) + "\n";
  for (std::size_t t = 0; t < traces.horizon_len(); ++t) {
    out += std::to_string(t);
    for (double v : {traces.solar_kw[t], traces.demand_kw[t], traces.outdoor_f[t],
                     traces.price_buy[t]}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_trace(const TraceSet& traces, const std::filesystem::path& path) {
  write_file(path, format_trace(traces));
}

void SyntheticTraceSpec::validate() const {
  if (days <= 0) throw ParameterError("synthetic.days must be > 0");
  for (double amp : {solar_peak_kw, demand_base_kw, outdoor_amplitude_f, solar_noise,
                     demand_noise, outdoor_noise, price_noise}) {
    if (!(amp >= 0.0)) throw ParameterError("synthetic amplitudes must be >= 0");
  }
  if (demand_peak_kw < demand_base_kw) {
    throw ParameterError("synthetic.demand_peak_kw must be >= demand_base_kw");
  }
  if (!(price_offpeak > 0.0) || !(price_onpeak > 0.0)) {
    throw ParameterError("synthetic prices must be > 0");
  }
  if (onpeak_start_hour < 0 || onpeak_start_hour >= 24 || onpeak_end_hour < 0 ||
      onpeak_end_hour > 24 || onpeak_start_hour > onpeak_end_hour) {
    throw ParameterError("synthetic on-peak window must lie within [0, 24)");
  }
  if (!(sunrise_hour >= 0.0 && sunrise_hour < sunset_hour && sunset_hour <= 24.0)) {
    throw ParameterError("synthetic daylight window must satisfy 0 <= sunrise < sunset <= 24");
  }
}

SyntheticTraceSpec SyntheticTraceSpec::from_config(const KeyValueConfig& cfg,
                                                   SyntheticTraceSpec base) {
  SyntheticTraceSpec s = base;
  s.days = static_cast<int>(cfg.get_int("synthetic.days", s.days));
  s.solar_peak_kw = cfg.get_double("synthetic.solar_peak_kw", s.solar_peak_kw);
  s.sunrise_hour = cfg.get_double("synthetic.sunrise_hour", s.sunrise_hour);
  s.sunset_hour = cfg.get_double("synthetic.sunset_hour", s.sunset_hour);
  s.demand_base_kw = cfg.get_double("synthetic.demand_base_kw", s.demand_base_kw);
  s.demand_peak_kw = cfg.get_double("synthetic.demand_peak_kw", s.demand_peak_kw);
  s.demand_peak_hour = cfg.get_double("synthetic.demand_peak_hour", s.demand_peak_hour);
  s.outdoor_mean_f = cfg.get_double("synthetic.outdoor_mean_f", s.outdoor_mean_f);
  s.outdoor_amplitude_f = cfg.get_double("synthetic.outdoor_amplitude_f", s.outdoor_amplitude_f);
  s.price_offpeak = cfg.get_double("synthetic.price_offpeak", s.price_offpeak);
  s.price_onpeak = cfg.get_double("synthetic.price_onpeak", s.price_onpeak);
  s.onpeak_start_hour =
      static_cast<int>(cfg.get_int("synthetic.onpeak_start_hour", s.onpeak_start_hour));
  s.onpeak_end_hour = static_cast<int>(cfg.get_int("synthetic.onpeak_end_hour", s.onpeak_end_hour));
  s.solar_noise = cfg.get_double("synthetic.solar_noise", s.solar_noise);
  s.demand_noise = cfg.get_double("synthetic.demand_noise", s.demand_noise);
  s.outdoor_noise = cfg.get_double("synthetic.outdoor_noise", s.outdoor_noise);
  s.price_noise = cfg.get_double("synthetic.price_noise", s.price_noise);
  s.seed = cfg.get_u64("synthetic.seed", s.seed);
  return s;
}

TraceSet gen_synthetic(const SyntheticTraceSpec& spec) {
  spec.validate();
  const std::size_t n = static_cast<std::size_t>(spec.days) * kSlotsPerDay;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  TraceSet traces;
  traces.solar_kw.resize(n);
  traces.demand_kw.resize(n);
  traces.outdoor_f.resize(n);
  traces.price_buy.resize(n);

  constexpr double pi = std::numbers::pi;
  for (std::size_t t = 0; t < n; ++t) {
    const double h = static_cast<double>(t % kSlotsPerDay);
    // Four draws per slot regardless of amplitudes so channels stay aligned.
    const double n_solar = unit(rng);
    const double n_demand = unit(rng);
    const double n_outdoor = unit(rng);
    const double n_price = unit(rng);

    double solar = 0.0;
    if (h > spec.sunrise_hour && h < spec.sunset_hour) {
      const double phase = (h - spec.sunrise_hour) / (spec.sunset_hour - spec.sunrise_hour);
      solar = spec.solar_peak_kw * std::sin(pi * phase) + spec.solar_noise * n_solar;
    }
    traces.solar_kw[t] = std::max(solar, 0.0);

    const double dh = h - spec.demand_peak_hour;
    const double bump = std::exp(-0.5 * (dh / 1.5) * (dh / 1.5));
    const double demand = spec.demand_base_kw + (spec.demand_peak_kw - spec.demand_base_kw) * bump +
                          spec.demand_noise * n_demand;
    traces.demand_kw[t] = std::max(demand, 0.0);

    traces.outdoor_f[t] = spec.outdoor_mean_f +
                          spec.outdoor_amplitude_f * std::cos(2.0 * pi * (h - 15.0) / 24.0) +
                          spec.outdoor_noise * n_outdoor;

    const int hour = static_cast<int>(t % kSlotsPerDay);
    const bool onpeak = hour >= spec.onpeak_start_hour && hour < spec.onpeak_end_hour;
    const double base_price = onpeak ? spec.price_onpeak : spec.price_offpeak;
    const double price = base_price + spec.price_noise * n_price;
    traces.price_buy[t] = std::max(price, 1e-3 * spec.price_offpeak);
  }
  return traces;
}

NormStats compute_norm_stats(const TraceSet& traces, const HomeConfig& config) {
  if (traces.horizon_len() == 0) throw LengthError("cannot compute statistics of an empty trace");
  const auto range = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return ChannelRange{*lo, *hi};
  };
  NormStats stats;
  stats[Channel::Solar] = range(traces.solar_kw);
  stats[Channel::Demand] = range(traces.demand_kw);
  stats[Channel::Energy] = {config.B_min, config.B_max};
  stats[Channel::Outdoor] = range(traces.outdoor_f);
  stats[Channel::Indoor] = {config.T_min - config.norm_temp_margin,
                            config.T_max + config.norm_temp_margin};
  stats[Channel::Price] = range(traces.price_buy);
  stats[Channel::Hour] = {0.0, 23.0};
  return stats;
}

StateVector raw_state_vector(const EnvState& s) {
  return {s.p, s.b, s.B, s.T_out, s.T_in, s.v, static_cast<double>(s.hour)};
}

StateVector preprocess(const EnvState& state, const NormStats& stats) {
  const StateVector raw = raw_state_vector(state);
  StateVector out{};
  for (std::size_t i = 0; i < kStateDim; ++i) {
    const auto& ch = stats.channels[i];
    if (ch.constant()) {
      out[i] = 0.5;
      continue;
    }
    out[i] = std::clamp((raw[i] - ch.min) / (ch.max - ch.min), 0.0, 1.0);
  }
  return out;
}

void write_norm_stats(const NormStats& stats, const std::filesystem::path& path) {
  constexpr std::array<const char*, kStateDim> names = {"solar", "demand", "energy", "outdoor",
                                                        "indoor", "price", "hour"};
  std::string out = "channel,min,max\n";
  for (std::size_t i = 0; i < kStateDim; ++i) {
    out += std::string(names[i]) + "," + format_double(stats.channels[i].min) + "," +
           format_double(stats.channels[i].max) + "\n";
  }
  write_file(path, out);
}

NormStats load_norm_stats(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  if (line.rfind("channel,min,max", 0) != 0) throw SchemaError("bad norm stats header in " + path.string());
  NormStats stats;
  for (std::size_t i = 0; i < kStateDim; ++i) {
    if (!std::getline(in, line)) throw SchemaError("truncated norm stats file " + path.string());
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) throw SchemaError("bad norm stats row in " + path.string());
    stats.channels[i] = {parse_double(cells[1]), parse_double(cells[2])};
  }
  return stats;
}

}  // namespace hems
