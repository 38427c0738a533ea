#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hems/agent.hpp"
#include "hems/baselines.hpp"
#include "hems/env.hpp"
#include "hems/error.hpp"
#include "hems/experiment.hpp"
#include "hems/nn.hpp"
#include "hems/traces.hpp"

namespace py = pybind11;
using namespace hems;

namespace {

template <class T>
py::class_<T> fields(py::class_<T> cls) {
  return cls.def(py::init<>());
}

}  // namespace

PYBIND11_MODULE(_hems, m) {
  m.doc() = "Home energy management: environment, DDPG agent, baselines and experiments.";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<SchemaError>(m, "SchemaError", error.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
  py::register_exception<LengthError>(m, "LengthError", error.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", error.ptr());
  py::register_exception<NumericError>(m, "NumericError", error.ptr());
  py::register_exception<RangeError>(m, "RangeError", error.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());

  // ---------------------------------------------------------------- home ---
  fields(py::class_<HomeConfig>(m, "HomeConfig"))
      .def_readwrite("eta_c", &HomeConfig::eta_c)
      .def_readwrite("eta_d", &HomeConfig::eta_d)
      .def_readwrite("B_min", &HomeConfig::B_min)
      .def_readwrite("B_max", &HomeConfig::B_max)
      .def_readwrite("B_0", &HomeConfig::B_0)
      .def_readwrite("c_max", &HomeConfig::c_max)
      .def_readwrite("d_max", &HomeConfig::d_max)
      .def_readwrite("e_max", &HomeConfig::e_max)
      .def_readwrite("T_min", &HomeConfig::T_min)
      .def_readwrite("T_max", &HomeConfig::T_max)
      .def_readwrite("epsilon", &HomeConfig::epsilon)
      .def_readwrite("eta_hvac", &HomeConfig::eta_hvac)
      .def_readwrite("A", &HomeConfig::A)
      .def_readwrite("psi", &HomeConfig::psi)
      .def_readwrite("beta", &HomeConfig::beta)
      .def_readwrite("delta_sell", &HomeConfig::delta_sell)
      .def_readwrite("disturbance_lo", &HomeConfig::disturbance_lo)
      .def_readwrite("disturbance_hi", &HomeConfig::disturbance_hi)
      .def_readwrite("T_in_0", &HomeConfig::T_in_0)
      .def_readwrite("norm_temp_margin", &HomeConfig::norm_temp_margin)
      .def("validate", &HomeConfig::validate);

  fields(py::class_<EnvState>(m, "EnvState"))
      .def_readwrite("t", &EnvState::t)
      .def_readwrite("p", &EnvState::p)
      .def_readwrite("b", &EnvState::b)
      .def_readwrite("B", &EnvState::B)
      .def_readwrite("T_out", &EnvState::T_out)
      .def_readwrite("T_in", &EnvState::T_in)
      .def_readwrite("v", &EnvState::v)
      .def_readwrite("hour", &EnvState::hour);

  // -------------------------------------------------------------- traces ---
  fields(py::class_<TraceSet>(m, "TraceSet"))
      .def_readwrite("solar_kw", &TraceSet::solar_kw)
      .def_readwrite("demand_kw", &TraceSet::demand_kw)
      .def_readwrite("outdoor_f", &TraceSet::outdoor_f)
      .def_readwrite("price_buy", &TraceSet::price_buy)
      .def("horizon_len", &TraceSet::horizon_len)
      .def("days", &TraceSet::days)
      .def("validate", &TraceSet::validate)
      .def("slice", &TraceSet::slice, py::arg("start"), py::arg("length"))
      .def("__len__", &TraceSet::horizon_len)
      .def(py::self == py::self);

  fields(py::class_<SyntheticTraceSpec>(m, "SyntheticTraceSpec"))
      .def_readwrite("days", &SyntheticTraceSpec::days)
      .def_readwrite("solar_peak_kw", &SyntheticTraceSpec::solar_peak_kw)
      .def_readwrite("sunrise_hour", &SyntheticTraceSpec::sunrise_hour)
      .def_readwrite("sunset_hour", &SyntheticTraceSpec::sunset_hour)
      .def_readwrite("demand_base_kw", &SyntheticTraceSpec::demand_base_kw)
      .def_readwrite("demand_peak_kw", &SyntheticTraceSpec::demand_peak_kw)
      .def_readwrite("demand_peak_hour", &SyntheticTraceSpec::demand_peak_hour)
      .def_readwrite("outdoor_mean_f", &SyntheticTraceSpec::outdoor_mean_f)
      .def_readwrite("outdoor_amplitude_f", &SyntheticTraceSpec::outdoor_amplitude_f)
      .def_readwrite("price_offpeak", &SyntheticTraceSpec::price_offpeak)
      .def_readwrite("price_onpeak", &SyntheticTraceSpec::price_onpeak)
      .def_readwrite("onpeak_start_hour", &SyntheticTraceSpec::onpeak_start_hour)
      .def_readwrite("onpeak_end_hour", &SyntheticTraceSpec::onpeak_end_hour)
      .def_readwrite("solar_noise", &SyntheticTraceSpec::solar_noise)
      .def_readwrite("demand_noise", &SyntheticTraceSpec::demand_noise)
      .def_readwrite("outdoor_noise", &SyntheticTraceSpec::outdoor_noise)
      .def_readwrite("price_noise", &SyntheticTraceSpec::price_noise)
      .def_readwrite("seed", &SyntheticTraceSpec::seed);

  m.def("gen_synthetic", &gen_synthetic, py::arg("spec") = SyntheticTraceSpec{});
  m.def("load_trace", &load_trace, py::arg("path"));
  m.def("parse_trace", &parse_trace, py::arg("csv_text"));
  m.def("write_trace", &write_trace, py::arg("traces"), py::arg("path"));

  py::class_<NormStats>(m, "NormStats")
      .def_property_readonly("min", [](const NormStats& s) {
        std::vector<double> out;
        for (const auto& c : s.channels) out.push_back(c.min);
        return out;
      })
      .def_property_readonly("max", [](const NormStats& s) {
        std::vector<double> out;
        for (const auto& c : s.channels) out.push_back(c.max);
        return out;
      });
  m.def("compute_norm_stats", &compute_norm_stats, py::arg("traces"), py::arg("home"));
  m.def("preprocess", &preprocess, py::arg("state"), py::arg("stats"));

  // ----------------------------------------------------------------- env ---
  py::class_<RawAction>(m, "RawAction")
      .def(py::init<>())
      .def(py::init([](double f, double e) { return RawAction{f, e}; }), py::arg("f"), py::arg("e"))
      .def_readwrite("f", &RawAction::f)
      .def_readwrite("e", &RawAction::e);

  py::class_<FeasibleAction>(m, "FeasibleAction")
      .def_readonly("f", &FeasibleAction::f)
      .def_readonly("e", &FeasibleAction::e)
      .def_property_readonly("charge", &FeasibleAction::charge)
      .def_property_readonly("discharge", &FeasibleAction::discharge);

  py::class_<StepOutcome>(m, "StepOutcome")
      .def_readonly("next_state", &StepOutcome::next_state)
      .def_readonly("action", &StepOutcome::action)
      .def_readonly("reward", &StepOutcome::reward)
      .def_readonly("c1", &StepOutcome::c1)
      .def_readonly("c2", &StepOutcome::c2)
      .def_readonly("c3", &StepOutcome::c3)
      .def_readonly("g", &StepOutcome::g)
      .def_readonly("disturbance", &StepOutcome::disturbance);

  py::class_<Environment>(m, "Environment")
      .def(py::init<HomeConfig, TraceSet, std::uint64_t>(), py::arg("home"), py::arg("traces"),
           py::arg("seed") = 0)
      .def("reset", &Environment::reset, py::arg("start_slot") = 0,
           py::arg("n_slots") = kSlotsPerDay, py::return_value_policy::copy)
      .def("step", [](Environment& env, double f, double e) { return env.step({f, e}); },
           py::arg("f"), py::arg("e"))
      .def_property_readonly("state", &Environment::state, py::return_value_policy::copy)
      .def_property_readonly("done", &Environment::done)
      .def_property_readonly("steps_taken", &Environment::steps_taken);

  m.def("clip_action", &clip_action, py::arg("raw"), py::arg("state"), py::arg("home"));
  m.def("ess_step", &ess_step, py::arg("B"), py::arg("f"), py::arg("home"));
  m.def("thermal_step", &thermal_step, py::arg("T_in"), py::arg("T_out"), py::arg("e"),
        py::arg("home"), py::arg("disturbance") = 0.0);
  m.def("energy_cost", &energy_cost, py::arg("g"), py::arg("v"), py::arg("home"));
  m.def("depreciation_cost", &depreciation_cost, py::arg("f"), py::arg("home"));
  m.def("comfort_penalty", &comfort_penalty, py::arg("T_in"), py::arg("home"));

  // ------------------------------------------------------------------ nn ---
  py::enum_<Activation>(m, "Activation")
      .value("Identity", Activation::Identity)
      .value("Relu", Activation::Relu)
      .value("Tanh", Activation::Tanh)
      .value("Sigmoid", Activation::Sigmoid);

  py::class_<MlpSpec>(m, "MlpSpec")
      .def(py::init([](std::vector<int> sizes, std::vector<Activation> outs, std::uint64_t seed) {
             return MlpSpec{std::move(sizes), std::move(outs), seed};
           }),
           py::arg("layer_sizes"), py::arg("output_activations"), py::arg("seed") = 0)
      .def_readwrite("layer_sizes", &MlpSpec::layer_sizes)
      .def_readwrite("output_activations", &MlpSpec::output_activations)
      .def_readwrite("seed", &MlpSpec::seed);

  py::class_<Mlp>(m, "Mlp")
      .def(py::init<MlpSpec>(), py::arg("spec"))
      .def("forward", [](const Mlp& net, const Matrix& batch) { return net.forward(batch); },
           py::arg("batch"))
      .def("weight", &Mlp::weight, py::arg("layer"), py::return_value_policy::copy)
      .def("bias", &Mlp::bias, py::arg("layer"), py::return_value_policy::copy)
      .def_property_readonly("num_layers", &Mlp::num_layers)
      .def_property_readonly("num_parameters", &Mlp::num_parameters)
      .def("soft_update_from", &Mlp::soft_update_from, py::arg("online"), py::arg("tau"))
      .def("max_abs_diff", &Mlp::max_abs_diff, py::arg("other"))
      .def("save", &Mlp::save, py::arg("path"))
      .def_static("load", &Mlp::load, py::arg("path"));

  // --------------------------------------------------------------- agent ---
  fields(py::class_<TrainConfig>(m, "TrainConfig"))
      .def_readwrite("episodes", &TrainConfig::episodes)
      .def_readwrite("slots_per_episode", &TrainConfig::slots_per_episode)
      .def_readwrite("batch", &TrainConfig::batch)
      .def_readwrite("buffer_capacity", &TrainConfig::buffer_capacity)
      .def_readwrite("gamma", &TrainConfig::gamma)
      .def_readwrite("tau", &TrainConfig::tau)
      .def_readwrite("alpha_a", &TrainConfig::alpha_a)
      .def_readwrite("alpha_c", &TrainConfig::alpha_c)
      .def_readwrite("zeta", &TrainConfig::zeta)
      .def_readwrite("xi_min", &TrainConfig::xi_min)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("actor_hidden", &TrainConfig::actor_hidden)
      .def_readwrite("critic_hidden", &TrainConfig::critic_hidden)
      .def_static("desk_scale", &TrainConfig::desk_scale)
      .def("validate", &TrainConfig::validate);

  m.def("exploration_prob", &exploration_prob, py::arg("episode"), py::arg("config"));

  py::class_<TrainReport>(m, "TrainReport")
      .def_readonly("episode_rewards", &TrainReport::episode_rewards)
      .def_readonly("moving_average", &TrainReport::moving_average)
      .def_readonly("actor", &TrainReport::actor)
      .def_readonly("critic", &TrainReport::critic)
      .def_readonly("stats", &TrainReport::stats)
      .def_readonly("updates", &TrainReport::updates);

  m.def("train", &train, py::arg("traces"), py::arg("home"), py::arg("config"),
        py::arg("progress") = TrainProgress{}, py::call_guard<py::gil_scoped_release>());

  py::class_<SlotRecord>(m, "SlotRecord")
      .def_readonly("slot", &SlotRecord::slot)
      .def_readonly("hour", &SlotRecord::hour)
      .def_readonly("price", &SlotRecord::price)
      .def_readonly("B", &SlotRecord::B)
      .def_readonly("T_in", &SlotRecord::T_in)
      .def_readonly("f", &SlotRecord::f)
      .def_readonly("e", &SlotRecord::e)
      .def_readonly("g", &SlotRecord::g)
      .def_readonly("c1", &SlotRecord::c1)
      .def_readonly("c2", &SlotRecord::c2)
      .def_readonly("c3", &SlotRecord::c3)
      .def_readonly("reward", &SlotRecord::reward)
      .def_readonly("disturbance", &SlotRecord::disturbance);

  py::class_<EpisodeLog>(m, "EpisodeLog")
      .def_readonly("slots", &EpisodeLog::slots)
      .def("total_cost", &EpisodeLog::total_cost)
      .def("total_deviation", &EpisodeLog::total_deviation)
      .def("total_reward", &EpisodeLog::total_reward)
      .def("__len__", [](const EpisodeLog& log) { return log.slots.size(); });

  m.def("evaluate", &evaluate, py::arg("actor"), py::arg("stats"), py::arg("traces"),
        py::arg("home"), py::arg("start_slot"), py::arg("n_slots"), py::arg("env_seed") = 0);

  // ----------------------------------------------------------- baselines ---
  m.def("run_baseline1", &run_baseline1, py::arg("traces"), py::arg("home"),
        py::arg("start_slot"), py::arg("n_slots"), py::arg("env_seed") = 0);
  m.def("without_ess", &without_ess, py::arg("home"));

  fields(py::class_<OracleGrid>(m, "OracleGrid"))
      .def_readwrite("B_step", &OracleGrid::B_step)
      .def_readwrite("T_step", &OracleGrid::T_step)
      .def_readwrite("T_margin", &OracleGrid::T_margin)
      .def_readwrite("f_levels", &OracleGrid::f_levels)
      .def_readwrite("e_levels", &OracleGrid::e_levels)
      .def_readwrite("comfort_penalty", &OracleGrid::comfort_penalty)
      .def_readwrite("band_edge_action", &OracleGrid::band_edge_action)
      .def("refined", &OracleGrid::refined);

  py::class_<OracleSlot>(m, "OracleSlot")
      .def_readonly("slot", &OracleSlot::slot)
      .def_readonly("price", &OracleSlot::price)
      .def_readonly("f", &OracleSlot::f)
      .def_readonly("e", &OracleSlot::e)
      .def_readonly("g", &OracleSlot::g)
      .def_readonly("B", &OracleSlot::B)
      .def_readonly("T_in", &OracleSlot::T_in)
      .def_readonly("c1", &OracleSlot::c1)
      .def_readonly("c2", &OracleSlot::c2)
      .def_readonly("c3", &OracleSlot::c3);

  py::class_<OracleResult>(m, "OracleResult")
      .def_readonly("total_cost", &OracleResult::total_cost)
      .def_readonly("total_deviation", &OracleResult::total_deviation)
      .def_readonly("schedule", &OracleResult::schedule);

  m.def(
      "dp_oracle",
      [](const TraceSet& traces, const HomeConfig& home, const OracleGrid& grid,
         std::size_t start_slot, std::size_t horizon, const std::vector<double>& disturbance) {
        return dp_oracle(traces, home, grid, start_slot, horizon, disturbance);
      },
      py::arg("traces"), py::arg("home"), py::arg("grid"), py::arg("start_slot"),
      py::arg("horizon"), py::arg("disturbance") = std::vector<double>{},
      py::call_guard<py::gil_scoped_release>());

  // ---------------------------------------------------------- experiment ---
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) {
    return spearman(x, y);
  });
}
