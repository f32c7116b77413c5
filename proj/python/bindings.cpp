#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "occusim/calibration.hpp"
#include "occusim/co2_sim.hpp"
#include "occusim/dataset.hpp"
#include "occusim/error.hpp"
#include "occusim/eval.hpp"
#include "occusim/logistic.hpp"
#include "occusim/network.hpp"
#include "occusim/occupancy_sim.hpp"
#include "occusim/scenario.hpp"
#include "occusim/training.hpp"

namespace py = pybind11;
using namespace occusim;

namespace {

using Matrix = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Labels = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using Days = py::array_t<int, py::array::c_style | py::array::forcecast>;

void check_windows(const Matrix& x) {
  if (x.ndim() != 2) throw DomainError("windows must be a 2-D array (n, length)");
}

// Labels and day ids are optional; missing ones are zero.
WindowSet to_windows(const Matrix& x, const Labels* y, const Days* day) {
  check_windows(x);
  const auto n = static_cast<std::size_t>(x.shape(0));
  const auto len = static_cast<std::size_t>(x.shape(1));
  if (y != nullptr && (y->ndim() != 1 || static_cast<std::size_t>(y->shape(0)) != n)) {
    throw DomainError("labels must be a 1-D array with one entry per window");
  }
  if (day != nullptr && (day->ndim() != 1 || static_cast<std::size_t>(day->shape(0)) != n)) {
    throw DomainError("day ids must be a 1-D array with one entry per window");
  }
  WindowSet set(len);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t label = y != nullptr ? y->data()[i] : 0;
    if (label > 1) throw DomainError("labels must be 0 or 1");
    set.push_back({x.data() + i * len, len}, label, day != nullptr ? day->data()[i] : 0);
  }
  return set;
}

py::array_t<double> values_of(const WindowSet& set) {
  py::array_t<double> out({static_cast<py::ssize_t>(set.size()), static_cast<py::ssize_t>(set.length())});
  std::copy(set.values().begin(), set.values().end(), out.mutable_data());
  return out;
}

template <typename T, typename Alloc>
py::array_t<T> to_array(const std::vector<T, Alloc>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict traces_dict(const std::vector<OccupancyTrace>& traces) {
  const auto n = static_cast<py::ssize_t>(traces.size());
  py::array_t<std::uint8_t> occ({n, static_cast<py::ssize_t>(kMinutesPerDay)});
  py::array_t<std::uint8_t> window({n, static_cast<py::ssize_t>(kMinutesPerDay)});
  py::array_t<double> vm({n, static_cast<py::ssize_t>(kMinutesPerDay)});
  for (std::size_t d = 0; d < traces.size(); ++d) {
    std::copy(traces[d].occ.begin(), traces[d].occ.end(), occ.mutable_data() + d * kMinutesPerDay);
    std::copy(traces[d].window.begin(), traces[d].window.end(), window.mutable_data() + d * kMinutesPerDay);
    std::copy(traces[d].vent_multiplier.begin(), traces[d].vent_multiplier.end(),
              vm.mutable_data() + d * kMinutesPerDay);
  }
  py::dict out;
  out["occ"] = occ;
  out["window"] = window;
  out["vent_multiplier"] = vm;
  return out;
}

py::dict report_dict(const TrainingReport& r) {
  py::list history;
  for (const auto& e : r.history) history.append(py::make_tuple(e.epoch, e.train_loss, e.val_loss));
  py::dict out;
  out["epochs_to_best"] = r.epochs_to_best;
  out["best_val_loss"] = r.best_val_loss;
  out["epochs_trained"] = r.epochs_trained;
  out["history"] = history;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "CO2-based occupancy detection: simulation, calibration, training and evaluation";

  auto base = py::register_exception<Error>(m, "OccusimError", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<StructuralError>(m, "StructuralError", base.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<FitConvergenceError>(m, "FitConvergenceError", numerical.ptr());

  // Configuration types
  py::class_<RoomConfig>(m, "RoomConfig")
      .def(py::init<>())
      .def_readwrite("volume", &RoomConfig::volume)
      .def_readwrite("infiltration_flow", &RoomConfig::infiltration_flow)
      .def_readwrite("outdoor_co2", &RoomConfig::outdoor_co2)
      .def_readwrite("occupant_generation", &RoomConfig::occupant_generation)
      .def_readwrite("air_density", &RoomConfig::air_density)
      .def_readwrite("co2_density", &RoomConfig::co2_density)
      .def("air_exchange_rate", &RoomConfig::air_exchange_rate)
      .def("validate", &RoomConfig::validate);

  py::class_<SojournBounds>(m, "SojournBounds")
      .def(py::init<>())
      .def_readwrite("s0_min", &SojournBounds::s0_min)
      .def_readwrite("s0_max", &SojournBounds::s0_max)
      .def_readwrite("s1_min", &SojournBounds::s1_min)
      .def_readwrite("s1_max", &SojournBounds::s1_max);

  py::class_<OccupancyConfig>(m, "OccupancyConfig")
      .def(py::init<>())
      .def_readwrite("presence", &OccupancyConfig::presence)
      .def_readwrite("window", &OccupancyConfig::window)
      .def_readwrite("vm_min", &OccupancyConfig::vm_min)
      .def_readwrite("vm_max", &OccupancyConfig::vm_max);

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("room", &Scenario::room)
      .def_readwrite("occupancy", &Scenario::occupancy);
  m.def("office_scenario", &office_scenario);
  m.def("perturbed_scenario", &perturbed_scenario,
        "Held-out room: 1.5x infiltration, multiplier range [5, 60], sojourn bounds x1.2");

  py::class_<NetworkConfig>(m, "NetworkConfig")
      .def(py::init<>())
      .def_static("reduced", &NetworkConfig::reduced)
      .def_readwrite("conv_filters", &NetworkConfig::conv_filters)
      .def_readwrite("conv_kernel", &NetworkConfig::conv_kernel)
      .def_readwrite("pool_factor", &NetworkConfig::pool_factor)
      .def_readwrite("recurrent_units", &NetworkConfig::recurrent_units)
      .def_readwrite("fc_units", &NetworkConfig::fc_units)
      .def_readwrite("dropout", &NetworkConfig::dropout)
      .def_readwrite("classes", &NetworkConfig::classes)
      .def_readwrite("input_length", &NetworkConfig::input_length)
      .def("validate", &NetworkConfig::validate)
      .def(py::self == py::self);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("validation_fraction", &TrainConfig::validation_fraction)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("max_epochs", &TrainConfig::max_epochs)
      .def_readwrite("seed", &TrainConfig::seed)
      .def("validate", &TrainConfig::validate);

  // Simulation
  m.def("steady_state", &steady_state, py::arg("occupants"), py::arg("flow"),
        py::arg("room") = RoomConfig{});
  m.def(
      "simulate",
      [](const Scenario& s, int n_days, std::uint64_t seed, const std::string& granularity) {
        if (granularity != "1s" && granularity != "1min") {
          throw DomainError("granularity must be '1s' or '1min'");
        }
        const auto traces = simulate_days(n_days, s.occupancy, seed);
        py::dict out = traces_dict(traces);
        if (granularity == "1s") {
          out["co2"] = to_array(simulate_co2(traces, s.room, s.room.outdoor_co2).values);
        } else {
          const auto co2 = simulate_co2_minutes(traces, s.room, s.room.outdoor_co2);
          out["co2"] = to_array(co2.mean);
          out["co2_min"] = co2.min_value;
          out["co2_max"] = co2.max_value;
        }
        return out;
      },
      py::arg("scenario"), py::arg("n_days"), py::arg("seed"), py::arg("granularity") = "1min",
      "Occupancy traces (days x 1440) and the CO2 series at 1 s or per-minute resolution");
  m.def(
      "simulate_sensor_log",
      [](const Scenario& s, int n_days, std::uint64_t seed, int step, double start_epoch) {
        const auto log = simulate_sensor_log(s, n_days, seed, step, start_epoch);
        py::dict out;
        out["timestamps"] = to_array(log.timestamps);
        out["co2"] = to_array(log.co2);
        out["occupants"] = to_array(log.occupants);
        return out;
      },
      py::arg("scenario"), py::arg("n_days"), py::arg("seed"), py::arg("step") = 5,
      py::arg("start_epoch") = 0.0);

  // Calibration
  py::class_<DecayFit>(m, "DecayFit")
      .def_readonly("lambda_", &DecayFit::lambda)
      .def_readonly("c_out", &DecayFit::c_out)
      .def_readonly("c0", &DecayFit::c0)
      .def_readonly("mse", &DecayFit::mse)
      .def_readonly("iterations", &DecayFit::iterations)
      .def_readonly("infiltration_flow", &DecayFit::infiltration_flow);
  m.def(
      "fit_decay",
      [](const std::vector<double>& values, double step, double volume, double start_time) {
        return fit_decay(Co2Series{start_time, step, values}, volume);
      },
      py::arg("values"), py::arg("step"), py::arg("volume") = RoomConfig{}.volume,
      py::arg("start_time") = 0.0);

  // Dataset
  m.def(
      "windows_from_log",
      [](const std::vector<double>& timestamps, const std::vector<double>& co2,
         const std::vector<int>& occupants, std::size_t length) {
        const auto set = make_windows(aggregate_minutes({timestamps, co2, occupants}), length);
        std::vector<int> days(set.size());
        for (std::size_t i = 0; i < set.size(); ++i) days[i] = set.day(i);
        return py::make_tuple(values_of(set), to_array(set.labels()), to_array(days));
      },
      py::arg("timestamps"), py::arg("co2"), py::arg("occupants"), py::arg("length") = 15,
      "Per-minute aggregation and sliding windows; returns (X, y, day)");

  // Models
  py::class_<NetworkWeights>(m, "NetworkWeights")
      .def_readonly("config", &NetworkWeights::config)
      .def_readonly("input_mean", &NetworkWeights::input_mean)
      .def_readonly("input_std", &NetworkWeights::input_std)
      .def_property_readonly("params", [](const NetworkWeights& w) { return to_array(w.params); })
      .def("save", [](const NetworkWeights& w, const std::filesystem::path& p) { save_weights(p, w); })
      .def_static("load", [](const std::filesystem::path& p) { return load_weights(p); });

  m.def(
      "train",
      [](const Matrix& x, const Labels& y, const NetworkConfig& net, const TrainConfig& cfg,
         const NetworkWeights* warm_start) {
        const WindowSet set = to_windows(x, &y, nullptr);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(set, net, cfg, warm_start);
        }
        return py::make_tuple(r.weights, report_dict(r.report));
      },
      py::arg("x"), py::arg("y"), py::arg("net") = NetworkConfig::reduced(),
      py::arg("config") = TrainConfig{}, py::arg("warm_start") = nullptr,
      "Chronological split, RMSprop and early stopping; returns (weights, report)");
  m.def(
      "predict_proba",
      [](const NetworkWeights& w, const Matrix& x) {
        check_windows(x);
        const auto n = x.shape(0);
        const auto len = x.shape(1);
        Eigen::MatrixXd raw(len, n);
        std::copy(x.data(), x.data() + n * len, raw.data());
        const Eigen::MatrixXd p = forward(w, raw);
        py::array_t<double> out({n, static_cast<py::ssize_t>(p.rows())});
        for (py::ssize_t i = 0; i < n; ++i) {
          for (Eigen::Index c = 0; c < p.rows(); ++c) out.mutable_at(i, c) = p(c, i);
        }
        return out;
      },
      py::arg("weights"), py::arg("x"));
  m.def(
      "predict",
      [](const NetworkWeights& w, const Matrix& x) { return to_array(predict(w, to_windows(x, nullptr, nullptr))); },
      py::arg("weights"), py::arg("x"));

  py::class_<LogisticWeights>(m, "LogisticWeights")
      .def_readonly("coef", &LogisticWeights::coef)
      .def_readonly("bias", &LogisticWeights::bias);
  m.def(
      "fit_logistic",
      [](const Matrix& x, const Labels& y) { return fit_logistic(to_windows(x, &y, nullptr)); },
      py::arg("x"), py::arg("y"));
  m.def(
      "predict_logistic",
      [](const LogisticWeights& w, const Matrix& x) {
        return to_array(predict_logistic(w, to_windows(x, nullptr, nullptr)));
      },
      py::arg("weights"), py::arg("x"));

  // Evaluation
  m.def(
      "accuracy",
      [](const std::vector<std::uint8_t>& p, const std::vector<std::uint8_t>& t) { return accuracy(p, t); },
      py::arg("predictions"), py::arg("labels"));
  m.def(
      "f1_score",
      [](const std::vector<std::uint8_t>& p, const std::vector<std::uint8_t>& t) { return f1_score(p, t); },
      py::arg("predictions"), py::arg("labels"));
  m.def(
      "make_folds",
      [](int n_days, int k, bool wraparound) {
        py::list out;
        for (const auto& f : make_folds(n_days, k, wraparound)) out.append(py::make_tuple(f.train_days, f.test_days));
        return out;
      },
      py::arg("n_days"), py::arg("k"), py::arg("wraparound") = false);
  m.def(
      "_run_protocol_json",
      [](const Matrix& x, const Labels& y, const Days& day, const NetworkWeights* base,
         const std::vector<int>& ks, int n_seeds, std::uint64_t base_seed,
         const std::vector<std::string>& modes, const NetworkConfig& net, const TrainConfig& cfg,
         int jobs, bool wraparound) {
        const WindowSet all = to_windows(x, &y, &day);
        std::vector<int> ids;
        for (std::size_t i = 0; i < all.size(); ++i) {
          if (ids.empty() || ids.back() != all.day(i)) ids.push_back(all.day(i));
        }
        std::vector<WindowSet> days;
        for (int id : ids) {
          const int one[] = {id};
          days.push_back(all.select_days(one));
        }
        ProtocolConfig pc;
        pc.ks = ks;
        pc.n_seeds = n_seeds;
        pc.base_seed = base_seed;
        pc.modes.clear();
        for (const auto& s : modes) pc.modes.push_back(mode_from_string(s));
        pc.net = base != nullptr ? base->config : net;
        pc.train = cfg;
        pc.jobs = jobs;
        pc.wraparound = wraparound;
        py::gil_scoped_release release;
        return to_json(run_protocol(days, base, pc));
      },
      py::arg("x"), py::arg("y"), py::arg("day"), py::arg("base"), py::arg("ks"), py::arg("n_seeds"),
      py::arg("base_seed"), py::arg("modes"), py::arg("net"), py::arg("config"), py::arg("jobs"),
      py::arg("wraparound"));
}
