// occusim: simulate -> calibrate -> pretrain -> evaluate.
//
// Exit codes: 0 success, 1 usage error, 2 data or format error,
// 3 numerical or convergence error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "occusim/calibration.hpp"
#include "occusim/config_io.hpp"
#include "occusim/dataset.hpp"
#include "occusim/error.hpp"
#include "occusim/eval.hpp"
#include "occusim/network.hpp"
#include "occusim/scenario.hpp"
#include "occusim/training.hpp"

namespace fs = std::filesystem;
using namespace occusim;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path data_dir() {
  const char* env = std::getenv("OCCUSIM_DATA_DIR");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("data");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// A directory holding co2.csv, or a CSV file itself.
fs::path series_file(const fs::path& p) {
  if (fs::is_directory(p)) return p / "co2.csv";
  return p;
}

// Windows per day, days renumbered 0..n-1 in chronological order.
std::vector<WindowSet> load_days(const fs::path& input) {
  const fs::path file = series_file(input);
  if (!fs::exists(file)) throw Error("no such file: " + file.string());
  const auto minutes = aggregate_minutes(read_any_csv(file));
  const WindowSet all = make_windows(minutes);
  std::vector<WindowSet> days;
  for (int id : minutes.days()) {
    const int one[] = {id};
    WindowSet d = all.select_days(one);
    if (!d.empty()) days.push_back(std::move(d));
  }
  if (days.empty()) throw DomainError(file.string() + " holds no complete window");
  return days;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("not an integer list: '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

json report_json(const TrainingReport& r) {
  json history = json::array();
  for (const auto& e : r.history) {
    history.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
  }
  return {{"epochs_to_best", r.epochs_to_best},
          {"best_val_loss", r.best_val_loss},
          {"epochs_trained", r.epochs_trained},
          {"history", history}};
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  int days = 500;
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  std::string granularity = "1min";
  bool pseudo_real = false;
  bool sensor_log = false;
  double start_epoch = 0.0;
};

int cmd_simulate(const SimulateArgs& a) {
  if (a.days < 1) throw UsageError("--days must be at least 1");
  Scenario scenario = a.pseudo_real ? perturbed_scenario() : office_scenario();
  if (!a.config.empty()) scenario = read_json_file<Scenario>(a.config, scenario);
  scenario.room.validate();
  const fs::path out = a.out.empty() ? data_dir() / (a.pseudo_real ? "real" : "synthetic") : fs::path(a.out);
  fs::create_directories(out);

  const auto traces = simulate_days(a.days, scenario.occupancy, a.seed);
  write_trace_csv(out / "traces.csv", traces);

  double lo = 0.0;
  double hi = 0.0;
  double mean = 0.0;
  if (a.sensor_log) {
    const auto log = simulate_sensor_log(scenario, a.days, a.seed, 5, a.start_epoch);
    write_sensor_csv(out / "co2.csv", log);
    lo = *std::min_element(log.co2.begin(), log.co2.end());
    hi = *std::max_element(log.co2.begin(), log.co2.end());
    for (double v : log.co2) mean += v;
    mean /= static_cast<double>(log.co2.size());
  } else if (a.granularity == "1s") {
    const Co2Series series = simulate_co2(traces, scenario.room, scenario.room.outdoor_co2);
    write_series_csv(out / "co2.csv", series, traces);
    lo = *std::min_element(series.values.begin(), series.values.end());
    hi = *std::max_element(series.values.begin(), series.values.end());
    for (double v : series.values) mean += v;
    mean /= static_cast<double>(series.values.size());
  } else {
    const MinuteCo2 co2 = simulate_co2_minutes(traces, scenario.room, scenario.room.outdoor_co2);
    write_series_csv(out / "co2.csv", Co2Series{0.0, 60.0, co2.mean}, traces);
    lo = co2.min_value;
    hi = co2.max_value;
    for (double v : co2.mean) mean += v;
    mean /= static_cast<double>(co2.mean.size());
  }

  long present = 0;
  long open = 0;
  for (const auto& t : traces) {
    for (int m = 0; m < kMinutesPerDay; ++m) {
      present += t.occ[m];
      open += t.window[m];
    }
  }
  const double minutes = static_cast<double>(traces.size()) * kMinutesPerDay;
  std::printf("Dataset statistics (%s)\n", a.pseudo_real ? "pseudo-real room" : "simulated office");
  std::printf("  %-24s %d\n", "days", a.days);
  std::printf("  %-24s %.0f\n", "minutes", minutes);
  std::printf("  %-24s %.2f %%\n", "presence rate", 100.0 * static_cast<double>(present) / minutes);
  std::printf("  %-24s %.2f %%\n", "window open", 100.0 * static_cast<double>(open) / minutes);
  std::printf("  %-24s [%.1f, %.1f]\n", "CO2 range [ppm]", lo, hi);
  std::printf("  %-24s %.1f\n", "CO2 mean [ppm]", mean);
  std::printf("written to %s\n", out.string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
  std::string series;
  double volume = RoomConfig{}.volume;
  std::string out;
};

int cmd_calibrate(const CalibrateArgs& a) {
  if (!(a.volume > 0.0)) throw UsageError("--volume must be positive");
  if (!fs::exists(a.series)) throw Error("no such file: " + a.series);
  const LabeledLog log = read_any_csv(a.series);
  if (log.co2.size() < 2) throw DomainError(a.series + " holds fewer than two samples");
  const double step = log.timestamps[1] - log.timestamps[0];
  for (std::size_t i = 1; i < log.timestamps.size(); ++i) {
    const double dt = log.timestamps[i] - log.timestamps[i - 1];
    if (std::abs(dt - step) > 1e-6 * step) {
      throw DomainError(a.series + ": irregular sampling near sample " + std::to_string(i + 1));
    }
  }
  const DecayFit fit = fit_decay(Co2Series{log.timestamps[0], step, log.co2}, a.volume);
  const fs::path out = a.out.empty() ? data_dir() / "calibration.json" : fs::path(a.out);
  write_text(out, dump(json(fit)));
  std::printf("lambda %.6e 1/s  infiltration %.6f m3/s  c_out %.2f ppm  c0 %.2f ppm  mse %.4g  (%d iterations)\n",
              fit.lambda, fit.infiltration_flow, fit.c_out, fit.c0, fit.mse, fit.iterations);
  return 0;
}

// ---------------------------------------------------------------------------

struct ModelArgs {
  std::string net;
  std::string train;
  bool reduced = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_epochs;
  std::optional<int> patience;

  NetworkConfig network() const {
    NetworkConfig c = reduced ? NetworkConfig::reduced() : NetworkConfig{};
    if (!net.empty()) c = read_json_file<NetworkConfig>(net, c);
    c.validate();
    return c;
  }
  TrainConfig training() const {
    TrainConfig c;
    if (!train.empty()) c = read_json_file<TrainConfig>(train, c);
    if (seed) c.seed = *seed;
    if (max_epochs) c.max_epochs = *max_epochs;
    if (patience) c.patience = *patience;
    c.validate();
    return c;
  }
};

void add_model_options(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--net", m.net, "NetworkConfig JSON (missing keys keep their defaults)");
  cmd->add_option("--train", m.train, "TrainConfig JSON (missing keys keep their defaults)");
  cmd->add_flag("--reduced", m.reduced, "Start from the reduced network widths");
  cmd->add_option("--seed", m.seed, "Training seed, overrides the TrainConfig file");
  cmd->add_option("--max-epochs", m.max_epochs, "Overrides max_epochs");
  cmd->add_option("--patience", m.patience, "Overrides the early-stopping patience");
}

struct PretrainArgs {
  std::string data;
  std::string out;
  std::string report;
  int use_days = 0;
  int holdout_days = 0;
  ModelArgs model;
};

int cmd_pretrain(const PretrainArgs& a) {
  if (a.use_days < 0 || a.holdout_days < 0) throw UsageError("day counts must be non-negative");
  const NetworkConfig net = a.model.network();
  const TrainConfig cfg = a.model.training();
  auto days = load_days(a.data.empty() ? data_dir() / "synthetic" : fs::path(a.data));
  if (a.use_days > 0) {
    if (static_cast<std::size_t>(a.use_days) > days.size()) {
      throw UsageError("--days " + std::to_string(a.use_days) + " exceeds the " +
                       std::to_string(days.size()) + " days available");
    }
    days.resize(static_cast<std::size_t>(a.use_days));
  }
  if (static_cast<std::size_t>(a.holdout_days) >= days.size()) {
    throw UsageError("--holdout-days must leave at least one training day");
  }
  WindowSet train_set(net.input_length);
  WindowSet test_set(net.input_length);
  const std::size_t n_train = days.size() - static_cast<std::size_t>(a.holdout_days);
  for (std::size_t d = 0; d < days.size(); ++d) (d < n_train ? train_set : test_set).append(days[d]);

  const TrainResult r = train(train_set, net, cfg);
  const fs::path out = a.out.empty() ? data_dir() / "weights" / "base.bin" : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_weights(out, r.weights);

  json rep = {{"network", net},
              {"training_config", cfg},
              {"train_days", n_train},
              {"train_windows", train_set.size()},
              {"training", report_json(r.report)}};
  std::printf("trained on %zu days (%zu windows): best validation loss %.5f at epoch %d of %d\n", n_train,
              train_set.size(), r.report.best_val_loss, r.report.epochs_to_best, r.report.epochs_trained);
  if (!test_set.empty()) {
    const auto pred = predict(r.weights, test_set);
    const double acc = accuracy(pred, test_set.labels());
    const double f1 = f1_score(pred, test_set.labels());
    rep["holdout"] = {{"days", a.holdout_days}, {"windows", test_set.size()}, {"accuracy", acc}, {"f1", f1}};
    std::printf("held-out %d days: accuracy %.4f  F1 %.4f\n", a.holdout_days, acc, f1);
  }
  write_text(a.report.empty() ? fs::path(out.string() + ".report.json") : fs::path(a.report), dump(rep));
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string real;
  std::string base;
  std::string ks = "1,2,3,4";
  int seeds = 10;
  std::uint64_t base_seed = 0;
  std::string out;
  int jobs = 1;
  bool wraparound = false;
  ModelArgs model;
};

int cmd_evaluate(const EvaluateArgs& a) {
  if (a.seeds < 1) throw UsageError("--seeds must be at least 1");
  if (a.jobs < 1) throw UsageError("--jobs must be at least 1");
  ProtocolConfig pc;
  pc.ks = parse_int_list(a.ks);
  pc.n_seeds = a.seeds;
  pc.base_seed = a.base_seed;
  pc.wraparound = a.wraparound;
  pc.jobs = a.jobs;
  pc.train = a.model.training();

  std::optional<NetworkWeights> base;
  if (!a.base.empty()) {
    if (!fs::exists(a.base)) throw Error("no such file: " + a.base);
    base = load_weights(a.base);
    pc.net = base->config;
    if (!a.model.net.empty() || a.model.reduced) {
      if (a.model.network() != base->config) {
        throw UsageError("--net/--reduced disagree with the architecture stored in " + a.base);
      }
    }
    pc.modes = {Mode::transfer, Mode::cold, Mode::logistic};
  } else {
    pc.net = a.model.network();
    pc.modes = {Mode::cold, Mode::logistic};
  }

  const auto days = load_days(a.real.empty() ? data_dir() / "real" : fs::path(a.real));
  for (int k : pc.ks) {
    if (k < 1 || static_cast<std::size_t>(k) >= days.size()) {
      throw UsageError("--k " + std::to_string(k) + " must lie in [1, " + std::to_string(days.size() - 1) +
                       "] for " + std::to_string(days.size()) + " days");
    }
  }
  const ProtocolReport report = run_protocol(days, base ? &*base : nullptr, pc);

  const fs::path out = a.out.empty() ? data_dir() / "reports" / "report.json" : fs::path(a.out);
  write_text(out, to_json(report));
  fs::path csv = out;
  csv.replace_extension(".csv");
  write_text(csv, to_csv(report));
  std::cout << format_table(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation-aided occupancy detection from CO2 concentration"};
  app.require_subcommand(1);
  app.footer("Environment: OCCUSIM_DATA_DIR sets the default data directory (default: ./data).");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate occupancy and CO2 for a number of working days");
  s->add_option("--days", sim.days, "Number of days")->capture_default_str();
  s->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  s->add_option("--config", sim.config, "Scenario JSON with `room` and `occupancy` sections");
  s->add_option("--out", sim.out, "Output directory (default: $OCCUSIM_DATA_DIR/synthetic, or /real)");
  s->add_option("--granularity", sim.granularity, "Resolution of co2.csv")
      ->check(CLI::IsMember({"1s", "1min"}))
      ->capture_default_str();
  s->add_flag("--pseudo-real", sim.pseudo_real,
              "Use the perturbed room (1.5x infiltration, multiplier 5-60, sojourn bounds x1.2)");
  s->add_flag("--sensor-log", sim.sensor_log,
              "Write co2.csv as a 5 s sensor log with ISO-8601 timestamps instead");
  s->add_option("--start-epoch", sim.start_epoch, "First timestamp of a sensor log, UTC seconds")
      ->capture_default_str();

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Fit the air exchange rate to an unoccupied decay");
  c->add_option("--series", cal.series, "CSV with a constant-step decay series")->required();
  c->add_option("--volume", cal.volume, "Room volume in m^3")->capture_default_str();
  c->add_option("--out", cal.out, "Output JSON (default: $OCCUSIM_DATA_DIR/calibration.json)");

  PretrainArgs pre;
  auto* p = app.add_subcommand("pretrain", "Train the base model on simulated data");
  p->add_option("--data", pre.data, "Directory with co2.csv, or a CSV file (default: $OCCUSIM_DATA_DIR/synthetic)");
  p->add_option("--out", pre.out, "Weight file (default: $OCCUSIM_DATA_DIR/weights/base.bin)");
  p->add_option("--report", pre.report, "Training report JSON (default: <out>.report.json)");
  p->add_option("--days", pre.use_days, "Use only the first N days (0: all)")->capture_default_str();
  p->add_option("--holdout-days", pre.holdout_days, "Hold out the last N days and report test metrics")
      ->capture_default_str();
  add_model_options(p, pre.model);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Cross-validate transfer, cold-start and logistic models");
  e->add_option("--real", ev.real, "Directory with co2.csv, or a CSV file (default: $OCCUSIM_DATA_DIR/real)");
  e->add_option("--base", ev.base, "Base weights; without them only cold and logistic runs are made");
  e->add_option("--k", ev.ks, "Comma-separated training-day counts")->capture_default_str();
  e->add_option("--seeds", ev.seeds, "Seeds per fold")->capture_default_str();
  e->add_option("--base-seed", ev.base_seed, "Seed of the first run")->capture_default_str();
  e->add_option("--out", ev.out, "Report JSON; a CSV of all runs is written next to it "
                                 "(default: $OCCUSIM_DATA_DIR/reports/report.json)");
  e->add_option("--jobs", ev.jobs, "Worker threads")->capture_default_str();
  e->add_flag("--wraparound", ev.wraparound, "Let training blocks wrap around the last day");
  add_model_options(e, ev.model);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*c) return cmd_calibrate(cal);
    if (*p) return cmd_pretrain(pre);
    if (*e) return cmd_evaluate(ev);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& err) {
    std::cerr << "numerical error: " << err.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
