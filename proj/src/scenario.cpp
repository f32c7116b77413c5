#include "occusim/scenario.hpp"

#include "occusim/error.hpp"

namespace occusim {

Scenario office_scenario() { return {}; }

Scenario perturbed_scenario() {
  Scenario s;
  s.room.infiltration_flow *= 1.5;
  s.occupancy.vm_min = 5.0;
  s.occupancy.vm_max = 60.0;
  s.occupancy.presence = s.occupancy.presence.scaled(1.2);
  s.occupancy.window = s.occupancy.window.scaled(1.2);
  return s;
}

SimulatedDataset simulate_dataset(const Scenario& scenario, int n_days, std::uint64_t seed) {
  SimulatedDataset out;
  out.traces = simulate_days(n_days, scenario.occupancy, seed);
  out.co2 = simulate_co2_minutes(out.traces, scenario.room, scenario.room.outdoor_co2);
  out.minutes = minute_series(out.traces, out.co2.mean);
  return out;
}

LabeledLog simulate_sensor_log(const Scenario& scenario, int n_days, std::uint64_t seed, int step,
                               double start_epoch) {
  if (step < 1 || 60 % step != 0) throw DomainError("sensor step must divide 60 s");
  const auto traces = simulate_days(n_days, scenario.occupancy, seed);
  const Co2Series series = simulate_co2(traces, scenario.room, scenario.room.outdoor_co2);
  LabeledLog log;
  const std::size_t n = series.values.size() / static_cast<std::size_t>(step);
  log.timestamps.reserve(n);
  log.co2.reserve(n);
  log.occupants.reserve(n);
  for (std::size_t i = 0; i < series.values.size(); i += static_cast<std::size_t>(step)) {
    const std::size_t minute = i / 60;
    log.timestamps.push_back(start_epoch + static_cast<double>(i));
    log.co2.push_back(series.values[i]);
    log.occupants.push_back(traces[minute / kMinutesPerDay].occ[minute % kMinutesPerDay]);
  }
  return log;
}

}  // namespace occusim
