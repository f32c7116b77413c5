#pragma once

#include <cstdint>
#include <vector>

#include "occusim/co2_sim.hpp"
#include "occusim/dataset.hpp"
#include "occusim/occupancy_sim.hpp"

namespace occusim {

/// Everything the two simulators need for one room.
struct Scenario {
  RoomConfig room;
  OccupancyConfig occupancy;
};

/// The 77.5 m^3 office with its calibrated infiltration and default occupant
/// behaviour.
Scenario office_scenario();

/// A held-out room used as a stand-in for measured data: 1.5x infiltration,
/// multiplier range [5, 60] and all sojourn bounds stretched by 20 %.
Scenario perturbed_scenario();

struct SimulatedDataset {
  std::vector<OccupancyTrace> traces;
  MinuteCo2 co2;
  LabeledMinuteSeries minutes;
};

/// Occupancy traces, 1 s integration from the outdoor level, and the
/// per-minute labelled series.
SimulatedDataset simulate_dataset(const Scenario& scenario, int n_days, std::uint64_t seed);

/// Simulated sensor log: the 1 s integration sampled every `step` seconds,
/// timestamps offset by `start_epoch` (seconds, UTC midnight recommended).
LabeledLog simulate_sensor_log(const Scenario& scenario, int n_days, std::uint64_t seed,
                               int step = 5, double start_epoch = 0.0);

}  // namespace occusim
