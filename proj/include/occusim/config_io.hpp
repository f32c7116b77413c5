#pragma once

// JSON mappings for configuration and result types. Missing keys fall back to
// the defaults of the C++ types, so `{}` is a complete configuration.

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "occusim/calibration.hpp"
#include "occusim/co2_sim.hpp"
#include "occusim/error.hpp"
#include "occusim/network.hpp"
#include "occusim/occupancy_sim.hpp"
#include "occusim/scenario.hpp"
#include "occusim/training.hpp"

namespace occusim {

inline void to_json(nlohmann::json& j, const SojournBounds& b) {
  j = {{"s0_min", b.s0_min}, {"s0_max", b.s0_max}, {"s1_min", b.s1_min}, {"s1_max", b.s1_max}};
}

inline void from_json(const nlohmann::json& j, SojournBounds& b) {
  b.s0_min = j.value("s0_min", b.s0_min);
  b.s0_max = j.value("s0_max", b.s0_max);
  b.s1_min = j.value("s1_min", b.s1_min);
  b.s1_max = j.value("s1_max", b.s1_max);
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RoomConfig, volume, infiltration_flow, outdoor_co2,
                                                occupant_generation, air_density, co2_density)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ScheduleNominals, arrival, break1_start,
                                                lunch_start, break2_start, departure,
                                                lunch_duration, break_duration, max_shift)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(OccupancyConfig, schedule, presence, window,
                                                vm_min, vm_max)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Scenario, room, occupancy)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NetworkConfig, conv_filters, conv_kernel,
                                                pool_factor, recurrent_units, fc_units, dropout,
                                                classes, input_length, input_channels)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainConfig, learning_rate, batch_size,
                                                validation_fraction, patience, max_epochs, seed,
                                                rms_decay, rms_epsilon)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DecayFit, lambda, c_out, c0, mse, iterations,
                                   infiltration_flow)

/// Parses a JSON file into T. Throws Error naming the path on failure.
template <typename T>
T read_json_file(const std::filesystem::path& path, T defaults = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    nlohmann::json base = defaults;
    base.merge_patch(j);
    return base.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace occusim
