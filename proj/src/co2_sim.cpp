#include "occusim/co2_sim.hpp"

#include <algorithm>

#include "occusim/error.hpp"

namespace occusim {

void RoomConfig::validate() const {
  auto require = [](double v, const char* name) {
    if (!(v > 0.0)) throw DomainError(std::string("room config: ") + name + " must be positive");
  };
  require(volume, "volume");
  require(infiltration_flow, "infiltration_flow");
  require(outdoor_co2, "outdoor_co2");
  require(occupant_generation, "occupant_generation");
  require(air_density, "air_density");
  require(co2_density, "co2_density");
}

double generation_volumetric(int n, const RoomConfig& cfg) {
  if (n < 0) throw DomainError("occupant count must be non-negative");
  return n * cfg.occupant_generation / 60000.0;
}

double generation_mass(int n, const RoomConfig& cfg) {
  if (n < 0) throw DomainError("occupant count must be non-negative");
  return n * cfg.occupant_generation * cfg.co2_density * 1000.0 / 60.0;
}

double infiltration_mass_flow(const RoomConfig& cfg) {
  return cfg.infiltration_flow * 1000.0 * cfg.air_density;
}

double effective_flow(int window_state, double vent_multiplier, const RoomConfig& cfg) {
  if (!(vent_multiplier >= 1.0)) throw DomainError("ventilation multiplier must be >= 1");
  return window_state == 0 ? cfg.infiltration_flow : cfg.infiltration_flow * vent_multiplier;
}

double step_co2(double c, int n, double flow, const RoomConfig& cfg, double dt) {
  const double dcdt = flow / cfg.volume * (cfg.outdoor_co2 - c) +
                      1e6 * generation_volumetric(n, cfg) / cfg.volume;
  return c + dt * dcdt;
}

double steady_state(int n, double flow, const RoomConfig& cfg) {
  if (!(flow > 0.0)) throw DomainError("flow must be positive");
  return cfg.outdoor_co2 + 1e6 * generation_volumetric(n, cfg) / flow;
}

namespace {

// Calls sink(second_index, value) for every 1 s sample of the run.
template <typename Sink>
void integrate(const std::vector<OccupancyTrace>& traces, const RoomConfig& cfg, double c0,
               Sink&& sink) {
  cfg.validate();
  if (traces.empty()) throw DomainError("no occupancy traces to simulate");
  if (!(c0 >= 0.0)) throw DomainError("initial concentration must be non-negative");
  double c = c0;
  std::size_t index = 0;
  for (const auto& trace : traces) {
    for (int minute = 0; minute < kMinutesPerDay; ++minute) {
      const int n = trace.occ[minute];
      const double flow = effective_flow(trace.window[minute], trace.vent_multiplier[minute], cfg);
      for (int s = 0; s < 60; ++s) {
        sink(index++, c);
        c = step_co2(c, n, flow, cfg, 1.0);
      }
    }
  }
}

}  // namespace

Co2Series simulate_co2(const std::vector<OccupancyTrace>& traces, const RoomConfig& cfg,
                       double c0) {
  Co2Series series;
  series.step = 1.0;
  series.values.resize(traces.size() * kMinutesPerDay * 60);
  integrate(traces, cfg, c0, [&](std::size_t i, double c) { series.values[i] = c; });
  return series;
}

MinuteCo2 simulate_co2_minutes(const std::vector<OccupancyTrace>& traces,
                               const RoomConfig& cfg, double c0) {
  MinuteCo2 out;
  out.mean.assign(traces.size() * kMinutesPerDay, 0.0);
  out.min_value = c0;
  out.max_value = c0;
  integrate(traces, cfg, c0, [&](std::size_t i, double c) {
    out.mean[i / 60] += c;
    out.min_value = std::min(out.min_value, c);
    out.max_value = std::max(out.max_value, c);
  });
  for (double& m : out.mean) m /= 60.0;
  return out;
}

}  // namespace occusim
