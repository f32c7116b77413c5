#pragma once

// Indoor CO2 mass balance for a single, well-mixed room.
//
// The balance is integrated in volumetric form,
//
//   dc/dt [ppm/s] = (Q(t) / V) * (c_out - c) + 1e6 * G(t) / V,
//
// with Q the total air exchange (infiltration times the ventilation
// multiplier while a window is open) and G the volumetric CO2 source of the
// occupant. The mass form (flows in g/s, densities of air and CO2) is the same
// equation multiplied through by a constant density and is kept in the
// conversion helpers below.

#include <cstdint>
#include <vector>

#include "occusim/occupancy_sim.hpp"

namespace occusim {

struct RoomConfig {
  double volume = 77.5;               // m^3
  double infiltration_flow = 0.0046;  // m^3/s
  double outdoor_co2 = 360.0;         // ppm
  double occupant_generation = 0.24;  // l/min per person
  double air_density = 1.2754;        // g/l, dry air at STP
  double co2_density = 1.977;         // g/l, CO2 at STP

  /// Throws DomainError naming the first non-positive field.
  void validate() const;
  double air_exchange_rate() const { return infiltration_flow / volume; }  // 1/s
};

/// Time series with a constant step. `start_time` is seconds since an
/// arbitrary epoch (simulated series start at 0).
struct Co2Series {
  double start_time = 0.0;
  double step = 1.0;
  std::vector<double> values;

  double time_at(std::size_t i) const { return start_time + step * static_cast<double>(i); }
};

/// Volumetric CO2 source of `n` occupants in m^3/s.
double generation_volumetric(int n, const RoomConfig& cfg);

/// CO2 mass generation in mg/s: n * g_occ * m_co2 * 1000 / 60.
double generation_mass(int n, const RoomConfig& cfg);

/// Infiltration as a mass flow of air in g/s.
double infiltration_mass_flow(const RoomConfig& cfg);

/// Volumetric air exchange in m^3/s for the given window state.
double effective_flow(int window_state, double vent_multiplier, const RoomConfig& cfg);

/// One forward-Euler step of the balance.
double step_co2(double c, int n, double flow, const RoomConfig& cfg, double dt);

/// Analytic fixed point of the balance for constant inputs.
double steady_state(int n, double flow, const RoomConfig& cfg);

/// Integrates consecutive days at a 1 s step. Sample i is the concentration
/// at t = i seconds; the occupant and window state of minute floor(i / 60)
/// drives the step from i to i + 1. The first sample is `c0`.
Co2Series simulate_co2(const std::vector<OccupancyTrace>& traces, const RoomConfig& cfg,
                       double c0);

/// Same integration as simulate_co2 but keeps only the per-minute means of
/// the 1 s samples, together with the extreme 1 s values.
struct MinuteCo2 {
  std::vector<double> mean;  // one per minute
  double min_value = 0.0;
  double max_value = 0.0;
};
MinuteCo2 simulate_co2_minutes(const std::vector<OccupancyTrace>& traces,
                               const RoomConfig& cfg, double c0);

}  // namespace occusim
