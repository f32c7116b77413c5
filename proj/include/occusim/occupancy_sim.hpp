#pragma once

// Stochastic single-occupant office behaviour: a daily schedule of arrival,
// breaks, lunch and departure with jittered event times, a two-state Markov
// chain for short absences inside the scheduled spans, and a second chain for
// window opening with a random ventilation multiplier per opening.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "occusim/random.hpp"

namespace occusim {

inline constexpr int kMinutesPerDay = 1440;

/// Event times in minutes since midnight.
struct DaySchedule {
  int arrival = 480;
  int break1_start = 600;
  int lunch_start = 720;
  int break2_start = 900;
  int departure = 1080;
  int lunch_duration = 60;
  int break_duration = 15;

  /// Half-open [begin, end) minute spans of basic occupancy.
  std::array<std::pair<int, int>, 4> presence_spans() const;
  bool valid() const;
};

/// Nominal event times and the symmetric jitter applied to each of them.
struct ScheduleNominals {
  int arrival = 480;
  int break1_start = 600;
  int lunch_start = 720;
  int break2_start = 900;
  int departure = 1080;
  int lunch_duration = 60;
  int break_duration = 15;
  int max_shift = 15;
};

enum class ChainRole { presence, window };

/// Expected sojourn times (minutes) in the absent/closed state (s0) and the
/// present/open state (s1).
struct SojournParams {
  double s0 = 0.0;
  double s1 = 0.0;
  ChainRole role = ChainRole::presence;
};

struct SojournBounds {
  double s0_min, s0_max;
  double s1_min, s1_max;

  static SojournBounds presence_defaults() { return {10.0, 60.0, 30.0, 180.0}; }
  static SojournBounds window_defaults() { return {60.0, 480.0, 5.0, 30.0}; }

  bool contains(const SojournParams& p) const {
    return p.s0 >= s0_min && p.s0 <= s0_max && p.s1 >= s1_min && p.s1 <= s1_max;
  }
  /// All four bounds multiplied by `factor`.
  SojournBounds scaled(double factor) const {
    return {s0_min * factor, s0_max * factor, s1_min * factor, s1_max * factor};
  }
};

struct OccupancyConfig {
  ScheduleNominals schedule;
  SojournBounds presence = SojournBounds::presence_defaults();
  SojournBounds window = SojournBounds::window_defaults();
  double vm_min = 10.0;
  double vm_max = 100.0;
};

/// Row-stochastic 2x2 matrix; row = current state, column = next state.
struct TransitionMatrix {
  double p00, p01, p10, p11;

  double leave_probability(int state) const { return state == 0 ? p01 : p10; }
};

struct OccupancyTrace {
  int day_index = 0;
  std::vector<std::uint8_t> occ;       // per minute
  std::vector<std::uint8_t> window;    // per minute
  std::vector<double> vent_multiplier; // per minute
  SojournParams presence_params;
  SojournParams window_params;
  DaySchedule schedule;
};

struct WindowTrace {
  std::vector<std::uint8_t> window;
  std::vector<double> vent_multiplier;
};

/// Runs the chain for `steps` minutes starting from `initial` (included as
/// the first element).
std::vector<std::uint8_t> run_markov_chain(const TransitionMatrix& matrix,
                                           std::uint8_t initial, std::size_t steps,
                                           Rng& rng);

DaySchedule sample_day_schedule(Rng& rng, const ScheduleNominals& nominals = {});

/// Throws DomainError if either sojourn is below one minute.
TransitionMatrix transition_matrix(const SojournParams& params);

std::vector<std::uint8_t> simulate_presence(const DaySchedule& schedule,
                                            const SojournParams& params, Rng& rng);

WindowTrace simulate_windows(const DaySchedule& schedule, const SojournParams& params,
                             Rng& rng, double vm_min = 10.0, double vm_max = 100.0);

/// Simulates one day with freshly drawn sojourn parameters and schedule.
OccupancyTrace simulate_day(int day_index, const OccupancyConfig& config, Rng& rng);

/// Day d uses the stream derive_stream(seed, d), so days are independent and
/// any prefix of a longer run is reproduced exactly.
std::vector<OccupancyTrace> simulate_days(int n_days, const OccupancyConfig& config,
                                          std::uint64_t seed);

/// Returns an empty string when all trace invariants hold, otherwise a
/// description of the first violation.
std::string check_trace(const OccupancyTrace& trace, const OccupancyConfig& config);

/// Occupied minutes over all minutes of the given days.
double presence_rate(const std::vector<OccupancyTrace>& traces);

}  // namespace occusim
