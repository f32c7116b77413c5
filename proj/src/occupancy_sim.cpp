#include "occusim/occupancy_sim.hpp"

#include <sstream>

#include "occusim/error.hpp"

namespace occusim {

std::array<std::pair<int, int>, 4> DaySchedule::presence_spans() const {
  return {{{arrival, break1_start},
           {break1_start + break_duration, lunch_start},
           {lunch_start + lunch_duration, break2_start},
           {break2_start + break_duration, departure}}};
}

bool DaySchedule::valid() const {
  if (arrival < 0 || departure > kMinutesPerDay) return false;
  for (const auto& [begin, end] : presence_spans()) {
    if (begin >= end) return false;
  }
  return true;
}

DaySchedule sample_day_schedule(Rng& rng, const ScheduleNominals& nominals) {
  std::uniform_int_distribution<int> shift(-nominals.max_shift, nominals.max_shift);
  DaySchedule s;
  s.arrival = nominals.arrival + shift(rng);
  s.break1_start = nominals.break1_start + shift(rng);
  s.lunch_start = nominals.lunch_start + shift(rng);
  s.break2_start = nominals.break2_start + shift(rng);
  s.departure = nominals.departure + shift(rng);
  s.lunch_duration = nominals.lunch_duration;
  s.break_duration = nominals.break_duration;
  if (!s.valid()) throw DomainError("schedule nominals allow overlapping events");
  return s;
}

TransitionMatrix transition_matrix(const SojournParams& params) {
  if (!(params.s0 >= 1.0) || !(params.s1 >= 1.0)) {
    throw DomainError("sojourn times must be at least one minute");
  }
  const double p01 = 1.0 / params.s0;
  const double p10 = 1.0 / params.s1;
  return {1.0 - p01, p01, p10, 1.0 - p10};
}

namespace {

std::uint8_t next_state(const TransitionMatrix& m, std::uint8_t state, Rng& rng) {
  return bernoulli_draw(rng) < m.leave_probability(state) ? (1 - state) : state;
}

SojournParams draw_params(const SojournBounds& b, ChainRole role, Rng& rng) {
  SojournParams p;
  p.s0 = uniform(rng, b.s0_min, b.s0_max);
  p.s1 = uniform(rng, b.s1_min, b.s1_max);
  p.role = role;
  return p;
}

}  // namespace

std::vector<std::uint8_t> run_markov_chain(const TransitionMatrix& matrix,
                                           std::uint8_t initial, std::size_t steps,
                                           Rng& rng) {
  std::vector<std::uint8_t> out;
  out.reserve(steps);
  std::uint8_t state = initial;
  for (std::size_t t = 0; t < steps; ++t) {
    if (t > 0) state = next_state(matrix, state, rng);
    out.push_back(state);
  }
  return out;
}

std::vector<std::uint8_t> simulate_presence(const DaySchedule& schedule,
                                            const SojournParams& params, Rng& rng) {
  const TransitionMatrix m = transition_matrix(params);
  std::vector<std::uint8_t> occ(kMinutesPerDay, 0);
  for (const auto& [begin, end] : schedule.presence_spans()) {
    std::uint8_t state = 1;  // the occupant has just (re)arrived
    for (int t = begin; t < end; ++t) {
      if (t > begin) state = next_state(m, state, rng);
      occ[t] = state;
    }
  }
  return occ;
}

WindowTrace simulate_windows(const DaySchedule& schedule, const SojournParams& params,
                             Rng& rng, double vm_min, double vm_max) {
  if (!(vm_min >= 1.0) || !(vm_max >= vm_min)) {
    throw DomainError("ventilation multiplier range must satisfy 1 <= min <= max");
  }
  const TransitionMatrix m = transition_matrix(params);
  WindowTrace out{std::vector<std::uint8_t>(kMinutesPerDay, 0),
                  std::vector<double>(kMinutesPerDay, 1.0)};
  std::uint8_t state = 0;
  double vm = 1.0;
  for (int t = schedule.arrival; t < schedule.departure; ++t) {
    if (t > schedule.arrival) {
      const std::uint8_t next = next_state(m, state, rng);
      if (next == 1 && state == 0) vm = uniform(rng, vm_min, vm_max);
      if (next == 0) vm = 1.0;
      state = next;
    }
    out.window[t] = state;
    out.vent_multiplier[t] = vm;
  }
  return out;
}

OccupancyTrace simulate_day(int day_index, const OccupancyConfig& config, Rng& rng) {
  OccupancyTrace trace;
  trace.day_index = day_index;
  trace.presence_params = draw_params(config.presence, ChainRole::presence, rng);
  trace.window_params = draw_params(config.window, ChainRole::window, rng);
  trace.schedule = sample_day_schedule(rng, config.schedule);
  trace.occ = simulate_presence(trace.schedule, trace.presence_params, rng);
  WindowTrace w = simulate_windows(trace.schedule, trace.window_params, rng,
                                   config.vm_min, config.vm_max);
  trace.window = std::move(w.window);
  trace.vent_multiplier = std::move(w.vent_multiplier);
  return trace;
}

std::vector<OccupancyTrace> simulate_days(int n_days, const OccupancyConfig& config,
                                          std::uint64_t seed) {
  if (n_days < 1) throw DomainError("n_days must be positive");
  std::vector<OccupancyTrace> traces;
  traces.reserve(n_days);
  for (int d = 0; d < n_days; ++d) {
    Rng rng = derive_stream(seed, static_cast<std::uint64_t>(d));
    traces.push_back(simulate_day(d, config, rng));
  }
  return traces;
}

std::string check_trace(const OccupancyTrace& trace, const OccupancyConfig& config) {
  std::ostringstream err;
  if (trace.occ.size() != kMinutesPerDay || trace.window.size() != kMinutesPerDay ||
      trace.vent_multiplier.size() != kMinutesPerDay) {
    return "trace does not cover 1440 minutes";
  }
  const DaySchedule& s = trace.schedule;
  std::vector<bool> basic(kMinutesPerDay, false);
  for (const auto& [begin, end] : s.presence_spans()) {
    for (int t = begin; t < end; ++t) basic[t] = true;
  }
  for (int t = 0; t < kMinutesPerDay; ++t) {
    if (trace.occ[t] > 1 || trace.window[t] > 1) {
      err << "non-binary state at minute " << t;
      return err.str();
    }
    if (!basic[t] && trace.occ[t] != 0) {
      err << "presence outside basic occupancy at minute " << t;
      return err.str();
    }
    if ((t < s.arrival || t >= s.departure) && trace.window[t] != 0) {
      err << "window open outside working hours at minute " << t;
      return err.str();
    }
    const double vm = trace.vent_multiplier[t];
    if (trace.window[t] == 0 && vm != 1.0) {
      err << "closed window with multiplier " << vm << " at minute " << t;
      return err.str();
    }
    if (trace.window[t] == 1 && (vm < config.vm_min || vm > config.vm_max)) {
      err << "multiplier " << vm << " out of range at minute " << t;
      return err.str();
    }
    if (t > 0 && trace.window[t] == 1 && trace.window[t - 1] == 1 &&
        vm != trace.vent_multiplier[t - 1]) {
      err << "multiplier changes within an open run at minute " << t;
      return err.str();
    }
  }
  return {};
}

double presence_rate(const std::vector<OccupancyTrace>& traces) {
  std::size_t occupied = 0;
  std::size_t total = 0;
  for (const auto& tr : traces) {
    for (auto v : tr.occ) occupied += v;
    total += tr.occ.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(occupied) / static_cast<double>(total);
}

}  // namespace occusim
