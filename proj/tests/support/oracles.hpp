#pragma once

// Reference computations that deliberately avoid the library's own code
// paths: closed-form ODE solutions, brute-force counting, finite differences.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "occusim/co2_sim.hpp"
#include "occusim/occupancy_sim.hpp"

namespace oracle {

/// Exact solution of the balance with coefficients held constant per minute,
/// sampled every second (same indexing as simulate_co2).
inline std::vector<double> analytic_co2(const std::vector<occusim::OccupancyTrace>& traces,
                                        const occusim::RoomConfig& cfg, double c0) {
  std::vector<double> out;
  out.reserve(traces.size() * 86400);
  double c = c0;
  for (const auto& tr : traces) {
    for (int m = 0; m < 1440; ++m) {
      const double q = tr.window[m] ? cfg.infiltration_flow * tr.vent_multiplier[m]
                                    : cfg.infiltration_flow;
      const double source = tr.occ[m] * cfg.occupant_generation / 1000.0 / 60.0;  // m^3/s
      const double c_eq = cfg.outdoor_co2 + 1e6 * source / q;
      const double rate = q / cfg.volume;
      const double start = c;
      for (int s = 0; s < 60; ++s) out.push_back(c_eq + (start - c_eq) * std::exp(-rate * s));
      c = c_eq + (start - c_eq) * std::exp(-rate * 60.0);
    }
  }
  return out;
}

/// Lengths of the maximal runs of `state`, dropping runs touching either end
/// (they are censored).
inline std::vector<int> interior_runs(const std::vector<std::uint8_t>& seq, std::uint8_t state) {
  std::vector<int> runs;
  std::size_t i = 0;
  while (i < seq.size()) {
    std::size_t j = i;
    while (j < seq.size() && seq[j] == seq[i]) ++j;
    if (seq[i] == state && i > 0 && j < seq.size()) runs.push_back(static_cast<int>(j - i));
    i = j;
  }
  return runs;
}

inline double mean(const std::vector<int>& v) {
  double s = 0.0;
  for (int x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

struct Confusion {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Confusion confusion(const std::vector<std::uint8_t>& pred,
                           const std::vector<std::uint8_t>& truth) {
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == 1 && truth[i] == 1) ++c.tp;
    if (pred[i] == 1 && truth[i] == 0) ++c.fp;
    if (pred[i] == 0 && truth[i] == 1) ++c.fn;
    if (pred[i] == 0 && truth[i] == 0) ++c.tn;
  }
  return c;
}

inline double accuracy(const Confusion& c) {
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.tp + c.tn + c.fp + c.fn);
}

/// F1 as 2TP / (2TP + FP + FN), the algebraically equivalent count form.
inline double f1(const Confusion& c) {
  const long denom = 2 * c.tp + c.fp + c.fn;
  return c.tp == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

/// Central differences of f at every coordinate of x.
inline std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                               std::vector<double> x, double eps) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double plus = f(x);
    x[i] = saved - eps;
    const double minus = f(x);
    x[i] = saved;
    g[i] = (plus - minus) / (2.0 * eps);
  }
  return g;
}

}  // namespace oracle
