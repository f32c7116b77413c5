#pragma once

// Tracer-gas estimation of the infiltration rate: the unoccupied,
// closed-window solution of the mass balance is an exponential relaxation
// towards the outdoor level, and a least-squares fit of it to a measured
// nighttime decay yields the air-exchange rate and the outdoor concentration.

#include <span>

#include "occusim/co2_sim.hpp"
#include "occusim/error.hpp"

namespace occusim {

struct DecayFit {
  double lambda = 0.0;  // 1/s
  double c_out = 0.0;   // ppm
  double c0 = 0.0;      // ppm, fitted level at the first sample
  double mse = 0.0;     // ppm^2
  int iterations = 0;
  double infiltration_flow = 0.0;  // lambda * V, m^3/s
};

/// Thrown when the optimizer exhausts its iteration budget.
class FitConvergenceError : public NumericalError {
 public:
  FitConvergenceError(const std::string& what, DecayFit best)
      : NumericalError(what), best_(best) {}
  const DecayFit& best_so_far() const noexcept { return best_; }

 private:
  DecayFit best_;
};

struct FitOptions {
  double mse_tolerance = 1e-6;  // ppm^2 change between accepted steps
  int max_iterations = 500;
  std::size_t min_samples = 100;
};

double decay_model(double t, double lambda, double c_out, double c0);

/// Mean squared error of the decay model against `values` sampled every
/// `step` seconds starting at t = 0.
double decay_mse(std::span<const double> values, double step, double lambda, double c_out,
                 double c0);

/// Levenberg-Marquardt fit of (lambda, c_out, c0). Only relative time
/// enters, so the series' start_time is irrelevant.
///
/// Throws DomainError for short or non-decaying input and
/// FitConvergenceError when the iteration budget is exhausted.
DecayFit fit_decay(const Co2Series& series, double volume, const FitOptions& options = {});

}  // namespace occusim
