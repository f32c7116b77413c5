#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "occusim/calibration.hpp"

using namespace occusim;

namespace {

constexpr double kLambda = 0.0046 / 77.5;

// A 12 h night logged every 5 s.
Co2Series decay_series(double lambda, double c_out, double c0, double noise, unsigned seed,
                       double start_time = 0.0) {
  Co2Series s;
  s.start_time = start_time;
  s.step = 5.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, noise > 0.0 ? noise : 1.0);
  for (int i = 0; i < 12 * 720; ++i) {
    const double t = 5.0 * i;
    s.values.push_back(c_out + (c0 - c_out) * std::exp(-lambda * t) + (noise > 0.0 ? n(rng) : 0.0));
  }
  return s;
}

}  // namespace

TEST_CASE("decay model closed form") {
  CHECK(decay_model(0.0, kLambda, 360.0, 1000.0) == 1000.0);
  CHECK(decay_model(1e9, kLambda, 360.0, 1000.0) == doctest::Approx(360.0));
  // About 877 ppm after one hour in the closed reference room.
  CHECK(std::abs(decay_model(3600.0, kLambda, 360.0, 1000.0) - 877.0) < 0.5);
}

TEST_CASE("noiseless decay is recovered") {
  const auto fit = fit_decay(decay_series(kLambda, 360.0, 1200.0, 0.0, 1), 77.5);
  CHECK(std::abs(fit.lambda / kLambda - 1.0) < 0.01);
  CHECK(std::abs(fit.c_out - 360.0) < 2.0);
  CHECK(fit.mse < 1e-6);
  CHECK(fit.infiltration_flow == doctest::Approx(fit.lambda * 77.5));
  CHECK(fit.c0 > fit.c_out);
}

TEST_CASE("noisy decays are recovered over twenty trials") {
  for (unsigned trial = 0; trial < 20; ++trial) {
    CAPTURE(trial);
    const auto fit = fit_decay(decay_series(kLambda, 360.0, 1200.0, 5.0, 100 + trial), 77.5);
    CHECK(std::abs(fit.lambda / kLambda - 1.0) < 0.05);
    CHECK(std::abs(fit.c_out - 360.0) < 5.0);
  }
}

TEST_CASE("round trip across the identifiable range of rates") {
  for (double lambda : {1e-5, 3e-5, 1e-4, 3e-4, 1e-3}) {
    CAPTURE(lambda);
    const auto fit = fit_decay(decay_series(lambda, 400.0, 1100.0, 0.0, 2), 77.5);
    CHECK(std::abs(fit.lambda / lambda - 1.0) < 0.01);
    CHECK(std::abs(fit.c_out - 400.0) < 2.0);
  }
}

TEST_CASE("returned parameters beat a surrounding grid") {
  const auto series = decay_series(kLambda, 360.0, 1200.0, 5.0, 7);
  const auto fit = fit_decay(series, 77.5);
  const double best = decay_mse(series.values, series.step, fit.lambda, fit.c_out, fit.c0);
  CHECK(best == doctest::Approx(fit.mse));
  auto axis = [](double centre, int i) { return centre * (0.5 + i / 19.0); };
  for (int a = 0; a < 20; ++a) {
    for (int b = 0; b < 20; ++b) {
      for (int c = 0; c < 20; ++c) {
        const double mse = decay_mse(series.values, series.step, axis(fit.lambda, a),
                                     axis(fit.c_out, b), axis(fit.c0, c));
        REQUIRE(best <= mse);
      }
    }
  }
}

TEST_CASE("start timestamp does not matter") {
  const auto a = fit_decay(decay_series(kLambda, 360.0, 1200.0, 5.0, 3, 0.0), 77.5);
  const auto b = fit_decay(decay_series(kLambda, 360.0, 1200.0, 5.0, 3, 1.6e9), 77.5);
  CHECK(a.lambda == b.lambda);
  CHECK(a.c_out == b.c_out);
  CHECK(a.c0 == b.c0);
}

TEST_CASE("inputs without a decay are rejected") {
  Co2Series flat;
  flat.step = 5.0;
  flat.values.assign(500, 360.0);
  CHECK_THROWS_AS(fit_decay(flat, 77.5), DomainError);

  Co2Series rising = decay_series(kLambda, 360.0, 1200.0, 0.0, 1);
  std::reverse(rising.values.begin(), rising.values.end());
  CHECK_THROWS_AS(fit_decay(rising, 77.5), DomainError);

  Co2Series short_series = decay_series(kLambda, 360.0, 1200.0, 0.0, 1);
  short_series.values.resize(50);
  CHECK_THROWS_AS(fit_decay(short_series, 77.5), DomainError);
}

TEST_CASE("an exhausted iteration budget reports the best fit so far") {
  FitOptions opts;
  opts.max_iterations = 1;
  opts.mse_tolerance = 0.0;
  try {
    fit_decay(decay_series(kLambda, 360.0, 1200.0, 5.0, 5), 77.5, opts);
    FAIL("expected a convergence error");
  } catch (const FitConvergenceError& e) {
    CHECK(e.best_so_far().lambda > 0.0);
    CHECK(e.best_so_far().iterations == 1);
  }
}
