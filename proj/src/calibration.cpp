#include "occusim/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace occusim {

double decay_model(double t, double lambda, double c_out, double c0) {
  return c_out + (c0 - c_out) * std::exp(-lambda * t);
}

double decay_mse(std::span<const double> values, double step, double lambda, double c_out,
                 double c0) {
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double r = decay_model(step * static_cast<double>(i), lambda, c_out, c0) - values[i];
    sum += r * r;
  }
  return sum / static_cast<double>(values.size());
}

namespace {

double quartile_mean(std::span<const double> v, bool first) {
  const std::size_t q = std::max<std::size_t>(1, v.size() / 4);
  auto part = first ? v.first(q) : v.last(q);
  return std::accumulate(part.begin(), part.end(), 0.0) / static_cast<double>(q);
}

// Log-linear regression of log(c - floor) against t over the samples that
// are clearly above the floor.
double initial_lambda(std::span<const double> v, double step, double floor) {
  const double threshold = 0.1 * (v.front() - floor);
  double st = 0, sy = 0, stt = 0, sty = 0;
  int n = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - floor;
    if (d <= threshold || d <= 0.0) continue;
    const double t = step * static_cast<double>(i);
    const double y = std::log(d);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++n;
  }
  const double denom = n * stt - st * st;
  if (n < 2 || denom <= 0.0) return 1.0 / (step * static_cast<double>(v.size()));
  const double slope = (n * sty - st * sy) / denom;
  return slope < 0.0 ? -slope : 1.0 / (step * static_cast<double>(v.size()));
}

}  // namespace

DecayFit fit_decay(const Co2Series& series, double volume, const FitOptions& options) {
  const std::span<const double> y(series.values);
  if (y.size() < options.min_samples) {
    throw DomainError("decay fit needs at least " + std::to_string(options.min_samples) +
                      " samples, got " + std::to_string(y.size()));
  }
  if (!(series.step > 0.0)) throw DomainError("series step must be positive");
  if (!(volume > 0.0)) throw DomainError("room volume must be positive");
  if (quartile_mean(y, false) >= quartile_mean(y, true)) {
    throw DomainError("no decay: late concentrations are not below early ones");
  }

  const double step = series.step;
  const std::size_t n = y.size();
  const double floor = *std::min_element(y.begin(), y.end());
  Eigen::Vector3d theta(initial_lambda(y, step, floor), floor, y.front());

  auto mse_of = [&](const Eigen::Vector3d& p) { return decay_mse(y, step, p[0], p[1], p[2]); };

  double mse = mse_of(theta);
  double mu = 1e-3;
  DecayFit best{theta[0], theta[1], theta[2], mse, 0, theta[0] * volume};

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const double t = step * static_cast<double>(i);
      const double e = std::exp(-theta[0] * t);
      const double r = theta[1] + (theta[2] - theta[1]) * e - y[i];
      const Eigen::Vector3d g(-(theta[2] - theta[1]) * t * e, 1.0 - e, e);
      jtj.noalias() += g * g.transpose();
      jtr.noalias() += g * r;
    }

    bool accepted = false;
    while (!accepted) {
      Eigen::Matrix3d a = jtj;
      a.diagonal() += mu * jtj.diagonal().cwiseMax(1e-300);
      const Eigen::Vector3d delta = a.ldlt().solve(-jtr);
      const Eigen::Vector3d candidate = theta + delta;
      const double cand_mse =
          candidate[0] > 0.0 && delta.allFinite() ? mse_of(candidate) : INFINITY;
      if (cand_mse < mse) {
        const double change = mse - cand_mse;
        theta = candidate;
        mse = cand_mse;
        mu = std::max(mu / 10.0, 1e-12);
        accepted = true;
        best = {theta[0], theta[1], theta[2], mse, iter, theta[0] * volume};
        if (change < options.mse_tolerance) return best;
      } else {
        mu *= 10.0;
        // No direction reduces the error any further: a numerical minimum.
        if (mu > 1e16) {
          best.iterations = iter;
          return best;
        }
      }
    }
  }
  throw FitConvergenceError("decay fit did not converge in " +
                                std::to_string(options.max_iterations) + " iterations",
                            best);
}

}  // namespace occusim
