#include "occusim/logistic.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "occusim/error.hpp"
#include "occusim/network.hpp"

namespace occusim {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

LogisticWeights fit_logistic(const WindowSet& samples, const LogisticOptions& options,
                             LogisticFitInfo* info) {
  if (samples.empty()) throw DomainError("no samples to fit");
  std::size_t positives = 0;
  for (auto l : samples.labels()) positives += l;
  if (positives == 0 || positives == samples.size()) {
    throw DomainError("degenerate fit: training samples hold a single class");
  }

  LogisticWeights w;
  std::tie(w.input_mean, w.input_std) = input_statistics(samples);
  const auto n = static_cast<Eigen::Index>(samples.size());
  const auto d = static_cast<Eigen::Index>(samples.length());

  // Design matrix with a trailing column of ones for the bias.
  Eigen::MatrixXd x(n, d + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto in = samples.inputs(static_cast<std::size_t>(i));
    for (Eigen::Index k = 0; k < d; ++k) x(i, k) = (in[k] - w.input_mean) / w.input_std;
    x(i, d) = 1.0;
    y(i) = samples.label(static_cast<std::size_t>(i));
  }

  auto loss_of = [&](const Eigen::VectorXd& theta) {
    const Eigen::VectorXd z = x * theta;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sum += softplus(z(i)) - y(i) * z(i);
    return sum / static_cast<double>(n);
  };
  auto grad_of = [&](const Eigen::VectorXd& theta) {
    Eigen::VectorXd p = (x * theta).unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
    return Eigen::VectorXd(x.transpose() * (p - y) / static_cast<double>(n));
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  double loss = loss_of(theta);
  double step = 1.0;
  int iter = 0;
  Eigen::VectorXd g = grad_of(theta);
  for (; iter < options.max_iterations && g.norm() >= options.gradient_tolerance; ++iter) {
    const double g2 = g.squaredNorm();
    step *= 2.0;
    Eigen::VectorXd candidate = theta - step * g;
    double cand_loss = loss_of(candidate);
    while (cand_loss > loss - 0.5 * step * g2 && step > 1e-20) {
      step *= 0.5;
      candidate = theta - step * g;
      cand_loss = loss_of(candidate);
    }
    if (!(cand_loss < loss)) break;  // no further decrease representable
    theta = std::move(candidate);
    loss = cand_loss;
    g = grad_of(theta);
  }
  if (info != nullptr) *info = {iter, loss, g.norm()};

  w.coef.assign(theta.data(), theta.data() + d);
  w.bias = theta(d);
  return w;
}

double logistic_probability(const LogisticWeights& w, std::span<const double> window) {
  if (window.size() != w.coef.size()) throw DomainError("window length mismatch");
  double z = w.bias;
  for (std::size_t k = 0; k < window.size(); ++k) {
    z += w.coef[k] * (window[k] - w.input_mean) / w.input_std;
  }
  return 1.0 / (1.0 + std::exp(-z));
}

std::uint8_t predict_logistic(const LogisticWeights& w, std::span<const double> window) {
  return logistic_probability(w, window) >= 0.5 ? 1 : 0;
}

std::vector<std::uint8_t> predict_logistic(const LogisticWeights& w, const WindowSet& samples) {
  std::vector<std::uint8_t> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out.push_back(predict_logistic(w, samples.inputs(i)));
  return out;
}

}  // namespace occusim
