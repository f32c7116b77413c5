#include "occusim/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "occusim/error.hpp"

namespace occusim {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw DomainError("learning rate must be positive");
  if (batch_size < 1) throw DomainError("batch size must be >= 1");
  if (patience < 1) throw DomainError("patience must be >= 1");
  if (max_epochs < 0) throw DomainError("max_epochs must be >= 0");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw DomainError("validation fraction must be in (0, 1)");
  }
}

RmsProp::RmsProp(std::size_t n, double learning_rate, double decay, double epsilon)
    : learning_rate_(learning_rate), decay_(decay), epsilon_(epsilon), mean_square_(n, 0.0) {}

void RmsProp::step(std::span<double> params, std::span<const double> gradient) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = gradient[i];
    mean_square_[i] = decay_ * mean_square_[i] + (1.0 - decay_) * g * g;
    params[i] -= learning_rate_ * g / (std::sqrt(mean_square_[i]) + epsilon_);
  }
}

TrainResult train(const WindowSet& samples, const NetworkConfig& net, const TrainConfig& cfg,
                  const NetworkWeights* warm_start) {
  cfg.validate();
  if (samples.size() < 2 * cfg.batch_size) {
    throw DomainError("training needs at least " + std::to_string(2 * cfg.batch_size) +
                      " samples, got " + std::to_string(samples.size()));
  }
  auto [train_set, val_set] = split(samples, cfg.validation_fraction);
  return train(train_set, val_set, net, cfg, warm_start);
}

TrainResult train(const WindowSet& train_set, const WindowSet& validation_set,
                  const NetworkConfig& net, const TrainConfig& cfg,
                  const NetworkWeights* warm_start) {
  cfg.validate();
  net.validate();
  if (train_set.empty() || validation_set.empty()) {
    throw DomainError("training and validation sets must be non-empty");
  }
  if (train_set.length() != static_cast<std::size_t>(net.input_length * net.input_channels)) {
    throw StructuralError("window length does not match the network input");
  }

  NetworkWeights weights;
  if (warm_start != nullptr) {
    if (!(warm_start->config == net)) {
      throw StructuralError("warm-start weights were built for a different network config");
    }
    warm_start->check();
    weights = *warm_start;
  } else {
    Rng init_rng = derive_stream(cfg.seed, 0);
    weights = init_weights(net, init_rng);
    std::tie(weights.input_mean, weights.input_std) = input_statistics(train_set);
  }
  Rng shuffle_rng = derive_stream(cfg.seed, 1);
  Rng dropout_rng = derive_stream(cfg.seed, 2);

  TrainResult result{weights, {}};
  auto& report = result.report;
  const double initial_val = mean_loss(weights, validation_set);
  report.history.push_back({0, mean_loss(weights, train_set), initial_val});
  report.best_val_loss = initial_val;
  report.epochs_to_best = 0;

  RmsProp optimizer(weights.params.size(), cfg.learning_rate, cfg.rms_decay, cfg.rms_epsilon);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint8_t> labels;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      labels.clear();
      for (std::size_t i : idx) labels.push_back(train_set.label(i));
      auto lg = loss_and_gradients(weights, batch_matrix(train_set, idx), labels, &dropout_rng,
                                   batch_index);
      if (lg.loss > 1e6) {
        throw NumericalError("training diverged in epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      loss_sum += lg.loss * static_cast<double>(idx.size());
      optimizer.step(weights.params, lg.gradient);
    }
    const double val = mean_loss(weights, validation_set);
    if (!std::isfinite(val)) {
      throw NumericalError("non-finite validation loss in epoch " + std::to_string(epoch));
    }
    report.history.push_back({epoch, loss_sum / static_cast<double>(order.size()), val});
    report.epochs_trained = epoch;
    if (val < report.best_val_loss) {
      report.best_val_loss = val;
      report.epochs_to_best = epoch;
      result.weights = weights;
    } else if (epoch - report.epochs_to_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace occusim
