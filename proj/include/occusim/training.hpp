#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "occusim/network.hpp"

namespace occusim {

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 70;
  double validation_fraction = 0.2;
  int patience = 20;
  int max_epochs = 300;
  std::uint64_t seed = 0;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-7;

  void validate() const;
};

/// theta <- theta - lr * g / (sqrt(s) + eps), with s the running mean of g^2.
class RmsProp {
 public:
  RmsProp(std::size_t n, double learning_rate, double decay = 0.9, double epsilon = 1e-7);
  void step(std::span<double> params, std::span<const double> gradient);
  const std::vector<double>& mean_square() const { return mean_square_; }

 private:
  double learning_rate_;
  double decay_;
  double epsilon_;
  std::vector<double> mean_square_;
};

struct EpochRecord {
  int epoch = 0;  // 0 is the evaluation of the initial weights
  double train_loss = 0.0;
  double val_loss = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainingReport {
  int epochs_to_best = 0;
  double best_val_loss = 0.0;
  int epochs_trained = 0;
  std::vector<EpochRecord> history;

  bool operator==(const TrainingReport&) const = default;
};

struct TrainResult {
  NetworkWeights weights;
  TrainingReport report;
};

/// Splits `samples` chronologically into training and validation parts and
/// trains. Without `warm_start` the weights are freshly initialized and the
/// input statistics come from the training part; with it, weights and
/// statistics are copied and every layer is updated. The weights of the epoch
/// with the lowest validation loss are returned (epoch 0 = the initial
/// weights).
TrainResult train(const WindowSet& samples, const NetworkConfig& net, const TrainConfig& cfg,
                  const NetworkWeights* warm_start = nullptr);

/// Same, with an explicit validation set.
TrainResult train(const WindowSet& train_set, const WindowSet& validation_set,
                  const NetworkConfig& net, const TrainConfig& cfg,
                  const NetworkWeights* warm_start = nullptr);

}  // namespace occusim
