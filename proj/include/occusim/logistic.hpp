#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "occusim/dataset.hpp"

namespace occusim {

/// Logistic regression on standardized window values.
struct LogisticWeights {
  std::vector<double> coef;
  double bias = 0.0;
  double input_mean = 0.0;
  double input_std = 1.0;
};

struct LogisticOptions {
  double gradient_tolerance = 1e-6;
  int max_iterations = 10000;
};

struct LogisticFitInfo {
  int iterations = 0;
  double loss = 0.0;
  double gradient_norm = 0.0;
};

/// Full-batch gradient descent with Armijo backtracking on the mean log-loss.
/// Throws DomainError when the training set holds a single class.
LogisticWeights fit_logistic(const WindowSet& samples, const LogisticOptions& options = {},
                             LogisticFitInfo* info = nullptr);

double logistic_probability(const LogisticWeights& w, std::span<const double> window);

/// Class 1 iff the predicted probability is at least 0.5.
std::uint8_t predict_logistic(const LogisticWeights& w, std::span<const double> window);
std::vector<std::uint8_t> predict_logistic(const LogisticWeights& w, const WindowSet& samples);

}  // namespace occusim
