#pragma once

// Occupancy detector: 1-D convolution + max pooling over a window of
// per-minute CO2 values, a stack of bidirectional LSTM layers, dense ReLU
// layers with dropout, and a softmax over {absent, present}.
//
// All trainable tensors live in one flat, column-major parameter vector whose
// layout is a pure function of the NetworkConfig. Optimizers, serialization
// and gradient checks work on that vector directly.

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "occusim/dataset.hpp"
#include "occusim/random.hpp"

namespace occusim {

struct NetworkConfig {
  int conv_filters = 10;
  int conv_kernel = 3;
  int pool_factor = 2;
  std::vector<int> recurrent_units{200, 150, 100};
  std::vector<int> fc_units{300, 200};
  /// Dropout before the first and before the second dense layer (the output
  /// layer counts as a dense layer when only one hidden layer exists).
  std::vector<double> dropout{0.5, 0.3};
  int classes = 2;
  int input_length = 15;
  int input_channels = 1;

  /// Reduced widths for CPU-scale experiments.
  static NetworkConfig reduced();

  void validate() const;
  int conv_length() const { return input_length - conv_kernel + 1; }
  int pooled_length() const { return conv_length() / pool_factor; }

  bool operator==(const NetworkConfig&) const = default;
};

struct TensorInfo {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

/// Ordered tensor table: conv/kernel, conv/bias, then per recurrent layer l
/// and direction d in {fwd, bwd}: lstm<l>/<d>/{input,recurrent,bias}, then
/// dense<j>/{kernel,bias} for each hidden dense layer and output/{kernel,bias}.
/// LSTM gate blocks are stacked in the order input, forget, cell, output.
class ParameterLayout {
 public:
  explicit ParameterLayout(const NetworkConfig& config);
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  std::size_t total_size() const { return total_; }
  const TensorInfo& at(std::string_view name) const;

 private:
  void add(std::string name, Eigen::Index rows, Eigen::Index cols);
  std::vector<TensorInfo> tensors_;
  std::size_t total_ = 0;
};

// Over-aligned so that Eigen sums the mapped tensors in the same order on every
// allocation; with plain malloc alignment results differ in the last bits.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;

struct NetworkWeights {
  NetworkConfig config;
  double input_mean = 0.0;
  double input_std = 1.0;
  ParamVector params;

  ParameterLayout layout() const { return ParameterLayout(config); }
  Eigen::Map<const Eigen::MatrixXd> tensor(const TensorInfo& info) const {
    return {params.data() + info.offset, info.rows, info.cols};
  }
  Eigen::Map<Eigen::MatrixXd> tensor(const TensorInfo& info) {
    return {params.data() + info.offset, info.rows, info.cols};
  }
  /// Throws StructuralError if the parameter count disagrees with the config.
  void check() const;
};

/// All-zero parameters with identity normalization.
NetworkWeights zero_weights(const NetworkConfig& config);

/// Glorot-uniform kernels, zero biases, LSTM forget-gate biases set to one.
NetworkWeights init_weights(const NetworkConfig& config, Rng& rng);

/// Mean and standard deviation over every value of every window.
std::pair<double, double> input_statistics(const WindowSet& samples);

/// Raw windows as a (input_length * channels) x batch matrix.
Eigen::MatrixXd batch_matrix(const WindowSet& samples, std::span<const std::size_t> indices);
Eigen::MatrixXd batch_matrix(const WindowSet& samples);

/// Class probabilities (classes x batch) for raw, unnormalized windows. With
/// `dropout_rng` set, inverted dropout is active (training mode).
Eigen::MatrixXd forward(const NetworkWeights& weights, const Eigen::MatrixXd& raw_inputs,
                        Rng* dropout_rng = nullptr);

/// Final states of one bidirectional layer run on its own, exposed for
/// direction-symmetry checks. `sequence` is features x (steps * batch),
/// time-major blocks. Returns 2H x batch when `final_only`, otherwise
/// 2H x (steps * batch).
Eigen::MatrixXd bidirectional_layer(const NetworkWeights& weights, int layer,
                                    const Eigen::MatrixXd& sequence, int steps,
                                    bool final_only);

struct LossAndGradient {
  double loss = 0.0;
  ParamVector gradient;  // same layout as NetworkWeights::params
};

/// Mean categorical cross-entropy and its gradient by backpropagation
/// through time. Throws NumericalError on a non-finite loss, naming
/// `batch_index`.
LossAndGradient loss_and_gradients(const NetworkWeights& weights,
                                   const Eigen::MatrixXd& raw_inputs,
                                   std::span<const std::uint8_t> labels,
                                   Rng* dropout_rng = nullptr, std::size_t batch_index = 0);

/// Mean cross-entropy without gradients, evaluated in chunks.
double mean_loss(const NetworkWeights& weights, const WindowSet& samples);

/// argmax class per window.
std::vector<std::uint8_t> predict(const NetworkWeights& weights, const WindowSet& samples);

/// Binary container: magic, format version, JSON header (config and
/// normalization statistics), then every tensor as name, shape and row-major
/// little-endian doubles.
void save_weights(const std::filesystem::path& path, const NetworkWeights& weights);

/// Throws FormatError for bad magic, unknown version or truncation, and
/// StructuralError if a tensor shape disagrees with the stored config.
NetworkWeights load_weights(const std::filesystem::path& path);

/// As above, and additionally requires the stored config to match
/// `expected`, naming the first mismatched tensor shape otherwise.
NetworkWeights load_weights(const std::filesystem::path& path, const NetworkConfig& expected);

}  // namespace occusim
