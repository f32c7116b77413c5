#pragma once

// Metrics and the repeated cross-validation protocol comparing a warm-started
// (transfer) detector, a freshly initialized one, and a logistic baseline on
// a handful of labelled days.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "occusim/dataset.hpp"
#include "occusim/network.hpp"
#include "occusim/training.hpp"

namespace occusim {

double accuracy(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels);

/// F1 of `positive_class`; 0 when precision + recall is 0.
double f1_score(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels,
                std::uint8_t positive_class = 1);

struct FoldSpec {
  std::vector<int> train_days;
  std::vector<int> test_days;
  int k = 0;
};

/// Blocks of k consecutive days for training, the rest for testing. Without
/// wraparound there are n_days - k + 1 folds, with it n_days.
std::vector<FoldSpec> make_folds(int n_days, int k, bool wraparound = false);

enum class Mode { transfer, cold, logistic };
const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct RunResult {
  int k = 0;
  int fold = 0;
  std::uint64_t seed = 0;
  Mode mode = Mode::cold;
  double accuracy = 0.0;
  double f1 = 0.0;
  int epochs_to_best = 0;  // 0 for the logistic baseline

  bool operator==(const RunResult&) const = default;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

Summary summarize(std::span<const double> values);

struct Aggregate {
  int k = 0;
  Mode mode = Mode::cold;
  std::size_t runs = 0;
  Summary accuracy;
  Summary f1;
  Summary epochs;
};

struct ProtocolConfig {
  std::vector<int> ks{1, 2, 3, 4};
  int n_seeds = 10;
  std::uint64_t base_seed = 0;
  bool wraparound = false;
  std::vector<Mode> modes{Mode::transfer, Mode::cold, Mode::logistic};
  NetworkConfig net;
  TrainConfig train;
  int jobs = 1;
};

struct ProtocolReport {
  std::vector<RunResult> runs;  // ordered by (k, fold, seed, mode)
  std::vector<Aggregate> aggregates;

  const Aggregate* find(int k, Mode mode) const;
};

/// `days[i]` holds the windows of day i. Transfer runs are skipped when
/// `base` is null. Run seeds are base_seed + s for s in [0, n_seeds); all
/// modes of a (fold, seed) pair share the seed.
ProtocolReport run_protocol(const std::vector<WindowSet>& days, const NetworkWeights* base,
                            const ProtocolConfig& config);

std::vector<Aggregate> aggregate(std::span<const RunResult> runs);

std::string format_table(const ProtocolReport& report);
std::string to_json(const ProtocolReport& report);
std::string to_csv(const ProtocolReport& report);

}  // namespace occusim
