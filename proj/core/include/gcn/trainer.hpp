#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gcn/dataset.hpp"
#include "gcn/model.hpp"
#include "gcn/optimizer.hpp"

namespace gcn {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN without a validation mask
  double val_accuracy = 0.0;
  double wall_ms = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> records;
  std::size_t stopped_epoch = 0;
  double test_accuracy = 0.0;  // NaN without a test mask
  std::uint64_t seed = 0;
};

struct TrainResult {
  Model model;
  TrainReport report;
};

/// Called after every epoch; the model reflects that epoch's update.
using EpochCallback = std::function<void(const EpochRecord&, Model&)>;

/// Full-batch training with Adam.
///
/// Loss per epoch is the summed cross-entropy over the training mask plus
/// l2_factor * 0.5 * |W|^2 over every weight matrix of the first layer.
/// Validation loss carries the same L2 term. With an early-stopping window
/// w, training stops once w consecutive epochs fail to set a new strict
/// minimum of the validation loss. The returned model holds last-epoch
/// weights unless `restore_best` is set.
TrainResult train(const Dataset& ds, const GcnConfig& config,
                  const EpochCallback& on_epoch = {});

/// Same, for a caller-built model and precomputed operators.
TrainReport train_model(Model& model, const Dataset& ds, const OperatorSet& ops,
                        const GcnConfig& config, const EpochCallback& on_epoch = {});

/// Evaluation-mode accuracy over `mask`.
double evaluate(Model& model, const Dataset& ds, const OperatorSet& ops,
                std::span<const std::size_t> mask);

/// Stratified fold assignment: within each class (shuffled with `seed`) nodes
/// are dealt round-robin, continuing the deal across classes.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels,
                                                       std::size_t class_count,
                                                       std::size_t folds, std::uint64_t seed);

struct CrossValidationResult {
  std::vector<double> train_accuracy;  // per fold
  std::vector<double> test_accuracy;
  double mean_train = 0.0;
  double mean_test = 0.0;
  double stderr_train = 0.0;
  double stderr_test = 0.0;
};

/// k-fold cross-validation over every labeled node. Each fold trains on the
/// remaining folds with `config` (no validation set, so early stopping must
/// be off) and tests on the held-out fold.
CrossValidationResult cross_validate(const Dataset& ds, std::size_t folds,
                                     const GcnConfig& config);

struct BenchResult {
  std::size_t n = 0;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
  std::size_t epochs = 0;
  bool out_of_memory = false;
};

/// Mean wall time of forward + loss + backward + Adam update over `epochs`
/// epochs on random_graph(n, config.seed). Early stopping is never used.
BenchResult benchmark_epoch(std::size_t n, const GcnConfig& config, std::size_t epochs = 100);

/// Mean and standard error of the mean.
std::pair<double, double> mean_and_stderr(const std::vector<double>& xs);

}  // namespace gcn
