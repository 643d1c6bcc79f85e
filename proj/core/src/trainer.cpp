#include "gcn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <new>
#include <stdexcept>
#include <tuple>

namespace gcn {

namespace {

using Clock = std::chrono::steady_clock;

double half_squared_norm(std::span<Parameter* const> params) {
  double s = 0.0;
  for (const Parameter* p : params)
    for (double v : p->value.values()) s += v * v;
  return 0.5 * s;
}

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// One full-batch step: forward with dropout, loss, backward, Adam update.
// Returns the training loss (including the L2 term).
double training_step(Model& model, const Dataset& ds, const OperatorSet& ops,
                     const GcnConfig& config, const DenseMatrix& one_hot,
                     std::span<Parameter* const> params, std::span<Parameter* const> regularized,
                     AdamState& adam, Rng& dropout_rng) {
  Tape tape;
  const ForwardPass pass = forward(tape, model, ds, ops, true, config.dropout, dropout_rng);
  Var loss = tape.masked_cross_entropy(pass.output, one_hot, ds.splits.train);
  if (config.l2_factor > 0.0 && !regularized.empty()) {
    std::vector<Var> reg;
    for (Parameter* p : regularized) reg.push_back(tape.parameter(*p));
    loss = tape.axpby(1.0, loss, config.l2_factor, tape.l2_penalty(reg));
  }
  const double value = tape.scalar(loss);
  tape.backward(loss);
  adam_step(params, adam, config.learning_rate);
  return value;
}

double masked_cross_entropy_value(const DenseMatrix& z, const DenseMatrix& one_hot,
                                  std::span<const std::size_t> mask) {
  Tape t;
  const Var zv = t.constant_ref(z);
  return t.scalar(t.masked_cross_entropy(zv, one_hot, mask));
}

}  // namespace

TrainReport train_model(Model& model, const Dataset& ds, const OperatorSet& ops,
                        const GcnConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (ds.splits.train.empty()) throw std::invalid_argument("train: empty training mask");
  if (config.early_stop_window && ds.splits.val.empty()) {
    throw std::invalid_argument("train: early stopping needs a non-empty validation mask");
  }
  const DenseMatrix one_hot = ds.one_hot_labels();
  Rng dropout_rng = Rng(config.seed).split("dropout");
  AdamState adam;
  const std::vector<Parameter*> params = model.parameters();
  const std::vector<Parameter*> regularized = model.first_layer_parameters();

  TrainReport report;
  report.seed = config.seed;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<DenseMatrix> best_weights;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = Clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = training_step(model, ds, ops, config, one_hot, params, regularized, adam,
                                   dropout_rng);
    rec.val_loss = std::numeric_limits<double>::quiet_NaN();
    rec.val_accuracy = std::numeric_limits<double>::quiet_NaN();
    if (!ds.splits.val.empty()) {
      const DenseMatrix z = forward(model, ds, ops);
      rec.val_loss = masked_cross_entropy_value(z, one_hot, ds.splits.val) +
                     config.l2_factor * half_squared_norm(regularized);
      rec.val_accuracy = accuracy(z, ds.labels, ds.splits.val);
    }
    rec.wall_ms = elapsed_ms(start);
    report.records.push_back(rec);
    report.stopped_epoch = epoch;
    if (on_epoch) on_epoch(rec, model);

    if (!ds.splits.val.empty()) {
      if (rec.val_loss < best_val) {
        best_val = rec.val_loss;
        since_best = 0;
        if (config.restore_best) {
          best_weights.clear();
          for (const Parameter* p : params) best_weights.push_back(p->value);
        }
      } else {
        ++since_best;
      }
      if (config.early_stop_window && since_best >= *config.early_stop_window) break;
    }
  }

  if (config.restore_best && !best_weights.empty()) {
    for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = best_weights[k];
  }
  report.test_accuracy = ds.splits.test.empty()
                             ? std::numeric_limits<double>::quiet_NaN()
                             : evaluate(model, ds, ops, ds.splits.test);
  return report;
}

TrainResult train(const Dataset& ds, const GcnConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const OperatorSet ops = prepare_operators(ds.graph, config.propagation, config.lambda_max_mode);
  Rng init_rng = Rng(config.seed).split("init");
  TrainResult result{build_model(config, ds.feature_dim(), ds.class_count, init_rng), {}};
  result.report = train_model(result.model, ds, ops, config, on_epoch);
  return result;
}

double evaluate(Model& model, const Dataset& ds, const OperatorSet& ops,
                std::span<const std::size_t> mask) {
  return accuracy(forward(model, ds, ops), ds.labels, mask);
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels,
                                                       std::size_t class_count,
                                                       std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("stratified_folds: need at least 2 folds");
  std::vector<std::vector<std::size_t>> by_class(class_count);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != kUnlabeled) by_class.at(static_cast<std::size_t>(labels[i])).push_back(i);
  Rng rng = Rng(seed).split("folds");
  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t next = 0;
  for (auto& members : by_class) {
    rng.shuffle(members);
    for (std::size_t i : members) {
      out[next].push_back(i);
      next = (next + 1) % folds;
    }
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

std::pair<double, double> mean_and_stderr(const std::vector<double>& xs) {
  if (xs.empty()) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return {mean, sd / std::sqrt(static_cast<double>(xs.size()))};
}

CrossValidationResult cross_validate(const Dataset& ds, std::size_t folds,
                                     const GcnConfig& config) {
  const auto fold_sets = stratified_folds(ds.labels, ds.class_count, folds, config.seed);
  GcnConfig cfg = config;
  cfg.early_stop_window.reset();
  cfg.restore_best = false;
  const OperatorSet ops = prepare_operators(ds.graph, cfg.propagation, cfg.lambda_max_mode);

  CrossValidationResult result;
  Dataset fold_ds = ds;
  for (std::size_t f = 0; f < folds; ++f) {
    fold_ds.splits = {};
    for (std::size_t g = 0; g < folds; ++g) {
      auto& dst = g == f ? fold_ds.splits.test : fold_ds.splits.train;
      dst.insert(dst.end(), fold_sets[g].begin(), fold_sets[g].end());
    }
    std::sort(fold_ds.splits.train.begin(), fold_ds.splits.train.end());
    cfg.seed = Rng(config.seed).split(static_cast<std::uint64_t>(f)).seed();
    Rng init_rng = Rng(cfg.seed).split("init");
    Model model = build_model(cfg, ds.feature_dim(), ds.class_count, init_rng);
    const TrainReport report = train_model(model, fold_ds, ops, cfg);
    result.test_accuracy.push_back(report.test_accuracy);
    result.train_accuracy.push_back(evaluate(model, fold_ds, ops, fold_ds.splits.train));
  }
  std::tie(result.mean_train, result.stderr_train) = mean_and_stderr(result.train_accuracy);
  std::tie(result.mean_test, result.stderr_test) = mean_and_stderr(result.test_accuracy);
  return result;
}

BenchResult benchmark_epoch(std::size_t n, const GcnConfig& config, std::size_t epochs) {
  BenchResult result;
  result.n = n;
  try {
    const Dataset ds = random_graph(n, config.seed);
    GcnConfig cfg = config;
    cfg.early_stop_window.reset();
    const OperatorSet ops = prepare_operators(ds.graph, cfg.propagation, cfg.lambda_max_mode);
    Rng init_rng = Rng(cfg.seed).split("init");
    Model model = build_model(cfg, ds.feature_dim(), ds.class_count, init_rng);
    const DenseMatrix one_hot = ds.one_hot_labels();
    const std::vector<Parameter*> params = model.parameters();
    const std::vector<Parameter*> regularized = model.first_layer_parameters();
    AdamState adam;
    Rng dropout_rng = Rng(cfg.seed).split("dropout");
    std::vector<double> seconds;
    seconds.reserve(epochs);
    for (std::size_t e = 0; e < epochs; ++e) {
      const auto start = Clock::now();
      training_step(model, ds, ops, cfg, one_hot, params, regularized, adam, dropout_rng);
      seconds.push_back(elapsed_ms(start) / 1000.0);
    }
    result.epochs = epochs;
    if (!seconds.empty()) {
      double mean = 0.0;
      for (double s : seconds) mean += s;
      mean /= static_cast<double>(seconds.size());
      double ss = 0.0;
      for (double s : seconds) ss += (s - mean) * (s - mean);
      result.mean_seconds = mean;
      result.std_seconds = std::sqrt(ss / static_cast<double>(seconds.size()));
    }
  } catch (const std::bad_alloc&) {
    result.out_of_memory = true;
  }
  return result;
}

}  // namespace gcn
