#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gcn/autodiff.hpp"
#include "gcn/dataset.hpp"
#include "gcn/propagation.hpp"
#include "gcn/rng.hpp"

namespace gcn {

enum class Activation { None, ReLU, Tanh };

/// Which layer inputs receive dropout.
enum class DropoutPlacement {
  AllLayers,    // input features and every hidden activation
  FirstAndLast  // input of the first and of the last layer only
};

struct GcnConfig {
  std::vector<std::size_t> hidden_dims{16};
  PropagationKind propagation = PropagationKind::renormalized();
  double dropout = 0.5;
  double l2_factor = 5e-4;
  double learning_rate = 0.01;
  std::size_t max_epochs = 200;
  std::optional<std::size_t> early_stop_window = 10;
  bool residual = false;
  Activation activation = Activation::ReLU;
  std::uint64_t seed = 0;
  LambdaMaxMode lambda_max_mode = LambdaMaxMode::PowerIteration;
  bool restore_best = false;
  DropoutPlacement dropout_placement = DropoutPlacement::AllLayers;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

struct Layer {
  PropagationKind kind;
  std::vector<Parameter> weights;
  Activation activation = Activation::None;
  bool residual = false;
  bool dropout_input = true;

  std::size_t in_dim() const { return weights.front().value.rows(); }
  std::size_t out_dim() const { return weights.front().value.cols(); }
};

struct Model {
  std::vector<Layer> layers;
  /// Row-wise softmax after the last layer.
  bool softmax_output = true;
  /// Non-fatal build diagnostics (e.g. residuals that could not be placed).
  std::vector<std::string> warnings;

  std::vector<Parameter*> parameters();
  /// Every weight matrix of the first layer (the L2-regularized set).
  std::vector<Parameter*> first_layer_parameters();
};

/// Uniform draws from +-sqrt(6 / (fan_in + fan_out)).
DenseMatrix glorot_init(std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// hidden_dims.size() + 1 layers of `config.propagation`, hidden layers using
/// `config.activation`, the last one linear and followed by softmax.
/// Residual connections are added only between consecutive hidden layers of
/// equal width. Weights are drawn from `rng` in layer order.
Model build_model(const GcnConfig& config, std::size_t in_dim, std::size_t out_dim, Rng& rng);

/// Three renormalized tanh layers (in -> 4 -> 4 -> embedding_dim) as in the
/// random-weight embedding experiment. With `class_count`, a linear softmax
/// classifier is stacked on the embedding.
Model build_embedding_model(std::size_t in_dim, std::size_t embedding_dim,
                            std::optional<std::size_t> class_count, Rng& rng);

struct ForwardPass {
  Var output;
  /// Post-activation output of every layer (the last one before softmax).
  std::vector<Var> layer_outputs;
};

/// Records the model on `tape`. `dropout_rng` is only consumed when
/// `training` is set and dropout > 0.
ForwardPass forward(Tape& tape, Model& model, const Dataset& ds, const OperatorSet& ops,
                    bool training, double dropout, Rng& dropout_rng);

/// Evaluation-mode output matrix (probabilities when softmax_output).
DenseMatrix forward(Model& model, const Dataset& ds, const OperatorSet& ops);

/// Evaluation-mode output of layer `layer` (post-activation).
DenseMatrix layer_output(Model& model, const Dataset& ds, const OperatorSet& ops,
                         std::size_t layer);

/// Argmax of each masked row, lowest index winning ties.
std::size_t argmax_row(const DenseMatrix& z, std::size_t row);

/// Fraction of masked nodes whose argmax prediction equals their label.
double accuracy(const DenseMatrix& z, const std::vector<int>& labels,
                std::span<const std::size_t> mask);

}  // namespace gcn
