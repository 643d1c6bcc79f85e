#include "gcn/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gcn {

void GcnConfig::validate() const {
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(l2_factor >= 0.0)) throw std::invalid_argument("l2 factor must be non-negative");
  for (std::size_t h : hidden_dims)
    if (h == 0) throw std::invalid_argument("hidden dimensions must be >= 1");
  if (early_stop_window && *early_stop_window == 0) {
    throw std::invalid_argument("early-stopping window must be >= 1");
  }
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (Layer& l : layers)
    for (Parameter& p : l.weights) out.push_back(&p);
  return out;
}

std::vector<Parameter*> Model::first_layer_parameters() {
  std::vector<Parameter*> out;
  if (layers.empty()) return out;
  for (Parameter& p : layers.front().weights) out.push_back(&p);
  return out;
}

DenseMatrix glorot_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  if (fan_in == 0 || fan_out == 0) throw std::invalid_argument("glorot_init: zero fan");
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  DenseMatrix w(fan_in, fan_out);
  for (double& v : w.values()) v = rng.uniform(-bound, bound);
  return w;
}

namespace {

Layer make_layer(const PropagationKind& kind, std::size_t in, std::size_t out,
                 Activation act, std::size_t index, Rng& rng) {
  Layer l;
  l.kind = kind;
  l.activation = act;
  for (std::size_t k = 0; k < kind.weight_count(); ++k) {
    l.weights.emplace_back("layer" + std::to_string(index) + "/theta" + std::to_string(k),
                           glorot_init(in, out, rng));
  }
  return l;
}

// Inverted-dropout factors: 1 / (1 - p) with probability 1 - p, else 0.
std::vector<double> dropout_mask(std::size_t n, double p, Rng& rng) {
  std::vector<double> m(n);
  const double keep = 1.0 / (1.0 - p);
  for (double& v : m) v = rng.uniform() >= p ? keep : 0.0;
  return m;
}

}  // namespace

Model build_model(const GcnConfig& config, std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  config.validate();
  if (in_dim == 0 || out_dim == 0) throw std::invalid_argument("build_model: zero dimension");
  std::vector<std::size_t> dims{in_dim};
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(out_dim);

  Model model;
  const std::size_t layer_count = dims.size() - 1;
  for (std::size_t l = 0; l < layer_count; ++l) {
    const bool last = l + 1 == layer_count;
    Layer layer = make_layer(config.propagation, dims[l], dims[l + 1],
                             last ? Activation::None : config.activation, l, rng);
    // Hidden-to-hidden junctions only.
    layer.residual = config.residual && l > 0 && !last && dims[l] == dims[l + 1];
    layer.dropout_input = config.dropout_placement == DropoutPlacement::AllLayers || l == 0 ||
                          last;
    model.layers.push_back(std::move(layer));
  }
  model.softmax_output = true;
  if (config.residual) {
    const bool placed = std::any_of(model.layers.begin(), model.layers.end(),
                                    [](const Layer& l) { return l.residual; });
    if (!placed) {
      model.warnings.push_back(
          "residual requested but no pair of consecutive hidden layers has equal width; "
          "model built without residual connections");
    }
  }
  return model;
}

Model build_embedding_model(std::size_t in_dim, std::size_t embedding_dim,
                            std::optional<std::size_t> class_count, Rng& rng) {
  const PropagationKind renorm = PropagationKind::renormalized();
  Model model;
  model.layers.push_back(make_layer(renorm, in_dim, 4, Activation::Tanh, 0, rng));
  model.layers.push_back(make_layer(renorm, 4, 4, Activation::Tanh, 1, rng));
  model.layers.push_back(make_layer(renorm, 4, embedding_dim, Activation::Tanh, 2, rng));
  model.softmax_output = false;
  if (class_count) {
    model.layers.push_back(
        make_layer(PropagationKind::mlp(), embedding_dim, *class_count, Activation::None, 3, rng));
    model.softmax_output = true;
  }
  return model;
}

ForwardPass forward(Tape& tape, Model& model, const Dataset& ds, const OperatorSet& ops,
                    bool training, double dropout, Rng& dropout_rng) {
  if (model.layers.empty()) throw std::invalid_argument("forward: empty model");
  if (model.layers.front().in_dim() != ds.feature_dim()) {
    throw ShapeError("forward: model expects " + std::to_string(model.layers.front().in_dim()) +
                     " input features, dataset has " + std::to_string(ds.feature_dim()));
  }
  const bool drop = training && dropout > 0.0;

  // Featureless input stays implicit: I * Theta is Theta. Dropout on I only
  // touches its diagonal, so it becomes a row mask on every Theta_k.
  std::optional<Var> h;
  if (!ds.identity_features) h = tape.constant_ref(ds.features);

  ForwardPass pass;
  for (Layer& layer : model.layers) {
    const std::optional<Var> layer_in = h;
    std::optional<Var> x = h;
    std::vector<double> identity_mask;
    if (drop && layer.dropout_input) {
      if (x) {
        x = tape.dropout(*x, dropout, true, dropout_rng);
      } else {
        identity_mask = dropout_mask(ds.node_count(), dropout, dropout_rng);
      }
    }
    std::vector<Var> ws;
    ws.reserve(layer.weights.size());
    for (Parameter& p : layer.weights) {
      const Var w = tape.parameter(p);
      ws.push_back(identity_mask.empty() ? w : tape.scale_rows(w, identity_mask));
    }
    Var z = propagate(tape, layer.kind, ops, x, ws);
    switch (layer.activation) {
      case Activation::ReLU: z = tape.relu(z); break;
      case Activation::Tanh: z = tape.tanh(z); break;
      case Activation::None: break;
    }
    if (layer.residual && layer_in) z = tape.add(z, *layer_in);
    pass.layer_outputs.push_back(z);
    h = z;
  }
  pass.output = model.softmax_output ? tape.softmax_rows(*h) : *h;
  return pass;
}

DenseMatrix forward(Model& model, const Dataset& ds, const OperatorSet& ops) {
  Tape tape;
  Rng unused(0);
  const ForwardPass pass = forward(tape, model, ds, ops, false, 0.0, unused);
  return tape.value(pass.output);
}

DenseMatrix layer_output(Model& model, const Dataset& ds, const OperatorSet& ops,
                         std::size_t layer) {
  Tape tape;
  Rng unused(0);
  const ForwardPass pass = forward(tape, model, ds, ops, false, 0.0, unused);
  if (layer >= pass.layer_outputs.size()) throw std::out_of_range("layer_output: bad layer");
  return tape.value(pass.layer_outputs[layer]);
}

std::size_t argmax_row(const DenseMatrix& z, std::size_t row) {
  const auto r = z.row(row);
  std::size_t best = 0;
  for (std::size_t c = 1; c < r.size(); ++c)
    if (r[c] > r[best]) best = c;
  return best;
}

double accuracy(const DenseMatrix& z, const std::vector<int>& labels,
                std::span<const std::size_t> mask) {
  if (mask.empty()) throw std::invalid_argument("accuracy: empty mask");
  std::size_t hits = 0;
  for (std::size_t i : mask) {
    if (i >= z.rows() || i >= labels.size()) throw std::out_of_range("accuracy: mask index");
    if (labels[i] >= 0 && argmax_row(z, i) == static_cast<std::size_t>(labels[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(mask.size());
}

}  // namespace gcn
