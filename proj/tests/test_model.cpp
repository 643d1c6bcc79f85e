#include <doctest.h>

#include <gcn/model.hpp>
#include <gcn/optimizer.hpp>

#include "support.hpp"

using namespace gcn;

namespace {

Dataset toy_dataset(std::size_t n, std::size_t features, std::size_t classes, std::mt19937& gen,
                    double p = 0.3) {
  Dataset ds;
  ds.graph = testing::random_graph(n, p, gen);
  ds.features = testing::random_dense(n, features, gen, 0.0, 1.0);
  ds.class_count = classes;
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<int>(i % classes));
  for (std::size_t i = 0; i < n; ++i) ds.splits.train.push_back(i);
  return ds;
}

}  // namespace

TEST_CASE("glorot_init") {
  Rng rng(7);
  CHECK(std::sqrt(6.0 / 6.0) == 1.0);
  const DenseMatrix small = glorot_init(3, 3, rng);
  for (double v : small.values()) CHECK(std::abs(v) <= 1.0);

  // 10^5 draws: all within the bound, mean within 3 standard errors of 0.
  const std::size_t fan_in = 400, fan_out = 250;
  const DenseMatrix w = glorot_init(fan_in, fan_out, rng);
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  double sum = 0.0;
  for (double v : w.values()) {
    CHECK(std::abs(v) <= bound);
    sum += v;
  }
  const double mean = sum / static_cast<double>(w.size());
  const double sigma = bound / std::sqrt(3.0);
  CHECK(std::abs(mean) <= 3.0 * sigma / std::sqrt(static_cast<double>(w.size())));
  CHECK_THROWS_AS(glorot_init(0, 3, rng), std::invalid_argument);
}

TEST_CASE("build_model architectures") {
  Rng rng(1);
  SUBCASE("two-layer model") {
    GcnConfig cfg;
    const Model m = build_model(cfg, 1433, 7, rng);
    REQUIRE(m.layers.size() == 2);
    CHECK(m.layers[0].in_dim() == 1433);
    CHECK(m.layers[0].out_dim() == 16);
    CHECK(m.layers[1].in_dim() == 16);
    CHECK(m.layers[1].out_dim() == 7);
    CHECK(m.layers[0].activation == Activation::ReLU);
    CHECK(m.layers[1].activation == Activation::None);
    CHECK(m.softmax_output);
    CHECK_FALSE(m.layers[0].residual);
  }
  SUBCASE("ten-layer residual model") {
    GcnConfig cfg;
    cfg.hidden_dims.assign(9, 16);
    cfg.residual = true;
    const Model m = build_model(cfg, 50, 3, rng);
    REQUIRE(m.layers.size() == 10);
    CHECK_FALSE(m.layers[0].residual);
    for (std::size_t l = 1; l + 1 < m.layers.size(); ++l) CHECK(m.layers[l].residual);
    CHECK_FALSE(m.layers.back().residual);
    CHECK(m.warnings.empty());
  }
  SUBCASE("residual with no equal-width junction warns") {
    GcnConfig cfg;
    cfg.hidden_dims = {16, 8, 4};
    cfg.residual = true;
    const Model m = build_model(cfg, 10, 2, rng);
    for (const Layer& l : m.layers) CHECK_FALSE(l.residual);
    CHECK(m.warnings.size() == 1);
  }
  SUBCASE("multi-weight variants") {
    GcnConfig cfg;
    cfg.propagation = PropagationKind::chebyshev(3);
    const Model m = build_model(cfg, 5, 2, rng);
    CHECK(m.layers[0].weights.size() == 4);
    GcnConfig fo;
    fo.propagation = PropagationKind::first_order();
    Model m2 = build_model(fo, 5, 2, rng);
    CHECK(m2.first_layer_parameters().size() == 2);
    CHECK(m2.parameters().size() == 4);
  }
  SUBCASE("embedding model") {
    const Model m = build_embedding_model(34, 2, std::nullopt, rng);
    REQUIRE(m.layers.size() == 3);
    for (const Layer& l : m.layers) CHECK(l.activation == Activation::Tanh);
    CHECK(m.layers[2].out_dim() == 2);
    CHECK_FALSE(m.softmax_output);
    const Model c = build_embedding_model(34, 2, 4, rng);
    CHECK(c.layers.size() == 4);
    CHECK(c.softmax_output);
  }
  SUBCASE("dropout placement") {
    GcnConfig cfg;
    cfg.hidden_dims.assign(4, 16);
    cfg.dropout_placement = DropoutPlacement::FirstAndLast;
    const Model m = build_model(cfg, 8, 2, rng);
    CHECK(m.layers[0].dropout_input);
    CHECK_FALSE(m.layers[2].dropout_input);
    CHECK(m.layers[4].dropout_input);
  }
  SUBCASE("invalid configurations") {
    GcnConfig cfg;
    cfg.dropout = 1.0;
    CHECK_THROWS_AS(build_model(cfg, 3, 2, rng), std::invalid_argument);
    cfg = {};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.hidden_dims = {4, 0};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
}

TEST_CASE("forward") {
  std::mt19937 gen(3);
  const Dataset ds = toy_dataset(12, 5, 3, gen);
  Rng rng(2);
  GcnConfig cfg;
  Model m = build_model(cfg, 5, 3, rng);
  const OperatorSet ops = prepare_operators(ds.graph, cfg.propagation);

  const DenseMatrix z = forward(m, ds, ops);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double s = 0.0;
    for (double v : z.row(i)) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
  CHECK(forward(m, ds, ops) == z);

  Dataset wrong = ds;
  wrong.features = DenseMatrix(12, 4);
  CHECK_THROWS_AS(forward(m, wrong, ops), ShapeError);
}

TEST_CASE("forward of an MLP with identity weights is softmax of the features") {
  std::mt19937 gen(4);
  const Dataset ds = toy_dataset(6, 3, 3, gen);
  GcnConfig cfg;
  cfg.propagation = PropagationKind::mlp();
  Rng rng(0);
  Model m = build_model(cfg, 3, 3, rng);
  for (Layer& l : m.layers) l.weights[0].value = DenseMatrix::identity(3);
  m.layers[0].activation = Activation::None;
  const DenseMatrix z = forward(m, ds, prepare_operators(ds.graph, cfg.propagation));
  for (std::size_t i = 0; i < 6; ++i) {
    double norm = 0.0;
    for (double v : ds.features.row(i)) norm += std::exp(v);
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(std::abs(z(i, c) - std::exp(ds.features(i, c)) / norm) <= 1e-12);
  }
}

TEST_CASE("renormalized model on an edgeless graph equals the MLP") {
  std::mt19937 gen(5);
  Dataset ds = toy_dataset(8, 4, 2, gen);
  ds.graph = from_edge_list({}, 8, true);
  GcnConfig cfg;
  Rng rng(11);
  Model renorm = build_model(cfg, 4, 2, rng);
  Model mlp = renorm;
  for (Layer& l : mlp.layers) l.kind = PropagationKind::mlp();
  const DenseMatrix a = forward(renorm, ds, prepare_operators(ds.graph, PropagationKind::renormalized()));
  const DenseMatrix b = forward(mlp, ds, prepare_operators(ds.graph, PropagationKind::mlp()));
  CHECK(testing::max_abs(a, b) <= 1e-15);
}

TEST_CASE("residual layer with zero weights passes its input through") {
  std::mt19937 gen(6);
  const Dataset ds = toy_dataset(10, 4, 2, gen);
  GcnConfig cfg;
  cfg.hidden_dims = {3, 3};
  cfg.residual = true;
  Rng rng(1);
  Model m = build_model(cfg, 4, 2, rng);
  REQUIRE(m.layers[1].residual);
  m.layers[1].weights[0].value.fill(0.0);
  const OperatorSet ops = prepare_operators(ds.graph, cfg.propagation);
  CHECK(layer_output(m, ds, ops, 1) == layer_output(m, ds, ops, 0));
}

TEST_CASE("featureless input with dropout matches explicit identity features") {
  std::mt19937 gen(7);
  Dataset implicit = toy_dataset(9, 1, 2, gen);
  implicit.identity_features = true;
  implicit.features = DenseMatrix();
  Dataset explicit_ds = implicit;
  explicit_ds.identity_features = false;
  explicit_ds.features = DenseMatrix::identity(9);

  GcnConfig cfg;
  Rng rng(3);
  Model m = build_model(cfg, 9, 2, rng);
  const OperatorSet ops = prepare_operators(implicit.graph, cfg.propagation);
  // Without dropout the two are the same computation.
  CHECK(testing::max_abs(forward(m, implicit, ops), forward(m, explicit_ds, ops)) <= 1e-15);
  // With dropout, every implicit draw only ever keeps or drops diagonal entries.
  Tape t;
  Rng drop(5);
  const ForwardPass pass = forward(t, m, implicit, ops, true, 0.5, drop);
  for (std::size_t i = 0; i < 9; ++i) {
    double s = 0.0;
    for (double v : t.value(pass.output).row(i)) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("accuracy") {
  const DenseMatrix perfect = DenseMatrix::from_rows({{1, 0}, {0, 1}, {1, 0}});
  const std::vector<int> labels{0, 1, 0};
  CHECK(accuracy(perfect, labels, std::vector<std::size_t>{0, 1, 2}) == 1.0);

  // A constant predictor on four balanced classes.
  DenseMatrix constant(8, 4);
  for (std::size_t i = 0; i < 8; ++i) constant(i, 2) = 1.0;
  const std::vector<int> balanced{0, 1, 2, 3, 3, 2, 1, 0};
  CHECK(accuracy(constant, balanced, std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7}) == 0.25);

  // Ties go to the lowest class index.
  const DenseMatrix tie = DenseMatrix::from_rows({{0.5, 0.5}});
  CHECK(argmax_row(tie, 0) == 0);
  CHECK(accuracy(tie, std::vector<int>{0}, std::vector<std::size_t>{0}) == 1.0);
  CHECK_THROWS_AS(accuracy(tie, std::vector<int>{0}, std::vector<std::size_t>{}),
                  std::invalid_argument);
}

TEST_CASE("evaluate is invariant under node relabeling") {
  std::mt19937 gen(8);
  const Dataset ds = toy_dataset(15, 4, 3, gen);
  GcnConfig cfg;
  Rng rng(4);
  Model m = build_model(cfg, 4, 3, rng);
  const DenseMatrix z = forward(m, ds, prepare_operators(ds.graph, cfg.propagation));

  const auto perm = testing::random_permutation(15, gen);
  Dataset p = ds;
  p.graph = testing::permute(ds.graph, perm);
  p.features = testing::permute_rows(ds.features, perm);
  for (std::size_t i = 0; i < 15; ++i) p.labels[perm[i]] = ds.labels[i];
  const DenseMatrix pz = forward(m, p, prepare_operators(p.graph, cfg.propagation));
  CHECK(testing::max_abs(testing::permute_rows(z, perm), pz) <= 1e-12);
  const std::vector<std::size_t> mask{0, 3, 4, 9, 12};
  std::vector<std::size_t> pmask;
  for (std::size_t i : mask) pmask.push_back(perm[i]);
  CHECK(accuracy(z, ds.labels, mask) == accuracy(pz, p.labels, pmask));
}

TEST_CASE("adam_step") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Parameter p("w", DenseMatrix::from_rows({{1.0, -2.0}}));
    std::vector<Parameter*> ps{&p};
    AdamState s;
    adam_step(ps, s, 0.01);
    CHECK(p.value == DenseMatrix::from_rows({{1.0, -2.0}}));
    CHECK(s.t == 1);
  }
  SUBCASE("first step has magnitude lr") {
    Parameter p("w", DenseMatrix(1, 1, 0.0));
    p.grad(0, 0) = 1.0;
    std::vector<Parameter*> ps{&p};
    AdamState s;
    adam_step(ps, s, 0.01);
    // m^ = g, v^ = g^2: step = lr * g / (|g| + eps).
    CHECK(std::abs(p.value(0, 0) + 0.01 / (1.0 + 1e-8)) <= 1e-15);
  }
  SUBCASE("first step is invariant to gradient scale") {
    std::mt19937 gen(1);
    const DenseMatrix w0 = testing::random_dense(3, 3, gen);
    const DenseMatrix g = testing::random_dense(3, 3, gen);
    DenseMatrix after[2];
    const double scales[2] = {1.0, 100.0};
    for (int k = 0; k < 2; ++k) {
      Parameter p("w", w0);
      p.grad = scaled(g, scales[k]);
      std::vector<Parameter*> ps{&p};
      AdamState s;
      adam_step(ps, s, 0.01);
      after[k] = p.value;
    }
    CHECK(testing::max_abs(after[0], after[1]) <= 0.01 * 1e-6);
  }
  SUBCASE("later steps against a hand-rolled reference") {
    Parameter p("w", DenseMatrix(1, 1, 0.5));
    std::vector<Parameter*> ps{&p};
    AdamState s;
    double w = 0.5, m = 0.0, v = 0.0;
    for (int t = 1; t <= 5; ++t) {
      const double g = std::sin(t) + 0.1 * w;
      p.grad(0, 0) = g;
      adam_step(ps, s, 0.02);
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      const double mh = m / (1.0 - std::pow(0.9, t));
      const double vh = v / (1.0 - std::pow(0.999, t));
      w -= 0.02 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(std::abs(p.value(0, 0) - w) <= 1e-14);
    }
  }
}
