#include <benchmark/benchmark.h>

#include <gcn/trainer.hpp>

using namespace gcn;

namespace {

// Renormalized operator of random_graph(n): 2n undirected edges.
SparseOperator bench_operator(std::size_t n) {
  return renormalized_adjacency(random_graph(n, 1).graph);
}

void BM_Spmm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const SparseOperator op = bench_operator(n);
  Rng rng(2);
  DenseMatrix x(n, 16);
  for (double& v : x.values()) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(spmm(op, x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(op.matrix.nnz()));
}
BENCHMARK(BM_Spmm)->RangeMultiplier(10)->Range(1000, 100000)->Unit(benchmark::kMicrosecond);

void BM_SpmmTransposed(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const SparseOperator op = bench_operator(n);
  DenseMatrix x(n, 16, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(spmm_transposed(op.matrix, x));
}
BENCHMARK(BM_SpmmTransposed)
    ->RangeMultiplier(10)
    ->Range(1000, 100000)
    ->Unit(benchmark::kMicrosecond);

void BM_ChebyshevBasis(benchmark::State& state) {
  const std::size_t n = 10000;
  const OperatorSet ops =
      prepare_operators(random_graph(n, 1).graph, PropagationKind::chebyshev(3));
  DenseMatrix x(n, 16, 0.25);
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(chebyshev_basis(*ops.scaled_laplacian, x, order));
}
BENCHMARK(BM_ChebyshevBasis)->DenseRange(1, 3)->Unit(benchmark::kMicrosecond);

// One full training epoch (forward, loss, backward, Adam) on the
// featureless random graphs used by `gcn bench`.
void BM_TrainingEpoch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset ds = random_graph(n, 0);
  GcnConfig cfg;
  cfg.early_stop_window.reset();
  cfg.max_epochs = 1;
  const OperatorSet ops = prepare_operators(ds.graph, cfg.propagation);
  Rng init(0);
  Model model = build_model(cfg, ds.feature_dim(), 1, init);
  for (auto _ : state) train_model(model, ds, ops, cfg);
}
BENCHMARK(BM_TrainingEpoch)
    ->RangeMultiplier(10)
    ->Range(1000, 100000)
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
