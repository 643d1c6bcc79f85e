#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>

#include <gcn/trainer.hpp>
#include <gcn/wl.hpp>

#include "cli.hpp"
#include "model_io.hpp"
#include "output.hpp"

namespace gcn::cli {

namespace {

// --out when given, else the caller's stream.
class Sink {
 public:
  Sink(const std::optional<std::filesystem::path>& path, std::ostream& fallback) {
    if (path) {
      file_ = std::make_unique<std::ofstream>(*path);
      if (!*file_) throw UsageError("--out: cannot write " + path->string());
    }
    os_ = file_ ? file_.get() : &fallback;
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }

void report_warnings(const Model& m, std::ostream& err) {
  for (const std::string& w : m.warnings) err << "warning: " << w << '\n';
}

double masked_accuracy_or_nan(const DenseMatrix& z, const Dataset& ds,
                              const std::vector<std::size_t>& mask) {
  return mask.empty() ? std::numeric_limits<double>::quiet_NaN()
                      : accuracy(z, ds.labels, mask);
}

Dataset with_split(const Dataset& base, const RunSpec& spec, std::uint64_t seed) {
  if (spec.split != "random") return base;
  Dataset ds = base;
  try {
    ds.splits = random_split(ds.labels, ds.class_count, spec.per_class, spec.val_size,
                             spec.test_size, seed);
  } catch (const std::invalid_argument& e) {
    throw DatasetError(e.what());
  }
  return ds;
}

std::filesystem::path per_seed_path(const std::filesystem::path& p, std::uint64_t seed,
                                    bool suffix) {
  if (!suffix) return p;
  std::filesystem::path out = p;
  out.replace_filename(p.stem().string() + "_seed" + std::to_string(seed) +
                       p.extension().string());
  return out;
}

struct SeedRuns {
  std::vector<std::pair<std::uint64_t, double>> test_acc;

  std::pair<double, double> summary() {
    // Reduce in seed order so the aggregate never depends on run order.
    std::sort(test_acc.begin(), test_acc.end());
    std::vector<double> xs;
    for (const auto& r : test_acc) xs.push_back(r.second);
    return mean_and_stderr(xs);
  }
};

}  // namespace

int cmd_train(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const Dataset base = load_dataset(spec.dataset);
  Sink sink(spec.out, out);
  std::ostream& os = *sink;
  SeedRuns runs;
  for (std::uint64_t seed : spec.seeds) {
    const Dataset ds = with_split(base, spec, seed);
    GcnConfig cfg = spec.config;
    cfg.seed = seed;
    const auto on_epoch = [&](const EpochRecord& r, Model&) {
      os << JsonLine()
                .add("epoch", r.epoch)
                .add("train_loss", r.train_loss)
                .add("val_loss", r.val_loss)
                .add("val_acc", r.val_accuracy)
                .add("wall_ms", spec.no_timing ? 0.0 : r.wall_ms)
                .str()
         << '\n';
    };
    TrainResult result = train(ds, cfg, on_epoch);
    report_warnings(result.model, err);
    os << JsonLine()
              .add("test_acc", result.report.test_accuracy)
              .add("stopped_epoch", result.report.stopped_epoch)
              .add("seed", seed)
              .str()
       << '\n';
    runs.test_acc.emplace_back(seed, result.report.test_accuracy);
    if (spec.save_model) {
      save_model({std::move(result.model), cfg.lambda_max_mode},
                 per_seed_path(*spec.save_model, seed, spec.seeds.size() > 1));
    }
  }
  const auto [mean, se] = runs.summary();
  os << JsonLine()
            .add("mean_test_acc", mean)
            .add("stderr", se)
            .add("runs", spec.seeds.size())
            .str()
     << '\n';
  return kExitOk;
}

int cmd_eval(const RunSpec& spec, std::ostream& out, std::ostream&) {
  const Dataset ds = load_dataset(spec.dataset);
  SavedModel saved = load_model(*spec.model);
  std::vector<PropagationKind> kinds;
  for (const Layer& l : saved.model.layers) kinds.push_back(l.kind);
  const OperatorSet ops = prepare_operators(ds.graph, kinds, saved.lambda_max_mode);
  const DenseMatrix z = forward(saved.model, ds, ops);
  Sink sink(spec.out, out);
  *sink << JsonLine()
               .add("train_acc", masked_accuracy_or_nan(z, ds, ds.splits.train))
               .add("val_acc", masked_accuracy_or_nan(z, ds, ds.splits.val))
               .add("test_acc", masked_accuracy_or_nan(z, ds, ds.splits.test))
               .str()
        << '\n';
  return kExitOk;
}

int cmd_bench(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  Sink sink(spec.out, out);
  std::ostream& os = *sink;
  os << "n,mean_s_per_epoch,std,status\n";
  for (std::size_t n : spec.nodes) {
    const BenchResult r = benchmark_epoch(n, spec.config, spec.config.max_epochs);
    if (r.out_of_memory) {
      err << "n=" << n << ": out of memory\n";
      os << csv_row({num(n), "", "", "oom"}) << '\n';
    } else {
      os << csv_row({num(n), num(r.mean_seconds), num(r.std_seconds), "ok"}) << '\n';
    }
    os.flush();
  }
  return kExitOk;
}

namespace {

constexpr std::size_t kEmbeddingLayer = 2;

void write_embedding(std::ostream& os, const DenseMatrix& emb, const Dataset& ds) {
  os << "node";
  for (std::size_t d = 0; d < emb.cols(); ++d) os << ",dim" << d;
  os << ",label\n";
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    os << i;
    for (double v : emb.row(i)) os << ',' << format_number(v);
    os << ',' << ds.labels[i] << '\n';
  }
}

}  // namespace

int cmd_embed(const RunSpec& spec, std::ostream& out, std::ostream&) {
  const Dataset ds = load_dataset(spec.dataset);
  Rng init_rng = Rng(spec.config.seed).split("init");
  const bool trained = !spec.train_iters.empty();
  Model model = build_embedding_model(
      ds.feature_dim(), spec.embed_dim,
      trained ? std::optional<std::size_t>(ds.class_count) : std::nullopt, init_rng);
  const OperatorSet ops = prepare_operators(ds.graph, PropagationKind::renormalized());

  if (!trained) {
    Sink sink(spec.out, out);
    write_embedding(*sink, layer_output(model, ds, ops, kEmbeddingLayer), ds);
    return kExitOk;
  }

  if (!spec.out) throw UsageError("embed --train-iters needs --out <directory>");
  std::filesystem::create_directories(*spec.out);
  GcnConfig cfg = spec.config;
  cfg.max_epochs = *std::max_element(spec.train_iters.begin(), spec.train_iters.end());
  cfg.early_stop_window.reset();
  std::vector<std::string> written;
  const auto on_epoch = [&](const EpochRecord& r, Model& m) {
    if (std::find(spec.train_iters.begin(), spec.train_iters.end(), r.epoch) ==
        spec.train_iters.end()) {
      return;
    }
    const auto path = *spec.out / ("embedding_iter" + std::to_string(r.epoch) + ".csv");
    std::ofstream f(path);
    if (!f) throw UsageError("--out: cannot write " + path.string());
    write_embedding(f, layer_output(m, ds, ops, kEmbeddingLayer), ds);
    written.push_back(path.string());
  };
  Dataset train_ds = ds;
  train_ds.splits.val.clear();
  train_model(model, train_ds, ops, cfg, on_epoch);

  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < ds.node_count(); ++i)
    if (ds.labels[i] != kUnlabeled) labeled.push_back(i);
  const DenseMatrix z = forward(model, ds, ops);
  out << JsonLine()
             .add("iterations", cfg.max_epochs)
             .add("labeled_acc", masked_accuracy_or_nan(z, ds, labeled))
             .add("checkpoints", written.size())
             .str()
      << '\n';
  return kExitOk;
}

int cmd_wl_colors(const RunSpec& spec, std::ostream& out, std::ostream&) {
  const Dataset ds = load_dataset(spec.dataset);
  const std::size_t n = ds.node_count();
  const auto history =
      wl1_refine(ds.graph, Coloring::uniform(n), spec.rounds.value_or(std::max<std::size_t>(n, 1)));
  Sink sink(spec.out, out);
  std::ostream& os = *sink;
  os << "# round\tcolors\n";
  for (const Coloring& c : history) os << "# " << c.round << '\t' << c.distinct() << '\n';
  os << "node\tcolor\n";
  const Coloring& last = history.back();
  for (std::size_t i = 0; i < n; ++i) os << i << '\t' << last.colors[i] << '\n';
  return kExitOk;
}

int cmd_depth_study(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const Dataset ds = load_dataset(spec.dataset);
  const std::size_t width = spec.config.hidden_dims.front();
  Sink sink(spec.out, out);
  std::ostream& os = *sink;
  os << "depth,residual,mean_train_acc,mean_test_acc,stderr\n";
  for (std::size_t depth = 1; depth <= spec.max_depth; ++depth) {
    for (bool residual : {false, true}) {
      GcnConfig cfg = spec.config;
      cfg.hidden_dims.assign(depth - 1, width);
      cfg.residual = residual;
      const CrossValidationResult cv = cross_validate(ds, spec.folds, cfg);
      os << csv_row({num(depth), residual ? "1" : "0", num(cv.mean_train), num(cv.mean_test),
                     num(cv.stderr_test)})
         << '\n';
      os.flush();
      err << "depth " << depth << (residual ? " residual" : " plain") << ": test "
          << format_number(cv.mean_test) << '\n';
    }
  }
  return kExitOk;
}

const std::vector<PropagationKind>& default_variants() {
  static const std::vector<PropagationKind> v = {
      PropagationKind::chebyshev(3), PropagationKind::chebyshev(2),
      PropagationKind::first_order(), PropagationKind::single_param(),
      PropagationKind::renormalized(), PropagationKind::first_order_term_only(),
      PropagationKind::mlp()};
  return v;
}

int cmd_prop_compare(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const Dataset base = load_dataset(spec.dataset);
  const auto& variants = spec.variants.empty() ? default_variants() : spec.variants;
  Sink sink(spec.out, out);
  std::ostream& os = *sink;
  os << "prop,mean_test_acc,stderr,runs\n";
  for (const PropagationKind& kind : variants) {
    SeedRuns runs;
    for (std::uint64_t seed : spec.seeds) {
      const Dataset ds = with_split(base, spec, seed);
      GcnConfig cfg = spec.config;
      cfg.propagation = kind;
      cfg.seed = seed;
      const TrainResult r = train(ds, cfg);
      runs.test_acc.emplace_back(seed, r.report.test_accuracy);
    }
    const auto [mean, se] = runs.summary();
    os << csv_row({kind.to_string(), num(mean), num(se), num(spec.seeds.size())}) << '\n';
    os.flush();
    err << kind.to_string() << ": " << format_number(mean) << '\n';
  }
  return kExitOk;
}

int cmd_validate(const RunSpec& spec, std::ostream& out, std::ostream&) {
  const Dataset ds = load_dataset(spec.dataset);
  out << JsonLine()
             .add_bool("valid", true)
             .add("n", ds.node_count())
             .add("edges", ds.graph.edge_count())
             .add("classes", ds.class_count)
             .add("feature_dim", ds.feature_dim())
             .add("train", ds.splits.train.size())
             .add("val", ds.splits.val.size())
             .add("test", ds.splits.test.size())
             .str()
      << '\n';
  return kExitOk;
}

Dataset load_dataset(const std::string& spec) {
  if (spec.empty()) throw UsageError("--dataset is required");
  Dataset ds;
  if (spec == "karate") {
    ds = karate_club();
  } else {
    try {
      ds = load_bundle(spec);
    } catch (const BundleError& e) {
      throw DatasetError(e.what());
    } catch (const std::filesystem::filesystem_error& e) {
      throw DatasetError(e.what());
    }
  }
  if (!ds.identity_features) ds.features = row_normalize(ds.features);
  return ds;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const std::optional<RunSpec> spec = parse_args(args, out);
    if (!spec) return kExitOk;
    if (spec->subcommand.empty()) return cmd_validate(*spec, out, err);
    const std::string& c = spec->subcommand;
    if (c == "train") return cmd_train(*spec, out, err);
    if (c == "eval") return cmd_eval(*spec, out, err);
    if (c == "bench") return cmd_bench(*spec, out, err);
    if (c == "embed") return cmd_embed(*spec, out, err);
    if (c == "wl-colors") return cmd_wl_colors(*spec, out, err);
    if (c == "depth-study") return cmd_depth_study(*spec, out, err);
    if (c == "prop-compare") return cmd_prop_compare(*spec, out, err);
    throw UsageError("unknown subcommand " + c);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const DatasetError& e) {
    err << "dataset error: " << e.what() << '\n';
    return kExitDataset;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace gcn::cli
