#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <gcn/dataset.hpp>

#include "support.hpp"

using namespace gcn;
namespace fs = std::filesystem;

namespace {

// Fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("gcn_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Hand-written three-node path 0-1-2 with two classes.
void write_tiny_bundle(const fs::path& dir) {
  write(dir / "manifest.json",
        R"({"format_version":1,"n":3,"feature_dim":2,"class_count":2,"directed_source":true})");
  write(dir / "edges.tsv", "# src\tdst\n0\t1\n2\t1\n");
  write(dir / "features.tsv", "0\t0\t1.5\n1\t1\t2\n2\t0\t0.25\n2\t1\t0.75\n");
  write(dir / "labels.tsv", "0\t0\n1\t1\n2\t0\n");
  write(dir / "splits.json", R"({"train":[0],"val":[1],"test":[2]})");
}

BundleErrorCode load_error(const fs::path& dir) {
  try {
    load_bundle(dir);
  } catch (const BundleError& e) {
    return e.code();
  }
  FAIL("bundle loaded without error");
  return BundleErrorCode::Malformed;
}

}  // namespace

TEST_CASE("load_bundle on a hand-written bundle") {
  TempDir tmp("tiny");
  write_tiny_bundle(tmp.path);
  const Dataset ds = load_bundle(tmp.path);
  CHECK(ds.node_count() == 3);
  CHECK(ds.graph.edge_count() == 2);
  CHECK(ds.graph.adjacency.is_symmetric());
  CHECK(ds.graph.adjacency.at(1, 2) == 1.0);
  CHECK(ds.directed_source);
  CHECK(ds.features == DenseMatrix::from_rows({{1.5, 0}, {0, 2}, {0.25, 0.75}}));
  CHECK(ds.labels == std::vector<int>{0, 1, 0});
  CHECK(ds.class_count == 2);
  CHECK(ds.splits.train == std::vector<std::size_t>{0});
  CHECK(ds.splits.val == std::vector<std::size_t>{1});
  CHECK(ds.splits.test == std::vector<std::size_t>{2});
  CHECK(ds.one_hot_labels() == DenseMatrix::from_rows({{1, 0}, {0, 1}, {1, 0}}));
}

TEST_CASE("bundle round trip") {
  std::mt19937 gen(9);
  Dataset ds;
  ds.name = "roundtrip";
  ds.graph = testing::random_graph(40, 0.1, gen, true);
  ds.features = testing::random_dense(40, 6, gen);
  ds.features(3, 2) = 0.1;  // not exactly representable in short decimal
  ds.class_count = 3;
  for (std::size_t i = 0; i < 40; ++i) ds.labels.push_back(i % 7 == 0 ? kUnlabeled : int(i % 3));
  ds.splits.train = {1, 2, 3};
  ds.splits.val = {4, 5};
  ds.splits.test = {8, 9, 10, 11};

  TempDir tmp("roundtrip");
  save_bundle(ds, tmp.path);
  const Dataset back = load_bundle(tmp.path);
  CHECK(back.name == "roundtrip");
  CHECK(back.graph.adjacency.row_ptr == ds.graph.adjacency.row_ptr);
  CHECK(back.graph.adjacency.col_idx == ds.graph.adjacency.col_idx);
  CHECK(back.graph.adjacency.values == ds.graph.adjacency.values);
  CHECK(back.features == ds.features);
  CHECK(back.labels == ds.labels);
  CHECK(back.splits.train == ds.splits.train);
  CHECK(back.splits.val == ds.splits.val);
  CHECK(back.splits.test == ds.splits.test);

  SUBCASE("identity features are never written out") {
    Dataset karate = karate_club();
    TempDir k("karate");
    save_bundle(karate, k.path);
    CHECK_FALSE(fs::exists(k.path / "features.tsv"));
    const Dataset kb = load_bundle(k.path);
    CHECK(kb.identity_features);
    CHECK(kb.feature_dim() == 34);
    CHECK(kb.graph.edge_count() == 78);
  }
}

TEST_CASE("load_bundle error codes") {
  TempDir tmp("errors");
  SUBCASE("missing file") {
    write_tiny_bundle(tmp.path);
    fs::remove(tmp.path / "labels.tsv");
    CHECK(load_error(tmp.path) == BundleErrorCode::MissingFile);
    CHECK(static_cast<int>(BundleErrorCode::MissingFile) == 1);
  }
  SUBCASE("manifest mismatch") {
    write_tiny_bundle(tmp.path);
    write(tmp.path / "manifest.json", R"({"format_version":2,"n":3,"feature_dim":2,"class_count":2})");
    CHECK(load_error(tmp.path) == BundleErrorCode::ManifestMismatch);
  }
  SUBCASE("edge index out of range") {
    write_tiny_bundle(tmp.path);
    write(tmp.path / "edges.tsv", "0\t3\n");
    CHECK(load_error(tmp.path) == BundleErrorCode::IndexOutOfRange);
  }
  SUBCASE("label out of range") {
    write_tiny_bundle(tmp.path);
    write(tmp.path / "labels.tsv", "0\t0\n1\t2\n");
    CHECK(load_error(tmp.path) == BundleErrorCode::IndexOutOfRange);
  }
  SUBCASE("malformed rows") {
    write_tiny_bundle(tmp.path);
    write(tmp.path / "features.tsv", "0\t0\n");
    CHECK(load_error(tmp.path) == BundleErrorCode::Malformed);
    write(tmp.path / "features.tsv", "0\t0\tabc\n");
    CHECK(load_error(tmp.path) == BundleErrorCode::Malformed);
    write_tiny_bundle(tmp.path);
    write(tmp.path / "manifest.json", "{not json");
    CHECK(load_error(tmp.path) == BundleErrorCode::Malformed);
  }
  SUBCASE("overlapping or unlabeled masks") {
    write_tiny_bundle(tmp.path);
    write(tmp.path / "splits.json", R"({"train":[0],"val":[0],"test":[2]})");
    CHECK(load_error(tmp.path) == BundleErrorCode::InvalidMasks);
    write(tmp.path / "labels.tsv", "0\t0\n2\t0\n");
    write(tmp.path / "splits.json", R"({"train":[1]})");
    CHECK(load_error(tmp.path) == BundleErrorCode::InvalidMasks);
  }
}

TEST_CASE("row_normalize") {
  const DenseMatrix x = DenseMatrix::from_rows({{1, 3}, {0, 0}, {2, 2}});
  const DenseMatrix r = row_normalize(x);
  CHECK(r == DenseMatrix::from_rows({{0.25, 0.75}, {0, 0}, {0.5, 0.5}}));

  std::mt19937 gen(2);
  const DenseMatrix y = row_normalize(testing::random_dense(20, 7, gen, 0.0, 1.0));
  for (std::size_t i = 0; i < 20; ++i) {
    double s = 0.0;
    for (double v : y.row(i)) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-14);
  }
  CHECK(testing::max_abs(row_normalize(y), y) <= 1e-15);
}

TEST_CASE("random_split") {
  std::vector<int> labels;
  for (int i = 0; i < 300; ++i) labels.push_back(i % 11 == 0 ? kUnlabeled : i % 4);
  std::set<std::vector<std::size_t>> distinct_train;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Splits s = random_split(labels, 4, 5, 30, 60, seed);
    CHECK(s.train.size() == 20);
    CHECK(s.val.size() == 30);
    CHECK(s.test.size() == 60);
    CHECK_NOTHROW(check_masks(s, labels.size()));
    std::vector<int> per_class(4, 0);
    for (std::size_t i : s.train) ++per_class[static_cast<std::size_t>(labels[i])];
    CHECK(per_class == std::vector<int>{5, 5, 5, 5});
    for (const auto* m : {&s.train, &s.val, &s.test})
      for (std::size_t i : *m) CHECK(labels[i] != kUnlabeled);
    CHECK(random_split(labels, 4, 5, 30, 60, seed).train == s.train);
    distinct_train.insert(s.train);
  }
  CHECK(distinct_train.size() == 100);
  CHECK_THROWS_AS(random_split(labels, 4, 100, 0, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(random_split(labels, 4, 5, 200, 200, 0), std::invalid_argument);
}

TEST_CASE("random_graph") {
  for (std::size_t n : {5u, 50u, 1000u}) {
    const Dataset ds = random_graph(n, 17);
    CHECK(ds.node_count() == n);
    CHECK(ds.graph.edge_count() == 2 * n);
    CHECK(ds.graph.adjacency.is_symmetric());
    for (std::size_t i = 0; i < n; ++i) CHECK(ds.graph.adjacency.at(i, i) == 0.0);
    CHECK(ds.identity_features);
    CHECK(ds.splits.train.size() == n);
  }
  CHECK(random_graph(100, 1).graph.adjacency.col_idx !=
        random_graph(100, 2).graph.adjacency.col_idx);
  CHECK_THROWS_AS(random_graph(4, 0), std::invalid_argument);
}

TEST_CASE("karate_club") {
  const Dataset ds = karate_club();
  CHECK(ds.node_count() == 34);
  CHECK(ds.graph.edge_count() == 78);
  CHECK(ds.class_count == 4);
  CHECK(ds.identity_features);
  REQUIRE(ds.splits.train.size() == 4);
  std::set<int> train_classes;
  for (std::size_t i : ds.splits.train) train_classes.insert(ds.labels[i]);
  CHECK(train_classes.size() == 4);
  // Well-known degrees: instructor 16, administrator 17.
  const auto deg = degree_vector(ds.graph);
  CHECK(deg[0] == 16);
  CHECK(deg[33] == 17);
  const auto dist = testing::hop_distances(ds.graph, 0);
  for (std::size_t d : dist) CHECK(d != std::numeric_limits<std::size_t>::max());
  CHECK_NOTHROW(ds.validate());
}
