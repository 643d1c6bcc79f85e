#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcn/dense_matrix.hpp"
#include "gcn/graph.hpp"

namespace gcn {

enum class BundleErrorCode {
  MissingFile = 1,
  ManifestMismatch = 2,
  IndexOutOfRange = 3,
  Malformed = 4,
  InvalidMasks = 5,
};

class BundleError : public std::runtime_error {
 public:
  BundleError(BundleErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  BundleErrorCode code() const noexcept { return code_; }

 private:
  BundleErrorCode code_;
};

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

inline constexpr int kUnlabeled = -1;

/// A graph with node features, (partial) labels and train/val/test masks.
struct Dataset {
  std::string name;
  SparseGraph graph;
  /// Empty when `identity_features` is set; X = I_N is never materialized.
  DenseMatrix features;
  bool identity_features = false;
  std::vector<int> labels;  // kUnlabeled for nodes without a class
  std::size_t class_count = 0;
  Splits splits;
  bool directed_source = false;
  std::vector<std::string> class_names;

  std::size_t node_count() const noexcept { return graph.node_count(); }
  std::size_t feature_dim() const noexcept {
    return identity_features ? node_count() : features.cols();
  }
  /// N x classes indicator matrix; unlabeled rows are all zero.
  DenseMatrix one_hot_labels() const;
  /// Checks counts, label range and mask consistency; throws BundleError.
  void validate() const;
};

struct BundleManifest {
  int format_version = 1;
  std::size_t n = 0;
  std::size_t feature_dim = 0;
  std::size_t class_count = 0;
  bool directed_source = false;
  bool identity_features = false;
};

/// Reads manifest.json, edges.tsv, features.tsv, labels.tsv and
/// splits.json from `dir`. Edges are symmetrized on load.
Dataset load_bundle(const std::filesystem::path& dir);
/// Writes `ds` in the same layout; each undirected edge once with src < dst.
void save_bundle(const Dataset& ds, const std::filesystem::path& dir);

/// Scales every row with a nonzero sum to sum to one.
DenseMatrix row_normalize(const DenseMatrix& features);

/// `per_class` training nodes drawn uniformly from each class, then
/// `val_size` and `test_size` nodes drawn uniformly from the labeled
/// remainder.
Splits random_split(const std::vector<int>& labels, std::size_t class_count,
                    std::size_t per_class, std::size_t val_size, std::size_t test_size,
                    std::uint64_t seed);

/// n nodes with exactly 2n distinct undirected edges drawn uniformly,
/// identity features, every node labeled class 0 and in the training mask.
Dataset random_graph(std::size_t n, std::uint64_t seed);

/// Zachary's karate club with four modularity communities as labels, one
/// training node per community, identity features.
Dataset karate_club();

/// Throws std::invalid_argument unless the three masks are pairwise
/// disjoint and in range.
void check_masks(const Splits& s, std::size_t n);

}  // namespace gcn
