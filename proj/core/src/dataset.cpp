#include "gcn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "gcn/rng.hpp"

namespace gcn {

namespace fs = std::filesystem;
using nlohmann::json;

DenseMatrix Dataset::one_hot_labels() const {
  DenseMatrix y(node_count(), class_count);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != kUnlabeled) y(i, static_cast<std::size_t>(labels[i])) = 1.0;
  return y;
}

void check_masks(const Splits& s, std::size_t n) {
  std::vector<char> seen(n, 0);
  for (const auto* mask : {&s.train, &s.val, &s.test}) {
    for (std::size_t i : *mask) {
      if (i >= n) throw std::invalid_argument("mask index " + std::to_string(i) + " out of range");
      if (seen[i]) throw std::invalid_argument("node " + std::to_string(i) + " in two masks");
      seen[i] = 1;
    }
  }
}

void Dataset::validate() const {
  const std::size_t n = node_count();
  if (labels.size() != n) {
    throw BundleError(BundleErrorCode::ManifestMismatch, "label vector length != node count");
  }
  if (!identity_features && features.rows() != n) {
    throw BundleError(BundleErrorCode::ManifestMismatch,
                      "feature rows " + std::to_string(features.rows()) + " != n " +
                          std::to_string(n));
  }
  for (int l : labels) {
    if (l != kUnlabeled && (l < 0 || static_cast<std::size_t>(l) >= class_count)) {
      throw BundleError(BundleErrorCode::IndexOutOfRange, "label " + std::to_string(l) +
                                                              " outside class range");
    }
  }
  try {
    check_masks(splits, n);
  } catch (const std::invalid_argument& e) {
    throw BundleError(BundleErrorCode::InvalidMasks, e.what());
  }
  for (const auto* mask : {&splits.train, &splits.val, &splits.test})
    for (std::size_t i : *mask)
      if (labels[i] == kUnlabeled) {
        throw BundleError(BundleErrorCode::InvalidMasks,
                          "masked node " + std::to_string(i) + " has no label");
      }
}

namespace {

std::ifstream open_required(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw BundleError(BundleErrorCode::MissingFile, "missing bundle file " + p.string());
  return in;
}

json read_json(const fs::path& p) {
  std::ifstream in = open_required(p);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw BundleError(BundleErrorCode::Malformed, p.filename().string() + ": " + e.what());
  }
}

// Splits a TSV line into fields without allocating per field.
std::vector<std::string_view> tab_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view field, const std::string& where) {
  T value{};
  auto r = std::from_chars(field.data(), field.data() + field.size(), value);
  if (r.ec != std::errc{} || r.ptr != field.data() + field.size()) {
    throw BundleError(BundleErrorCode::Malformed, where + ": cannot parse '" +
                                                      std::string(field) + "'");
  }
  return value;
}

// Calls fn(fields, location) for every data line of a TSV file.
template <typename Fn>
void for_each_row(const fs::path& p, std::size_t min_fields, std::size_t max_fields, Fn fn) {
  std::ifstream in = open_required(p);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = tab_fields(line);
    const std::string where = p.filename().string() + ":" + std::to_string(line_no);
    if (fields.size() < min_fields || fields.size() > max_fields) {
      throw BundleError(BundleErrorCode::Malformed, where + ": wrong number of columns");
    }
    fn(fields, where);
  }
}

std::vector<std::size_t> read_index_list(const json& j, const char* key, std::size_t n) {
  std::vector<std::size_t> out;
  if (!j.contains(key)) return out;
  if (!j[key].is_array()) {
    throw BundleError(BundleErrorCode::Malformed, std::string("splits.json: '") + key +
                                                      "' is not an array");
  }
  for (const auto& v : j[key]) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw BundleError(BundleErrorCode::Malformed, std::string("splits.json: bad index in ") + key);
    }
    const auto i = v.get<std::size_t>();
    if (i >= n) {
      throw BundleError(BundleErrorCode::IndexOutOfRange,
                        std::string("splits.json: ") + key + " index " + std::to_string(i) +
                            " >= n");
    }
    out.push_back(i);
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

Dataset load_bundle(const fs::path& dir) {
  const json manifest = read_json(dir / "manifest.json");
  BundleManifest m;
  try {
    m.format_version = manifest.at("format_version").get<int>();
    m.n = manifest.at("n").get<std::size_t>();
    m.feature_dim = manifest.at("feature_dim").get<std::size_t>();
    m.class_count = manifest.at("class_count").get<std::size_t>();
    m.directed_source = manifest.value("directed_source", false);
    m.identity_features = manifest.value("identity_features", false);
  } catch (const json::exception& e) {
    throw BundleError(BundleErrorCode::Malformed, std::string("manifest.json: ") + e.what());
  }
  if (m.format_version != 1) {
    throw BundleError(BundleErrorCode::ManifestMismatch,
                      "unsupported format_version " + std::to_string(m.format_version));
  }
  if (m.identity_features && m.feature_dim != m.n) {
    throw BundleError(BundleErrorCode::ManifestMismatch,
                      "identity_features requires feature_dim == n");
  }

  Dataset ds;
  ds.name = manifest.value("name", dir.filename().string());
  ds.class_count = m.class_count;
  ds.directed_source = m.directed_source;
  ds.identity_features = m.identity_features;

  std::vector<Edge> edges;
  for_each_row(dir / "edges.tsv", 2, 3, [&](const auto& f, const std::string& where) {
    Edge e;
    e.src = parse_field<std::size_t>(f[0], where);
    e.dst = parse_field<std::size_t>(f[1], where);
    if (f.size() == 3) e.weight = parse_field<double>(f[2], where);
    if (e.src >= m.n || e.dst >= m.n) {
      throw BundleError(BundleErrorCode::IndexOutOfRange, where + ": node index >= n");
    }
    edges.push_back(e);
  });
  try {
    ds.graph = from_edge_list(edges, m.n, true);
  } catch (const GraphError& e) {
    throw BundleError(BundleErrorCode::Malformed, std::string("edges.tsv: ") + e.what());
  }

  if (!m.identity_features) {
    ds.features = DenseMatrix(m.n, m.feature_dim);
    for_each_row(dir / "features.tsv", 3, 3, [&](const auto& f, const std::string& where) {
      const auto node = parse_field<std::size_t>(f[0], where);
      const auto feat = parse_field<std::size_t>(f[1], where);
      const double value = parse_field<double>(f[2], where);
      if (node >= m.n || feat >= m.feature_dim) {
        throw BundleError(BundleErrorCode::IndexOutOfRange, where + ": index out of range");
      }
      ds.features(node, feat) = value;
    });
  }

  ds.labels.assign(m.n, kUnlabeled);
  for_each_row(dir / "labels.tsv", 2, 2, [&](const auto& f, const std::string& where) {
    const auto node = parse_field<std::size_t>(f[0], where);
    const auto cls = parse_field<std::size_t>(f[1], where);
    if (node >= m.n || cls >= m.class_count) {
      throw BundleError(BundleErrorCode::IndexOutOfRange, where + ": index out of range");
    }
    ds.labels[node] = static_cast<int>(cls);
  });

  const json splits = read_json(dir / "splits.json");
  ds.splits.train = read_index_list(splits, "train", m.n);
  ds.splits.val = read_index_list(splits, "val", m.n);
  ds.splits.test = read_index_list(splits, "test", m.n);

  ds.validate();
  return ds;
}

void save_bundle(const Dataset& ds, const fs::path& dir) {
  ds.validate();
  fs::create_directories(dir);
  json manifest = {
      {"format_version", 1},
      {"n", ds.node_count()},
      {"feature_dim", ds.feature_dim()},
      {"class_count", ds.class_count},
      {"directed_source", ds.directed_source},
  };
  if (ds.identity_features) manifest["identity_features"] = true;
  if (!ds.name.empty()) manifest["name"] = ds.name;
  std::ofstream(dir / "manifest.json") << manifest.dump() << '\n';

  {
    std::ofstream out(dir / "edges.tsv");
    const CsrMatrix& a = ds.graph.adjacency;
    for (std::size_t i = 0; i < a.n; ++i) {
      for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
        const std::size_t j = a.col_idx[p];
        if (ds.graph.symmetric && j < i) continue;
        out << i << '\t' << j;
        if (a.values[p] != 1.0) out << '\t' << format_double(a.values[p]);
        out << '\n';
      }
    }
  }
  if (!ds.identity_features) {
    std::ofstream out(dir / "features.tsv");
    for (std::size_t i = 0; i < ds.features.rows(); ++i)
      for (std::size_t f = 0; f < ds.features.cols(); ++f)
        if (ds.features(i, f) != 0.0)
          out << i << '\t' << f << '\t' << format_double(ds.features(i, f)) << '\n';
  }
  {
    std::ofstream out(dir / "labels.tsv");
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
      if (ds.labels[i] != kUnlabeled) out << i << '\t' << ds.labels[i] << '\n';
  }
  json splits = {{"train", ds.splits.train}, {"val", ds.splits.val}, {"test", ds.splits.test}};
  std::ofstream(dir / "splits.json") << splits.dump() << '\n';
}

DenseMatrix row_normalize(const DenseMatrix& features) {
  DenseMatrix out = features;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double s = 0.0;
    for (double v : row) s += v;
    if (s == 0.0) continue;
    const double inv = 1.0 / s;
    for (double& v : row) v *= inv;
  }
  return out;
}

Splits random_split(const std::vector<int>& labels, std::size_t class_count,
                    std::size_t per_class, std::size_t val_size, std::size_t test_size,
                    std::uint64_t seed) {
  Rng base(seed);
  Rng train_rng = base.split("split/train");
  Rng rest_rng = base.split("split/rest");

  std::vector<std::vector<std::size_t>> by_class(class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kUnlabeled) continue;
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count) {
      throw std::invalid_argument("random_split: label outside class range");
    }
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }

  Splits s;
  std::vector<char> used(labels.size(), 0);
  for (std::size_t c = 0; c < class_count; ++c) {
    auto& members = by_class[c];
    if (members.size() < per_class) {
      throw std::invalid_argument("random_split: class " + std::to_string(c) + " has only " +
                                  std::to_string(members.size()) + " members");
    }
    train_rng.shuffle(members);
    for (std::size_t k = 0; k < per_class; ++k) {
      s.train.push_back(members[k]);
      used[members[k]] = 1;
    }
  }

  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != kUnlabeled && !used[i]) rest.push_back(i);
  if (rest.size() < val_size + test_size) {
    throw std::invalid_argument("random_split: " + std::to_string(rest.size()) +
                                " remaining labeled nodes, need " +
                                std::to_string(val_size + test_size));
  }
  rest_rng.shuffle(rest);
  s.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(val_size));
  s.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(val_size),
                rest.begin() + static_cast<std::ptrdiff_t>(val_size + test_size));
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Dataset random_graph(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("random_graph: need at least 2 nodes");
  const std::size_t target = 2 * n;
  if (n * (n - 1) / 2 < target) {
    throw std::invalid_argument("random_graph: " + std::to_string(n) +
                                " nodes cannot host " + std::to_string(target) +
                                " distinct edges");
  }
  Rng rng = Rng(seed).split("random_graph");
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(target * 2);
  std::vector<Edge> edges;
  edges.reserve(target);
  while (edges.size() < target) {
    std::size_t a = static_cast<std::size_t>(rng.below(n));
    std::size_t b = static_cast<std::size_t>(rng.below(n));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!seen.insert(static_cast<std::uint64_t>(a) * n + b).second) continue;
    edges.push_back({a, b, 1.0});
  }
  Dataset ds;
  ds.name = "random-" + std::to_string(n);
  ds.graph = from_edge_list(edges, n, true);
  ds.identity_features = true;
  ds.labels.assign(n, 0);
  ds.class_count = 1;
  ds.splits.train.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.splits.train[i] = i;
  return ds;
}

Dataset karate_club() {
  // Zachary (1977), 0-based node ids.
  static constexpr std::pair<int, int> kEdges[] = {
      {0, 1},   {0, 2},   {0, 3},   {0, 4},   {0, 5},   {0, 6},   {0, 7},   {0, 8},
      {0, 10},  {0, 11},  {0, 12},  {0, 13},  {0, 17},  {0, 19},  {0, 21},  {0, 31},
      {1, 2},   {1, 3},   {1, 7},   {1, 13},  {1, 17},  {1, 19},  {1, 21},  {1, 30},
      {2, 3},   {2, 7},   {2, 8},   {2, 9},   {2, 13},  {2, 27},  {2, 28},  {2, 32},
      {3, 7},   {3, 12},  {3, 13},  {4, 6},   {4, 10},  {5, 6},   {5, 10},  {5, 16},
      {6, 16},  {8, 30},  {8, 32},  {8, 33},  {9, 33},  {13, 33}, {14, 32}, {14, 33},
      {15, 32}, {15, 33}, {18, 32}, {18, 33}, {19, 33}, {20, 32}, {20, 33}, {22, 32},
      {22, 33}, {23, 25}, {23, 27}, {23, 29}, {23, 32}, {23, 33}, {24, 25}, {24, 27},
      {24, 31}, {25, 31}, {26, 29}, {26, 33}, {27, 33}, {28, 31}, {28, 33}, {29, 32},
      {29, 33}, {30, 32}, {30, 33}, {31, 32}, {31, 33}, {32, 33},
  };
  // Four communities of the maximum-modularity partition (Q = 0.4198),
  // computed offline with Louvain.
  static constexpr int kCommunity[34] = {
      0, 0, 0, 0, 1, 1, 1, 0, 3, 3, 1, 0, 0, 0, 3, 3, 1,
      0, 3, 0, 3, 0, 3, 2, 2, 2, 3, 2, 2, 3, 3, 2, 3, 3,
  };
  // Highest-degree member of each community (lowest id on ties).
  static constexpr std::size_t kTrainNodes[] = {0, 5, 31, 33};

  std::vector<Edge> edges;
  for (auto [a, b] : kEdges)
    edges.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b), 1.0});
  Dataset ds;
  ds.name = "karate";
  ds.graph = from_edge_list(edges, 34, true);
  ds.identity_features = true;
  ds.labels.assign(std::begin(kCommunity), std::end(kCommunity));
  ds.class_count = 4;
  ds.splits.train.assign(std::begin(kTrainNodes), std::end(kTrainNodes));
  for (std::size_t i = 0; i < 34; ++i)
    if (std::find(std::begin(kTrainNodes), std::end(kTrainNodes), i) == std::end(kTrainNodes))
      ds.splits.test.push_back(i);
  return ds;
}

}  // namespace gcn
