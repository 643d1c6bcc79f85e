#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli.hpp"

namespace gcn::cli {

using nlohmann::json;

namespace {

// Every setting is spelled the same on the command line (--name) and in
// the JSON config file ("name").
struct Setting {
  const char* name;
  const char* help;
  bool is_flag = false;
};

constexpr Setting kGlobal[] = {
    {"dataset", "bundle directory, or 'karate' for the embedded graph"},
    {"out", "output file (directory for embed checkpoints)"},
    {"seed", "base seed; run i uses seed + i unless --seeds is given"},
    {"repeat", "number of seeded runs"},
    {"seeds", "explicit comma-separated seed list"},
    {"prop", "renorm[:lambda] | cheb:K | first-order | single | first-term | mlp"},
    {"hidden", "hidden layer widths, comma-separated"},
    {"dropout", "dropout rate"},
    {"l2", "L2 factor on first-layer weights"},
    {"lr", "Adam learning rate"},
    {"epochs", "maximum number of epochs"},
    {"early-stop", "early-stopping window, or 'off'"},
    {"lambda-max", "'auto' (power iteration) or '2'"},
    {"restore-best", "keep the best-validation weights instead of the last", true},
    {"residual", "residual connections between equal-width hidden layers", true},
};

struct SubSettings {
  const char* command;
  const char* description;
  std::vector<Setting> settings;
};

const std::vector<SubSettings>& subcommands() {
  static const std::vector<SubSettings> subs = {
      {"train", "train and report test accuracy per seed",
       {{"split", "'fixed' (bundle masks) or 'random'"},
        {"split-sizes", "per-class,val,test sizes for --split random (default 20,500,1000)"},
        {"save-model", "write trained weights as JSON (suffixed by seed when repeating)"},
        {"no-timing", "report wall_ms as 0 so streams are byte-reproducible", true}}},
      {"eval", "accuracy of a saved model on the dataset masks",
       {{"model", "model JSON written by train --save-model"}}},
      {"bench", "seconds per training epoch on random graphs (CSV)",
       {{"nodes", "comma-separated node counts (default 1000,10000,100000)"}}},
      {"embed", "node embeddings of the 3-layer tanh model (CSV)",
       {{"train-iters", "checkpoint iterations; trains with the labeled nodes"},
        {"dim", "embedding width (default 2)"}}},
      {"wl-colors", "1-WL color refinement from a uniform coloring",
       {{"rounds", "maximum rounds (default: node count)"}}},
      {"depth-study", "k-fold cross-validation over model depth (CSV)",
       {{"folds", "number of folds (default 5)"},
        {"max-depth", "largest depth (default 10)"}}},
      {"prop-compare", "test accuracy of every propagation model (CSV)",
       {{"split", "'fixed' (bundle masks) or 'random'"},
        {"split-sizes", "per-class,val,test sizes for --split random"},
        {"variants", "comma-separated propagation models to compare"}}},
  };
  return subs;
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw UsageError("--" + key + ": " + why);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<long long>() < 0) bad(key, "must be non-negative");
    return static_cast<std::uint64_t>(v.get<long long>());
  }
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    std::uint64_t x = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
      bad(key, "expected a non-negative integer, got '" + s + "'");
    }
    return x;
  }
  bad(key, "expected a non-negative integer");
}

double to_double(const std::string& key, const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    double x = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
      bad(key, "expected a number, got '" + s + "'");
    }
    return x;
  }
  bad(key, "expected a number");
}

bool to_bool(const std::string& key, const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
  }
  bad(key, "expected true or false");
}

std::string to_string(const std::string& key, const json& v) {
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

// Accepts a JSON array, a single number, or a comma-separated string.
std::vector<std::uint64_t> to_uint_list(const std::string& key, const json& v) {
  std::vector<std::uint64_t> out;
  if (v.is_array()) {
    for (const json& x : v) out.push_back(to_uint(key, x));
  } else if (v.is_string()) {
    for (const std::string& s : split_list(v.get<std::string>())) out.push_back(to_uint(key, s));
  } else {
    out.push_back(to_uint(key, v));
  }
  return out;
}

std::vector<std::size_t> to_size_list(const std::string& key, const json& v) {
  std::vector<std::size_t> out;
  for (std::uint64_t x : to_uint_list(key, v)) out.push_back(static_cast<std::size_t>(x));
  return out;
}

std::string format_lambda(const json& v) {
  if (v.is_number_integer() || v.is_number_unsigned()) return std::to_string(v.get<long long>());
  if (v.is_number_float() && v.get<double>() == 2.0) return "2";
  return v.dump();
}

struct Pending {
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<std::uint64_t>> seeds;
  bool repeat_set = false;
};

void apply(RunSpec& spec, Pending& pending, const std::string& key, const json& v) {
  GcnConfig& c = spec.config;
  try {
    if (key == "dataset") {
      spec.dataset = to_string(key, v);
    } else if (key == "out") {
      spec.out = to_string(key, v);
    } else if (key == "seed") {
      pending.seed = to_uint(key, v);
    } else if (key == "repeat") {
      spec.repeat = static_cast<std::size_t>(to_uint(key, v));
      if (spec.repeat == 0) bad(key, "must be >= 1");
      pending.repeat_set = true;
    } else if (key == "seeds") {
      pending.seeds = to_uint_list(key, v);
    } else if (key == "prop") {
      c.propagation = PropagationKind::parse(to_string(key, v));
    } else if (key == "hidden") {
      c.hidden_dims = to_size_list(key, v);
      if (c.hidden_dims.empty()) bad(key, "needs at least one width");
    } else if (key == "dropout") {
      c.dropout = to_double(key, v);
    } else if (key == "l2") {
      c.l2_factor = to_double(key, v);
    } else if (key == "lr") {
      c.learning_rate = to_double(key, v);
    } else if (key == "epochs") {
      c.max_epochs = static_cast<std::size_t>(to_uint(key, v));
    } else if (key == "early-stop") {
      if (v.is_string() && v.get<std::string>() == "off") {
        c.early_stop_window.reset();
      } else {
        c.early_stop_window = static_cast<std::size_t>(to_uint(key, v));
      }
    } else if (key == "lambda-max") {
      const std::string s = v.is_string() ? v.get<std::string>() : format_lambda(v);
      if (s == "auto") {
        c.lambda_max_mode = LambdaMaxMode::PowerIteration;
      } else if (s == "2") {
        c.lambda_max_mode = LambdaMaxMode::FixedTwo;
      } else {
        bad(key, "expected 'auto' or '2'");
      }
    } else if (key == "restore-best") {
      c.restore_best = to_bool(key, v);
    } else if (key == "residual") {
      c.residual = to_bool(key, v);
    } else if (key == "split") {
      spec.split = to_string(key, v);
      if (spec.split != "fixed" && spec.split != "random") bad(key, "expected fixed or random");
    } else if (key == "split-sizes") {
      const auto s = to_size_list(key, v);
      if (s.size() != 3) bad(key, "expected per-class,val,test");
      spec.per_class = s[0];
      spec.val_size = s[1];
      spec.test_size = s[2];
    } else if (key == "save-model") {
      spec.save_model = to_string(key, v);
    } else if (key == "no-timing") {
      spec.no_timing = to_bool(key, v);
    } else if (key == "model") {
      spec.model = to_string(key, v);
    } else if (key == "nodes") {
      spec.nodes = to_size_list(key, v);
      for (std::size_t n : spec.nodes)
        if (n < 2) bad(key, "node counts must be >= 2");
    } else if (key == "train-iters") {
      spec.train_iters = to_size_list(key, v);
      for (std::size_t k : spec.train_iters)
        if (k == 0) bad(key, "iterations must be >= 1");
    } else if (key == "dim") {
      spec.embed_dim = static_cast<std::size_t>(to_uint(key, v));
      if (spec.embed_dim == 0) bad(key, "must be >= 1");
    } else if (key == "rounds") {
      spec.rounds = static_cast<std::size_t>(to_uint(key, v));
      if (*spec.rounds == 0) bad(key, "must be >= 1");
    } else if (key == "folds") {
      spec.folds = static_cast<std::size_t>(to_uint(key, v));
      if (spec.folds < 2) bad(key, "must be >= 2");
    } else if (key == "max-depth") {
      spec.max_depth = static_cast<std::size_t>(to_uint(key, v));
      if (spec.max_depth == 0) bad(key, "must be >= 1");
    } else if (key == "variants") {
      spec.variants.clear();
      for (const std::string& s : split_list(to_string(key, v)))
        spec.variants.push_back(PropagationKind::parse(s));
    } else {
      throw UsageError("unknown setting '" + key + "'");
    }
  } catch (const std::invalid_argument& e) {
    bad(key, e.what());
  }
}

// Flags that only make sense on some subcommands.
bool allowed_in_config(const std::string& key) {
  for (const Setting& s : kGlobal)
    if (key == s.name) return true;
  for (const SubSettings& sub : subcommands())
    for (const Setting& s : sub.settings)
      if (key == s.name) return true;
  return false;
}

json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("--config: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw UsageError("--config: expected a JSON object");
  return doc;
}

void apply_subcommand_defaults(RunSpec& spec) {
  GcnConfig& c = spec.config;
  if (spec.subcommand == "bench") {
    c.max_epochs = 100;
    c.early_stop_window.reset();
  } else if (spec.subcommand == "embed") {
    // Random-weight / few-label embedding runs: plain Adam, no regularizers.
    c.dropout = 0.0;
    c.l2_factor = 0.0;
    c.early_stop_window.reset();
  } else if (spec.subcommand == "depth-study") {
    c.max_epochs = 400;
    c.early_stop_window.reset();
    c.dropout_placement = DropoutPlacement::FirstAndLast;
  }
}

}  // namespace

std::optional<RunSpec> parse_args(const std::vector<std::string>& args, std::ostream& out) {
  CLI::App app{"Sparse graph convolutional network training engine", "gcn"};
  app.require_subcommand(0, 1);

  std::string config_path;
  bool validate = false;
  app.add_option("--config", config_path, "JSON file with the same keys as the flags");
  app.add_flag("--validate", validate, "load --dataset, check it and print a summary");

  struct Bound {
    std::string key;
    CLI::Option* opt;
    std::string value;
    bool flag = false;
    bool flag_value = false;
  };
  std::vector<std::unique_ptr<Bound>> bound;
  auto bind = [&](CLI::App* target, const Setting& s) {
    auto b = std::make_unique<Bound>();
    b->key = s.name;
    b->flag = s.is_flag;
    if (s.is_flag) {
      b->opt = target->add_flag(std::string("--") + s.name, b->flag_value, s.help);
    } else {
      b->opt = target->add_option(std::string("--") + s.name, b->value, s.help)->take_last();
    }
    bound.push_back(std::move(b));
  };
  for (const Setting& s : kGlobal) bind(&app, s);
  std::map<std::string, CLI::App*> subs;
  for (const SubSettings& sub : subcommands()) {
    CLI::App* sc = app.add_subcommand(sub.command, sub.description);
    sc->fallthrough();
    for (const Setting& s : sub.settings) bind(sc, s);
    subs[sub.command] = sc;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  RunSpec spec;
  for (const auto& [name, sc] : subs)
    if (sc->parsed()) spec.subcommand = name;
  spec.validate_only = validate;
  if (spec.subcommand.empty() && !validate) {
    throw UsageError("a subcommand is required (or --validate); see --help");
  }
  apply_subcommand_defaults(spec);

  Pending pending;
  if (!config_path.empty()) {
    const json doc = read_config(config_path);
    for (const auto& [key, value] : doc.items()) {
      if (!allowed_in_config(key)) throw UsageError("--config: unknown key '" + key + "'");
      apply(spec, pending, key, value);
    }
  }
  for (const auto& b : bound) {
    if (b->opt->count() == 0) continue;
    apply(spec, pending, b->key, b->flag ? json(b->flag_value) : json(b->value));
  }

  const std::uint64_t base = pending.seed.value_or(0);
  spec.config.seed = base;
  if (pending.seeds) {
    if (pending.repeat_set && pending.seeds->size() != spec.repeat) {
      throw UsageError("--seeds lists " + std::to_string(pending.seeds->size()) +
                       " seeds but --repeat is " + std::to_string(spec.repeat));
    }
    if (pending.seeds->empty()) throw UsageError("--seeds: empty list");
    spec.seeds = *pending.seeds;
    spec.repeat = spec.seeds.size();
  } else {
    for (std::size_t i = 0; i < spec.repeat; ++i) spec.seeds.push_back(base + i);
  }
  try {
    spec.config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (spec.dataset.empty() && spec.subcommand != "bench") {
    throw UsageError("--dataset is required");
  }
  if (spec.subcommand == "eval" && !spec.model) throw UsageError("eval needs --model");
  return spec;
}

}  // namespace gcn::cli
