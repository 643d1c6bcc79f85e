#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <gcn/dataset.hpp>
#include <gcn/model.hpp>

namespace gcn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitBadConfig = 2;
inline constexpr int kExitDataset = 3;

/// Bad flags or config values (exit 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Anything wrong with the input dataset (exit 3).
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fully resolved invocation: defaults, then the --config file, then flags.
struct RunSpec {
  std::string subcommand;
  std::string dataset;
  GcnConfig config;
  std::optional<std::filesystem::path> out;
  std::size_t repeat = 1;
  std::vector<std::uint64_t> seeds;  // one per run, base + i unless listed

  std::string split = "fixed";  // or "random"
  std::size_t per_class = 20;
  std::size_t val_size = 500;
  std::size_t test_size = 1000;
  bool no_timing = false;
  std::optional<std::filesystem::path> save_model;
  std::optional<std::filesystem::path> model;
  std::vector<std::size_t> nodes{1000, 10000, 100000};
  std::vector<std::size_t> train_iters;
  std::size_t embed_dim = 2;
  std::optional<std::size_t> rounds;
  std::size_t folds = 5;
  std::size_t max_depth = 10;
  std::vector<PropagationKind> variants;
  bool validate_only = false;
};

/// Parses argv-style arguments (without the program name) into a RunSpec.
/// Returns std::nullopt after printing help. Throws UsageError.
std::optional<RunSpec> parse_args(const std::vector<std::string>& args, std::ostream& out);

/// "karate" for the embedded asset, otherwise a bundle directory. Features
/// are row-normalized. Throws DatasetError.
Dataset load_dataset(const std::string& spec);

/// Runs the whole command line and returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Subcommands; each writes to --out when given, else to `out`.
int cmd_train(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_eval(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_bench(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_embed(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_wl_colors(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_depth_study(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_prop_compare(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_validate(const RunSpec& spec, std::ostream& out, std::ostream& err);

}  // namespace gcn::cli
