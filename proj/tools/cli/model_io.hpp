#pragma once

#include <filesystem>

#include <gcn/model.hpp>

namespace gcn::cli {

struct SavedModel {
  Model model;
  LambdaMaxMode lambda_max_mode = LambdaMaxMode::PowerIteration;
};

/// JSON with every weight matrix at full precision.
void save_model(const SavedModel& m, const std::filesystem::path& path);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace gcn::cli
