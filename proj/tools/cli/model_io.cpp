#include "model_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gcn::cli {

using nlohmann::json;

namespace {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::None: break;
  }
  return "none";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "tanh") return Activation::Tanh;
  if (s == "none") return Activation::None;
  throw std::invalid_argument("model file: unknown activation '" + s + "'");
}

}  // namespace

void save_model(const SavedModel& m, const std::filesystem::path& path) {
  json layers = json::array();
  for (const Layer& l : m.model.layers) {
    json weights = json::array();
    for (const Parameter& p : l.weights) {
      weights.push_back({{"name", p.name},
                         {"rows", p.value.rows()},
                         {"cols", p.value.cols()},
                         {"values", std::vector<double>(p.value.values().begin(),
                                                        p.value.values().end())}});
    }
    layers.push_back({{"prop", l.kind.to_string()},
                      {"activation", activation_name(l.activation)},
                      {"residual", l.residual},
                      {"weights", std::move(weights)}});
  }
  const json doc = {{"format_version", 1},
                    {"lambda-max", m.lambda_max_mode == LambdaMaxMode::FixedTwo ? "2" : "auto"},
                    {"softmax_output", m.model.softmax_output},
                    {"layers", std::move(layers)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  out << doc.dump() << '\n';
}

SavedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read model file " + path.string());
  SavedModel m;
  try {
    const json doc = json::parse(in);
    m.lambda_max_mode = doc.at("lambda-max").get<std::string>() == "2"
                            ? LambdaMaxMode::FixedTwo
                            : LambdaMaxMode::PowerIteration;
    m.model.softmax_output = doc.at("softmax_output").get<bool>();
    for (const json& jl : doc.at("layers")) {
      Layer l;
      l.kind = PropagationKind::parse(jl.at("prop").get<std::string>());
      l.activation = parse_activation(jl.at("activation").get<std::string>());
      l.residual = jl.at("residual").get<bool>();
      for (const json& jw : jl.at("weights")) {
        const auto rows = jw.at("rows").get<std::size_t>();
        const auto cols = jw.at("cols").get<std::size_t>();
        const auto values = jw.at("values").get<std::vector<double>>();
        if (values.size() != rows * cols) {
          throw std::invalid_argument("model file: weight size mismatch");
        }
        DenseMatrix w(rows, cols);
        std::copy(values.begin(), values.end(), w.values().begin());
        l.weights.emplace_back(jw.at("name").get<std::string>(), std::move(w));
      }
      if (l.weights.size() != l.kind.weight_count()) {
        throw std::invalid_argument("model file: wrong weight count for " + l.kind.to_string());
      }
      m.model.layers.push_back(std::move(l));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("model file: ") + e.what());
  }
  if (m.model.layers.empty()) throw std::invalid_argument("model file: no layers");
  return m;
}

}  // namespace gcn::cli
