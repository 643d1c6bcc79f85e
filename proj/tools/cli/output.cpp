#include "output.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>

#include <json.hpp>

namespace gcn::cli {

std::string format_number(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void JsonLine::key(std::string_view k) {
  if (!body_.empty()) body_ += ',';
  body_ += nlohmann::json(std::string(k)).dump();
  body_ += ':';
}

JsonLine& JsonLine::add(std::string_view k, double v) {
  key(k);
  body_ += format_number(v);
  return *this;
}

JsonLine& JsonLine::add(std::string_view k, std::uint64_t v) {
  key(k);
  body_ += std::to_string(v);
  return *this;
}

JsonLine& JsonLine::add(std::string_view k, std::string_view v) {
  key(k);
  body_ += nlohmann::json(std::string(v)).dump();
  return *this;
}

JsonLine& JsonLine::add_bool(std::string_view k, bool v) {
  key(k);
  body_ += v ? "true" : "false";
  return *this;
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

}  // namespace gcn::cli
