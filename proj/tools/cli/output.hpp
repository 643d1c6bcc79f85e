#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gcn::cli {

/// 17 significant digits; NaN and infinities become JSON null.
std::string format_number(double v);

/// Builds one flat JSON object with keys in insertion order.
class JsonLine {
 public:
  JsonLine& add(std::string_view key, double v);
  JsonLine& add(std::string_view key, std::uint64_t v);
  JsonLine& add(std::string_view key, std::string_view v);
  // Named separately: an add(bool) overload would also catch const char*.
  JsonLine& add_bool(std::string_view key, bool v);
  std::string str() const { return "{" + body_ + "}"; }

 private:
  void key(std::string_view k);
  std::string body_;
};

std::string csv_row(const std::vector<std::string>& cells);

}  // namespace gcn::cli
