#pragma once

#include <array>
#include <charconv>
#include <string>

namespace lesioneval {

// Shortest decimal that round-trips to the same double.
inline std::string format_number(double v) {
  std::array<char, 40> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace lesioneval
