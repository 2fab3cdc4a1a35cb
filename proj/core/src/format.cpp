#include "lossforge/format.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace lossforge {

std::string format_shortest(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::string format_g17(double value) {
  std::array<char, 64> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "%.17g", value);
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

}  // namespace lossforge
