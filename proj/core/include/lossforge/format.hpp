#pragma once

#include <string>

namespace lossforge {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_shortest(double value);
/// "%.17g" rendering used for CSV data columns.
std::string format_g17(double value);

}  // namespace lossforge
