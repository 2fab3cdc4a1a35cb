#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lossforge/gan.hpp"
#include "lossforge/genetics.hpp"

namespace lossforge::cli {

/// Thrown for anything the operator got wrong: bad flags, bad config
/// files, unknown losses. Maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Settings = std::vector<std::pair<std::string, std::string>>;

/// Reads flat `key = value` lines; `#` starts a comment, blank lines are
/// skipped. Later keys override earlier ones.
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Applies gp.* and gan.* keys. Unknown keys and malformed values throw
/// UsageError.
void apply_settings(const std::map<std::string, std::string>& values, GpConfig* gp, GanConfig* gan);

Settings describe(const GpConfig& config);
Settings describe(const GanConfig& config);

}  // namespace lossforge::cli
