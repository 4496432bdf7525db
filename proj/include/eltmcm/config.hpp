#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "eltmcm/error.hpp"
#include "eltmcm/harness.hpp"

namespace eltmcm {

/// A configuration file or override could not be parsed or names an unknown key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// One "key = value" entry; line is 0 for command-line overrides.
struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

/// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
std::vector<ConfigEntry> parse_config(std::istream& is);

/// Applies one setting to an ExperimentSpec; throws ConfigError for unknown keys or bad values.
void apply_setting(ExperimentSpec& spec, const ConfigEntry& entry);
void apply_config(ExperimentSpec& spec, const std::vector<ConfigEntry>& entries);
ExperimentSpec load_config(const std::filesystem::path& path, ExperimentSpec base = {});

/// Documented keys with a one-line description each.
std::vector<std::pair<std::string, std::string>> config_keys();

/// Parses "a,b,c" or "start:step:stop" (inclusive) into numbers.
std::vector<double> parse_number_list(const std::string& text);

}  // namespace eltmcm
