#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "onlineboot/engine.hpp"
#include "onlineboot/harness.hpp"

namespace onlineboot {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat "section.key" -> value map. Keys outside any section belong to
/// "experiment".
using KeyValues = std::map<std::string, std::string>;

/**
 * Parses flat config text:
 *
 *     # comment
 *     [experiment]
 *     methods = ar,iid
 *     n = 500,1000,5000
 *
 *     [scenario]
 *     tag = ma2
 *
 * Throws ConfigError with the line number on malformed input.
 */
KeyValues parse_config_text(std::string_view text);

/// Reads and parses a file. Throws std::ios_base::failure if unreadable.
KeyValues load_config_file(const std::string& path);

/**
 * Applies key/value overrides to `config`. `scenario.tag` is applied first
 * and resets the scenario to that tag's defaults; every other scenario key
 * then overrides individual parameters. Unknown keys and unparsable values
 * throw ConfigError.
 */
void apply_config(ExperimentConfig& config, const KeyValues& values);

std::vector<std::size_t> parse_size_list(std::string_view text);
std::vector<double> parse_double_list(std::string_view text);
std::vector<Method> parse_method_list(std::string_view text);

}  // namespace onlineboot
