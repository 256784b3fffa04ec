#include "onlineboot/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace onlineboot {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    auto item = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& key, std::string_view text) {
  const std::string s = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || errno == ERANGE) throw ConfigError(key + ": not a number: '" + s + "'");
  return v;
}

std::uint64_t to_unsigned(const std::string& key, std::string_view text) {
  const std::string s = trim(text);
  char* end = nullptr;
  errno = 0;
  if (s.empty() || s.front() == '-') throw ConfigError(key + ": not a non-negative integer: '" + s + "'");
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (*end != '\0' || errno == ERANGE) throw ConfigError(key + ": not a non-negative integer: '" + s + "'");
  return v;
}

bool to_bool(const std::string& key, std::string_view text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": not a boolean: '" + s + "'");
}

}  // namespace

KeyValues parse_config_text(std::string_view text) {
  KeyValues out;
  std::string section = "experiment";
  std::istringstream in{std::string(text)};
  std::string raw;
  for (int lineno = 1; std::getline(in, raw); ++lineno) {
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out[section + "." + key] = trim(std::string_view(line).substr(eq + 1));
  }
  return out;
}

KeyValues load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::vector<std::size_t> parse_size_list(std::string_view text) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) out.push_back(to_unsigned("list", item));
  return out;
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(to_double("list", item));
  return out;
}

std::vector<Method> parse_method_list(std::string_view text) {
  std::vector<Method> out;
  for (const auto& item : split_list(text)) {
    try {
      out.push_back(parse_method(item));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("methods: ") + e.what());
    }
  }
  return out;
}

void apply_config(ExperimentConfig& config, const KeyValues& values) {
  if (auto it = values.find("scenario.tag"); it != values.end()) {
    try {
      config.scenario = make_scenario(parse_scenario(it->second));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("scenario.tag: ") + e.what());
    }
  }
  for (const auto& [key, value] : values) {
    if (key == "scenario.tag") continue;
    if (key == "experiment.methods") {
      config.methods = parse_method_list(value);
    } else if (key == "experiment.n") {
      try {
        config.checkpoints = parse_size_list(value);
      } catch (const ConfigError&) {
        throw ConfigError("n: expected a comma-separated list of positive integers");
      }
    } else if (key == "experiment.chains") {
      config.chains = to_unsigned(key, value);
    } else if (key == "experiment.reps") {
      config.reps = to_unsigned(key, value);
    } else if (key == "experiment.beta") {
      config.beta = to_double(key, value);
    } else if (key == "experiment.level") {
      config.level = to_double(key, value);
    } else if (key == "experiment.seed") {
      config.master_seed = to_unsigned(key, value);
    } else if (key == "experiment.timing") {
      config.record_timing = to_bool(key, value);
    } else if (key == "experiment.block_cap") {
      config.block_history_cap = to_unsigned(key, value);
    } else if (key == "scenario.mu") {
      config.scenario.ma.mu = to_double(key, value);
    } else if (key == "scenario.thetas") {
      config.scenario.ma.thetas = parse_double_list(value);
    } else if (key == "scenario.burn_in") {
      config.scenario.burn_in = to_unsigned(key, value);
    } else if (key == "garch.theta1") {
      config.scenario.garch.theta1 = to_double(key, value);
    } else if (key == "garch.theta2") {
      config.scenario.garch.theta2 = to_double(key, value);
    } else if (key == "garch.alpha0") {
      config.scenario.garch.alpha0 = to_double(key, value);
    } else if (key == "garch.alpha1") {
      config.scenario.garch.alpha1 = to_double(key, value);
    } else if (key == "garch.beta1") {
      config.scenario.garch.beta1 = to_double(key, value);
    } else if (key == "garch.mu") {
      config.scenario.garch.mu = to_double(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

}  // namespace onlineboot
