#pragma once

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tandem/engine.hpp"
#include "tandem/ricbus.hpp"

namespace tandem {

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// Run configuration: every key optional, unknown keys rejected.
SimConfig sim_config_from_json(const nlohmann::json& doc);
nlohmann::json sim_config_to_json(const SimConfig& config);
SimConfig load_sim_config(const std::filesystem::path& path);

class LogParseError : public std::runtime_error {
 public:
  LogParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Re-counts a newline-delimited message log. Blank lines are skipped.
Counters tally_message_log(std::istream& in);

}  // namespace tandem
