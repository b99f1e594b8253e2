#pragma once

// JSON configuration files for ExperimentConfig.

#include "relaysim/experiments.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace relaysim {

enum class ConfigErrorCode : int { missing_file = 10, parse_error = 11, constraint = 12 };

class ConfigError : public std::runtime_error {
 public:
  ConfigError(ConfigErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ConfigErrorCode code() const { return code_; }
  int exit_code() const { return static_cast<int>(code_); }

 private:
  ConfigErrorCode code_;
};

/// Parses and validates a JSON document. Missing keys take their defaults;
/// unknown keys and type mismatches are constraint violations. The
/// "derived" section written by config_to_json is ignored on input.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config(const std::filesystem::path& path);

/// Complete echo of every field plus the derived EPR pair probability.
std::string config_to_json(const ExperimentConfig& cfg, int indent = 2);

}  // namespace relaysim
