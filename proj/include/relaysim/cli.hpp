#pragma once

// Command-line front end: dispatches a subcommand and writes a CSV table
// plus a JSON summary next to it.

#include "relaysim/experiments.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace relaysim {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kCsvSchema = "relaysim-csv/1";
inline constexpr const char* kSummarySchema = "relaysim-summary/1";

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitMissingConfig = 10,
  kExitParseError = 11,
  kExitConstraint = 12,
  kExitExperiment = 20,
};

const std::vector<std::string>& subcommands();

struct RunManifest {
  std::string subcommand;
  /// Defaults are used when no file is given.
  std::optional<std::filesystem::path> config;
  /// CSV destination; the summary goes to the same path with a .json extension.
  std::filesystem::path out;
  /// Override the seed and pulse count of the config.
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> pulses;
  RunMode mode = RunMode::both;
};

std::optional<RunMode> parse_mode(const std::string& text);
std::string to_string(RunMode mode);

/// out with its extension replaced by .json (or ".summary.json" appended
/// when out already ends in .json).
std::filesystem::path summary_path(const std::filesystem::path& out);

struct RunOutput {
  std::string csv;
  std::string summary;
};

/// Runs the experiment and renders both outputs without touching the file
/// system. Throws ConfigError, ExperimentError or std::invalid_argument.
RunOutput render(const RunManifest& manifest, const ExperimentConfig& cfg);

/// Loads the config, runs, writes the files and maps errors to exit codes;
/// diagnostics go to `diag`.
int run(const RunManifest& manifest, std::ostream& diag);

}  // namespace relaysim
