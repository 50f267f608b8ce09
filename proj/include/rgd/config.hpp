#pragma once

// Experiment configuration files: flat `key = value` lines grouped under
// `[section]` headers. See docs/config.md for the grammar and every key.

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>

#include "rgd/bench.hpp"

namespace rgd {

/// Parse failure tied to a line of the config text (line 0 when the problem
/// is not attached to a single line, e.g. a missing required key).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, std::string field, const std::string& message);
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

struct RunConfig {
  bench::ExperimentConfig experiment;
  /// Data files for classification_budget, resolved against the config's directory.
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::string label_column = "label";
  int parallelism = 1;
};

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// "lnorm@8" (ladder level) or "lnorm(0, 1.75)" (explicit parameters).
NoiseSpec parse_noise_spec(std::string_view text);

/// Canonical `key = value` rendering of every resolved setting.
std::string describe(const RunConfig& cfg);

}  // namespace rgd
