#pragma once

#include "stepprune/errors.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

/**
 * Declarative run configuration: a flat key = value text file (one pair per
 * line, '#' comments) validated against a fixed key schema, plus CLI
 * overrides. Every command resolves its settings from one of these files so
 * experiment matrices stay reproducible and diffable.
 */

namespace stepprune::cli {

struct RunConfigFile {
  std::map<std::string, std::string> values;
  std::string source_path;

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Resolved key/value view (defaults merged in), for embedding in reports.
  std::map<std::string, std::string> resolved() const;
};

/// Known keys with their defaults; unknown keys are configuration errors.
const std::map<std::string, std::string>& config_schema();

RunConfigFile load_config(const std::string& path);
RunConfigFile parse_config(const std::string& text, const std::string& name);

/// Applies one "key=value" override; the key must exist in the schema.
void apply_override(RunConfigFile& config, const std::string& assignment);

}  // namespace stepprune::cli
