#pragma once

// Experiment configuration: a flat key = value text format with [section]
// headers.
//
//   # comment
//   [experiment]
//   name = conservation
//   [grid]
//   n = 5
//   [simulation]
//   p = critical
//   [sweep]
//   potential.c = 0, 0.01
//
// Every key is typed and checked against a fixed schema; unknown sections or
// keys are errors.  Lists are comma separated.  Entries under [sweep] name a
// "section.key" and list the values to sweep over.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nls4/types.hpp"

namespace nls4 {

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0, std::string key = {})
      : Error(line > 0 ? "line " + std::to_string(line) + (key.empty() ? "" : " (" + key + ")") + ": " + what
                       : (key.empty() ? what : key + ": " + what)),
        line_(line),
        key_(std::move(key)) {}
  int line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  int line_;
  std::string key_;
};

enum class ValueType { integer, real, boolean, text, real_list, text_list, power };

struct KeySpec {
  std::string section;
  std::string key;
  ValueType type;
  std::string fallback;
};

/// All accepted keys in echo order.
const std::vector<KeySpec>& config_schema();

/// Experiment names in registry order.
const std::vector<std::string>& experiment_names();

class ExperimentConfig {
 public:
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);

  const std::string& experiment() const { return get_text("experiment", "name"); }
  std::uint64_t seed() const { return std::uint64_t(get_int("experiment", "seed")); }

  long long get_int(const std::string& section, const std::string& key) const;
  double get_real(const std::string& section, const std::string& key) const;
  bool get_bool(const std::string& section, const std::string& key) const;
  const std::string& get_text(const std::string& section, const std::string& key) const;
  std::vector<double> get_real_list(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_text_list(const std::string& section, const std::string& key) const;
  /// The nonlinearity power with "critical" resolved against grid.n.
  double power() const;
  bool power_is_critical() const;

  /// Overrides a value (validated).  Used by sweeps and the command line.
  void set(const std::string& section, const std::string& key, const std::string& value);
  bool explicitly_set(const std::string& section, const std::string& key) const;

  /// Sweep axes in file order: ("section.key", values).
  const std::vector<std::pair<std::string, std::vector<std::string>>>& sweeps() const { return sweeps_; }
  /// Cartesian product of the sweep axes, one config per point.
  std::vector<ExperimentConfig> expand_sweeps() const;

  /// Resolved values in schema order: section -> [(key, canonical text)].
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> echo() const;

  /// Cross-key invariants; throws ConfigError naming the rule.
  void validate() const;

 private:
  const std::string& raw(const std::string& section, const std::string& key) const;
  void apply_experiment_defaults();

  std::map<std::string, std::string> values_;  // "section.key" -> canonical text
  std::map<std::string, bool> explicit_;
  std::vector<std::pair<std::string, std::vector<std::string>>> sweeps_;
};

}  // namespace nls4
