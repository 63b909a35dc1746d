#pragma once

// Experiment reports: checks with measured values and thresholds, named
// values, tabular series and binary field attachments.

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nls4/binary_io.hpp"
#include "nls4/config.hpp"
#include "nls4/radial_domain.hpp"

namespace nls4 {

using Json = nlohmann::ordered_json;

enum class Verdict { pass, skipped, fail };
std::string to_string(Verdict v);

struct Check {
  std::string name;
  Json measured;
  Json threshold;
  std::string relation;  // "<=", ">=", "in", "==", ...
  Verdict verdict = Verdict::fail;
  std::string detail;
};

struct Series {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct FieldAttachment {
  std::string name;
  Block block;
};

class ExperimentReport {
 public:
  std::string experiment;
  Json config = Json::object();
  std::vector<Check> checks;
  Json values = Json::object();
  std::vector<Series> series;
  std::vector<FieldAttachment> fields;
  /// Sweep points, each with the overridden keys in `config`.
  std::vector<ExperimentReport> sub_reports;
  Json sweep_point = Json::object();

  Check& check_le(const std::string& name, double measured, double threshold, std::string detail = {});
  Check& check_ge(const std::string& name, double measured, double threshold, std::string detail = {});
  Check& check_lt(const std::string& name, double measured, double threshold, std::string detail = {});
  Check& check_in(const std::string& name, double measured, double lo, double hi, std::string detail = {});
  Check& check_equal(const std::string& name, const std::string& measured, const std::string& expected,
                     std::string detail = {});
  Check& skip(const std::string& name, std::string detail);
  Check& fail(const std::string& name, std::string detail);

  /// Runs body; a thrown error becomes a failed check with the error text.
  bool guard(const std::string& name, const std::function<void()>& body);

  Series& add_series(std::string name, std::vector<std::string> columns);
  void add_field(const std::string& name, const RadialField<double>& u);

  Verdict worst() const;
  /// Deterministic report body; series carry their attachment file names.
  Json body() const;
  const Series* find_series(const std::string& name) const;
  std::vector<std::string> series_names() const;
};

/// Typed config echo without the output location and worker count.
Json config_echo(const ExperimentConfig& cfg);

/// Series attachment file name for the k-th sub-report (k < 0: top level).
std::string series_file_name(const std::string& series, int sub_index = -1);
std::string field_file_name(const std::string& field, int sub_index = -1);

/// CSV text: header row then one line per row, shortest round-trip digits.
std::string to_csv(const Series& s);

}  // namespace nls4
