#pragma once

// Experiment registry, sweep execution, report persistence and plot-data
// emission.

#include <optional>
#include <string>

#include "nls4/potentials.hpp"
#include "nls4/report.hpp"
#include "nls4/spectral_operator.hpp"

namespace nls4 {

/// Runs one experiment point; module errors end up as failed checks.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Runs the config, expanding sweeps into sub-reports on `jobs` workers.
ExperimentReport run_config(const ExperimentConfig& cfg, int jobs = 1);

struct WrittenReport {
  std::string report_path;
  std::string provenance_path;
  std::string body_hash;
};

/// report.json (body), provenance.json, series/*.csv and fields/*.bin under dir.
/// Every file is written to a temporary sibling and renamed into place.
WrittenReport write_report(const ExperimentReport& report, const std::string& dir, double runtime_seconds);

/// Report body text exactly as written to report.json.
std::string report_body_text(const ExperimentReport& report);

/// 0 pass or skipped, 1 any failed check.
int exit_status(Verdict worst);

/// CSV of one series of a written report; sweep series are named "sweep<k>/<name>".
/// Throws PreconditionError listing the available names for an unknown one.
std::string emit_plot_data(const std::string& report_path, const std::string& series);

/// Assumption checks on the configured potential and grid.
Json potential_report(const ExperimentConfig& cfg);

/// Process-wide memo of spectral operators keyed by kind, grid and potential.
OperatorPtr<double> shared_operator(OperatorKind kind, int n, double r_max, Index points,
                                    const std::optional<PotentialSpec>& spec, bool allow_low_dimension = false,
                                    Index max_points = 4096);

std::string version_string();

/// Writes text to path through a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace nls4
