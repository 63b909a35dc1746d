#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "nls4/harness.hpp"

namespace {

void print_checks(const nls4::ExperimentReport& r, const std::string& indent = "") {
  for (const auto& c : r.checks) {
    std::cout << indent << nls4::to_string(c.verdict) << "  " << c.name;
    if (!c.measured.is_null()) std::cout << "  measured=" << c.measured.dump();
    if (!c.threshold.is_null()) std::cout << "  " << c.relation << " " << c.threshold.dump();
    if (c.verdict == nls4::Verdict::fail && !c.detail.empty()) std::cout << "  (" << c.detail << ")";
    std::cout << '\n';
  }
  for (std::size_t k = 0; k < r.sub_reports.size(); ++k) {
    std::cout << indent << "sweep " << k << ' ' << r.sub_reports[k].sweep_point.dump() << '\n';
    print_checks(r.sub_reports[k], indent + "  ");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial fourth-order NLS simulator and verification lab"};
  app.set_version_flag("--version", nls4::version_string());
  app.require_subcommand(1);

  std::string config_path, output_dir, report_path, series_name, out_path;
  std::optional<long long> seed;
  std::optional<int> jobs;
  std::vector<std::string> overrides;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", output_dir, "Report directory (default results/<experiment>)");
  run->add_option("--seed", seed, "Override experiment.seed");
  run->add_option("--jobs", jobs, "Workers for sweep points")->check(CLI::PositiveNumber);
  run->add_option("--set", overrides, "Override a value: section.key=value");

  auto* check = app.add_subcommand("check-potential", "Print the assumption report for the configured potential");
  check->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);

  auto* emit = app.add_subcommand("emit", "Write one series of a report as CSV");
  emit->add_option("report", report_path, "report.json")->required()->check(CLI::ExistingFile);
  emit->add_option("series", series_name, "Series name")->required();
  emit->add_option("--out", out_path, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*emit) {
      const std::string csv = nls4::emit_plot_data(report_path, series_name);
      if (out_path.empty())
        std::cout << csv;
      else
        nls4::write_file_atomic(out_path, csv);
      return 0;
    }

    auto cfg = nls4::ExperimentConfig::load(config_path);
    if (seed) cfg.set("experiment", "seed", std::to_string(*seed));
    if (jobs) cfg.set("experiment", "jobs", std::to_string(*jobs));
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      const auto dot = o.find('.');
      if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw nls4::ConfigError("--set expects section.key=value, got '" + o + "'");
      cfg.set(o.substr(0, dot), o.substr(dot + 1, eq - dot - 1), o.substr(eq + 1));
    }
    cfg.validate();

    if (*check) {
      const auto rep = nls4::potential_report(cfg);
      std::cout << rep.dump(2) << '\n';
      return rep["all_ok"].get<bool>() ? 0 : 1;
    }

    if (output_dir.empty()) output_dir = cfg.get_text("experiment", "output_dir");
    if (output_dir.empty()) output_dir = "results/" + cfg.experiment();
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = nls4::run_config(cfg, int(cfg.get_int("experiment", "jobs")));
    const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto written = nls4::write_report(report, output_dir, runtime);
    print_checks(report);
    std::cout << "verdict " << nls4::to_string(report.worst()) << "  report " << written.report_path << "  ("
              << runtime << " s)\n";
    return nls4::exit_status(report.worst());
  } catch (const nls4::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
