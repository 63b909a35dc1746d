// Runs the acceptance experiments and prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nls4/config.hpp"
#include "nls4/harness.hpp"
#include "nls4/report.hpp"

using namespace nls4;

namespace {

struct Run {
  ExperimentReport report;
  double seconds = 0;
  std::string error;
};

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void add(bool ok, const std::string& note) {
    pass = pass && ok;
    notes.push_back(note);
  }
};

std::string number(const Json& j) {
  if (j.is_number()) {
    std::ostringstream os;
    os.precision(4);
    os << j.get<double>();
    return os.str();
  }
  if (j.is_string()) return j.get<std::string>();
  return j.dump();
}

class Suite {
 public:
  explicit Suite(std::string dir) : dir_(std::move(dir)) {}

  const Run& run(const std::string& name) {
    auto it = runs_.find(name);
    if (it != runs_.end()) return it->second;
    Run r;
    const auto start = std::chrono::steady_clock::now();
    try {
      r.report = run_config(ExperimentConfig::load((std::filesystem::path(dir_) / (name + ".cfg")).string()));
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return runs_.emplace(name, std::move(r)).first->second;
  }

  // requires the named checks of an experiment to pass
  void require(Outcome& out, const std::string& experiment, const std::vector<std::string>& checks) {
    const Run& r = run(experiment);
    if (!r.error.empty()) {
      out.add(false, experiment + ": " + r.error);
      return;
    }
    for (const auto& name : checks) {
      const Check* found = nullptr;
      for (const auto& c : r.report.checks)
        if (c.name == name) found = &c;
      if (!found) {
        out.add(false, name + " missing");
        continue;
      }
      std::string note = name + " " + number(found->measured) + " " + found->relation + " " + number(found->threshold);
      if (found->verdict != Verdict::pass) note += " [" + to_string(found->verdict) + (found->detail.empty() ? "" : ": " + found->detail) + "]";
      out.add(found->verdict == Verdict::pass, note);
    }
  }

  void runtime(Outcome& out, const std::string& experiment, double limit) {
    const double t = run(experiment).seconds;
    std::ostringstream os;
    os.precision(3);
    os << "runtime " << t << " s <= " << limit << " s";
    out.add(t <= limit, os.str());
  }

  // reruns the experiment and compares report bodies byte for byte
  void determinism(Outcome& out, const std::string& experiment) {
    const Run& first = run(experiment);
    if (!first.error.empty()) {
      out.add(false, experiment + ": " + first.error);
      return;
    }
    try {
      const auto again =
          run_config(ExperimentConfig::load((std::filesystem::path(dir_) / (experiment + ".cfg")).string()));
      const std::string a = report_body_text(first.report), b = report_body_text(again);
      out.add(a == b, experiment + " body " + (a == b ? "identical" : "differs") + " (" + std::to_string(a.size()) +
                          " bytes)");
    } catch (const std::exception& e) {
      out.add(false, experiment + ": " + e.what());
    }
  }

 private:
  std::string dir_;
  std::map<std::string, Run> runs_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string dir = NLS4_ACCEPTANCE_CONFIGS;
  std::vector<int> only;
  app.add_option("--configs", dir, "directory with the acceptance configs");
  app.add_option("--only", only, "criteria to run");
  CLI11_PARSE(app, argc, argv);

  Suite suite(dir);
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"conservation",
       [&](Outcome& o) {
         suite.require(o, "conservation",
                       {"trajectory_status", "mass_drift", "energy_drift", "energy_drift_halving_ratio"});
         suite.runtime(o, "conservation", 120);
       }},
      {"decay exponent",
       [&](Outcome& o) {
         suite.require(o, "decay",
                       {"window_decades", "free_slope_error", "free_fit_residual", "full_slope_error",
                        "full_fit_residual", "free_control_slope", "full_control_slope"});
         suite.runtime(o, "decay", 300);
       }},
      {"sobolev equivalence",
       [&](Outcome& o) {
         suite.require(o, "sobolev_equiv", {"ratio_min", "ratio_max", "zero_potential_deviation"});
       }},
      {"strichartz quotient",
       [&](Outcome& o) { suite.require(o, "strichartz", {"quotient_spread", "eigenmode_closed_form"}); }},
      {"localized mass rate",
       [&](Outcome& o) {
         suite.require(o, "localized_mass",
                       {"trajectory_status", "min_constant", "max_consecutive_ratio", "saturating_radius_rate",
                        "eigenmode_rate"});
       }},
      {"morawetz",
       [&](Outcome& o) { suite.require(o, "morawetz", {"trajectory_status", "constant_spread", "constant_max"}); }},
      {"small-data global",
       [&](Outcome& o) { suite.require(o, "small_data_global", {"trajectory_status", "h2dot_growth"}); }},
      {"picard/strang oracle", [&](Outcome& o) { suite.require(o, "conservation", {"oracle_constant_spread"}); }},
      {"scattering",
       [&](Outcome& o) {
         suite.require(o, "scattering",
                       {"cauchy_gap_ratio", "mass_identity_gap", "energy_identity_gap", "linear_u_plus",
                        "linear_cauchy_gaps", "linear_mass_identity_gap"});
       }},
      {"final-state round trip", [&](Outcome& o) { suite.require(o, "final_state", {"round_trip"}); }},
      {"wave operator",
       [&](Outcome& o) { suite.require(o, "wave_operator", {"last_gap_ratio", "final_to_first_gap"}); }},
      {"determinism",
       [&](Outcome& o) {
         suite.determinism(o, "strichartz");
         suite.determinism(o, "decay");
       }},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = int(k) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    criteria[k].second(o);
    std::string notes;
    for (const auto& n : o.notes) notes += (notes.empty() ? "" : "; ") + n;
    std::printf("%s  %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(), notes.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures ? 1 : 0;
}
