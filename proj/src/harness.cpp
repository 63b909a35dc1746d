#include "nls4/harness.hpp"

#include <atomic>
#include <bit>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "experiments.hpp"

#ifndef NLS4_VERSION
#define NLS4_VERSION "0.0.0"
#endif

namespace nls4 {

namespace fs = std::filesystem;

std::string version_string() { return NLS4_VERSION; }

namespace {

using Runner = void (*)(const ExperimentConfig&, ExperimentReport&);

const std::map<std::string, Runner>& registry() {
  static const std::map<std::string, Runner> r = {
      {"conservation", experiments::conservation},
      {"decay", experiments::decay},
      {"sobolev_equiv", experiments::sobolev_equiv},
      {"strichartz", experiments::strichartz},
      {"localized_mass", experiments::localized_mass},
      {"morawetz", experiments::morawetz},
      {"small_data_global", experiments::small_data_global},
      {"subcritical_global_cases", experiments::subcritical_global_cases},
      {"perturbation", experiments::perturbation},
      {"wave_operator", experiments::wave_operator},
      {"scattering", experiments::scattering},
      {"final_state", experiments::final_state},
  };
  return r;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

OperatorPtr<double> shared_operator(OperatorKind kind, int n, double r_max, Index points,
                                    const std::optional<PotentialSpec>& spec, bool allow_low_dimension,
                                    Index max_points) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_future<OperatorPtr<double>>> memo;
  std::ostringstream key;
  key << int(kind) << ':' << n << ':' << hex64(std::bit_cast<std::uint64_t>(r_max)) << ':' << points << ':'
      << (spec ? hex64(spec->hash()) : "none") << ':' << allow_low_dimension;

  std::promise<OperatorPtr<double>> promise;
  std::shared_future<OperatorPtr<double>> future;
  bool owner = false;
  {
    std::lock_guard lock(mutex);
    auto it = memo.find(key.str());
    if (it == memo.end()) {
      future = promise.get_future().share();
      memo.emplace(key.str(), future);
      owner = true;
    } else {
      future = it->second;
    }
  }
  if (owner) {
    try {
      GridOptions go;
      go.allow_low_dimension = allow_low_dimension;
      OperatorOptions oo;
      oo.max_points = max_points;
      promise.set_value(build_operator<double>(kind, make_grid<double>(n, r_max, points, go), spec, oo));
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
  }
  return future.get();
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.experiment = cfg.experiment();
  rep.config = config_echo(cfg);
  const auto it = registry().find(rep.experiment);
  if (it == registry().end()) {
    rep.fail("experiment", "unknown experiment " + rep.experiment);
    return rep;
  }
  rep.guard("experiment", [&] { it->second(cfg, rep); });
  return rep;
}

ExperimentReport run_config(const ExperimentConfig& cfg, int jobs) {
  if (cfg.sweeps().empty()) return run_experiment(cfg);
  const auto points = cfg.expand_sweeps();
  std::vector<ExperimentReport> results(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) results[k] = run_experiment(points[k]);
  };
  std::vector<std::thread> pool;
  const int workers = std::max(1, std::min<int>(jobs, int(points.size())));
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ExperimentReport parent;
  parent.experiment = cfg.experiment();
  parent.config = config_echo(cfg);
  Json axes = Json::object();
  for (const auto& [target, items] : cfg.sweeps()) axes[target] = items;
  parent.values["sweep"] = axes;
  for (std::size_t k = 0; k < points.size(); ++k) {
    results[k].sweep_point = Json::object();
    for (const auto& [target, items] : cfg.sweeps()) {
      const auto dot = target.find('.');
      results[k].sweep_point[target] = config_echo(points[k])[target.substr(0, dot)][target.substr(dot + 1)];
    }
    parent.sub_reports.push_back(std::move(results[k]));
  }
  return parent;
}

void write_file_atomic(const std::string& path, const std::string& text) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string report_body_text(const ExperimentReport& report) { return report.body().dump(2) + "\n"; }

namespace {

void write_attachments(const ExperimentReport& r, const fs::path& dir, int sub_index) {
  for (const auto& s : r.series) write_file_atomic((dir / series_file_name(s.name, sub_index)).string(), to_csv(s));
  for (const auto& f : r.fields) {
    const fs::path p = dir / field_file_name(f.name, sub_index);
    fs::create_directories(p.parent_path());
    write_block(p.string(), f.block);
  }
  for (std::size_t k = 0; k < r.sub_reports.size(); ++k) write_attachments(r.sub_reports[k], dir, int(k));
}

}  // namespace

WrittenReport write_report(const ExperimentReport& report, const std::string& dir, double runtime_seconds) {
  const fs::path root(dir);
  fs::create_directories(root);
  write_attachments(report, root, -1);
  const std::string body = report_body_text(report);
  WrittenReport out;
  out.body_hash = hex64(fnv1a(body));
  out.report_path = (root / "report.json").string();
  out.provenance_path = (root / "provenance.json").string();
  Json prov;
  prov["version"] = version_string();
  prov["timestamp"] = utc_timestamp();
  prov["runtime_seconds"] = runtime_seconds;
  prov["body_hash"] = out.body_hash;
  prov["verdict"] = to_string(report.worst());
  write_file_atomic(out.provenance_path, prov.dump(2) + "\n");
  write_file_atomic(out.report_path, body);
  return out;
}

int exit_status(Verdict worst) { return worst == Verdict::fail ? 1 : 0; }

std::string emit_plot_data(const std::string& report_path, const std::string& series) {
  std::ifstream in(report_path);
  if (!in) throw Error("cannot open report " + report_path);
  const Json body = Json::parse(in);

  std::vector<std::string> names;
  const Json* found = nullptr;
  auto scan = [&](const Json& node, const std::string& prefix) {
    const auto list = node.find("series");
    if (list == node.end()) return;
    for (const auto& s : *list) {
      const std::string name = prefix + s.at("name").get<std::string>();
      names.push_back(name);
      if (name == series) found = &s;
    }
  };
  scan(body, "");
  const auto subs = body.find("sub_reports");
  if (subs != body.end())
    for (std::size_t k = 0; k < subs->size(); ++k) scan((*subs)[k], "sweep" + std::to_string(k) + "/");
  if (!found) {
    std::string all;
    for (const auto& n : names) all += (all.empty() ? "" : ", ") + n;
    throw PreconditionError("unknown series '" + series + "'; available: " + all);
  }
  Series s;
  s.name = series;
  s.columns = found->at("columns").get<std::vector<std::string>>();
  for (const auto& row : found->at("rows")) {
    std::vector<double> r;
    for (const auto& v : row) r.push_back(v.is_null() ? std::nan("") : v.get<double>());
    s.rows.push_back(std::move(r));
  }
  return to_csv(s);
}

Json potential_report(const ExperimentConfig& cfg) {
  const PotentialSpec spec = experiments::potential_from(cfg);
  GridOptions go;
  go.allow_low_dimension = cfg.get_bool("grid", "allow_low_dimension");
  const auto grid = make_grid<double>(int(cfg.get_int("grid", "n")), cfg.get_real("grid", "r_max"),
                                      Index(cfg.get_int("grid", "points")), go);
  const auto a = check_assumptions(spec, *grid, cfg.get_real("potential", "delta_n"));
  Json out;
  out["potential"] = {{"family", to_string(spec.family)}, {"c", spec.c}, {"beta", spec.beta}, {"a", spec.a},
                      {"dimension", spec.dimension}};
  out["decay"] = {{"ok", a.decay_ok}, {"required_exponent", a.decay_exponent_required}, {"sup", a.decay_sup}};
  out["repulsive"] = {{"ok", a.repulsive_ok}, {"max_r_dV", a.repulsive_max}};
  out["derivative_bound"] = {{"ok", a.derivative_bound_ok}, {"c0", a.c0}, {"c1", a.c1}};
  out["nonnegative"] = {{"ok", a.nonneg_ok}, {"min_value", a.min_value}};
  out["weak_norm"] = {{"ok", a.weak_norm_ok}, {"value", a.weak_norm_value}, {"delta_n", a.delta_n}};
  out["fourier_condition"] = a.fourier_condition;
  out["all_ok"] = a.all_ok();
  return out;
}

}  // namespace nls4
