#include "nls4/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nls4/analysis.hpp"
#include "nls4/nls_solver.hpp"

namespace nls4 {

namespace {

using VT = ValueType;

const std::vector<KeySpec> kSchema = {
    {"experiment", "name", VT::text, ""},
    {"experiment", "seed", VT::integer, "0"},
    {"experiment", "output_dir", VT::text, ""},
    {"experiment", "jobs", VT::integer, "1"},

    {"grid", "n", VT::integer, "5"},
    {"grid", "r_max", VT::real, "20"},
    {"grid", "points", VT::integer, "256"},
    {"grid", "allow_low_dimension", VT::boolean, "false"},
    {"grid", "max_points", VT::integer, "4096"},

    {"potential", "family", VT::text, "inverse_bracket"},
    {"potential", "c", VT::real, "0.01"},
    {"potential", "beta", VT::real, "10"},
    {"potential", "a", VT::real, "1"},
    {"potential", "delta_n", VT::real, "0.05"},

    {"simulation", "lambda", VT::real, "1"},
    {"simulation", "p", VT::power, "critical"},
    {"simulation", "dt", VT::real, "0.001"},
    {"simulation", "t_end", VT::real, "1"},
    {"simulation", "monitor_stride", VT::integer, "10"},
    {"simulation", "snapshot_stride", VT::integer, "0"},
    {"simulation", "picard_tol", VT::real, "1e-10"},
    {"simulation", "picard_max_iter", VT::integer, "50"},
    {"simulation", "boundary_threshold", VT::real, "1e-06"},
    {"simulation", "blowup_factor", VT::real, "1000000"},

    {"data", "profile", VT::text, "gaussian"},
    {"data", "amplitude", VT::real, "1"},
    {"data", "width", VT::real, "1"},
    {"data", "chirp", VT::real, "0"},
    {"data", "band_limit", VT::real, "0"},
    {"data", "band_power", VT::integer, "0"},
    {"data", "h2dot_target", VT::real, "0"},
    {"data", "modes", VT::integer, "10"},
    {"data", "mode", VT::integer, "0"},

    // conservation
    {"knobs", "mass_tolerance", VT::real, "1e-08"},
    {"knobs", "energy_tolerance", VT::real, "1e-06"},
    {"knobs", "halving_ratio", VT::real, "4"},
    {"knobs", "halving_band", VT::real, "0.3"},
    {"knobs", "cross_check", VT::boolean, "true"},
    {"knobs", "dt_list", VT::real_list, "0.004, 0.002, 0.001"},
    {"knobs", "horizon", VT::real, "0.2"},
    {"knobs", "stability_factor", VT::real, "1.5"},
    // sobolev_equiv, strichartz
    {"knobs", "draws", VT::integer, "50"},
    {"knobs", "s_list", VT::real_list, "0.5, 1, 1.5, 2"},
    {"knobs", "lebesgue_list", VT::real_list, "1.5, 2, 2.2"},
    {"knobs", "ratio_band", VT::real, "2"},
    {"knobs", "pairs", VT::text_list, ""},
    {"knobs", "interval", VT::real, "1"},
    {"knobs", "time_samples", VT::integer, "201"},
    {"knobs", "spread_cap", VT::real, "10"},
    {"knobs", "nu_max", VT::real, "10"},
    // decay
    {"knobs", "decay_p", VT::real, "10"},
    {"knobs", "fit_start", VT::real, "0.3"},
    {"knobs", "fit_end", VT::real, "3"},
    {"knobs", "fit_samples", VT::integer, "41"},
    {"knobs", "slope_tolerance", VT::real, "0.15"},
    {"knobs", "control_tolerance", VT::real, "0.05"},
    {"knobs", "residual_cap", VT::real, "0.1"},
    // localized_mass, morawetz
    {"knobs", "radii", VT::real_list, "2, 4, 8"},
    {"knobs", "stable_factor", VT::real, "3"},
    {"knobs", "k_list", VT::real_list, "1, 2, 4"},
    {"knobs", "intervals", VT::real_list, "0.5, 1, 2"},
    {"knobs", "c_cap", VT::real, "1000"},
    {"knobs", "linear_doubling_factor", VT::real, "2"},
    // small data, subcritical
    {"knobs", "growth_cap", VT::real, "2"},
    {"knobs", "cases", VT::text_list, "a, b, c, d, blowup"},
    {"knobs", "blowup_amplitude", VT::real, "8"},
    {"knobs", "blowup_dt", VT::real, "1e-05"},
    {"knobs", "blowup_factor", VT::real, "10"},
    {"knobs", "blowup_t_end", VT::real, "0.01"},
    {"knobs", "blowup_width", VT::real, "1"},
    {"knobs", "bound_cap", VT::real, "10"},
    {"knobs", "small_amplitude", VT::real, "0.1"},
    // perturbation
    {"knobs", "gaps", VT::real_list, "0.001, 0.0001, 1e-05"},
    {"knobs", "forcing_scale", VT::real, "0.01"},
    {"knobs", "slope_band", VT::real, "0.2"},
    // wave_operator, scattering, final_state
    {"knobs", "times", VT::real_list, "5, 10, 20, 40"},
    {"knobs", "z_tail_threshold", VT::real, "0.001"},
    {"knobs", "final_fraction", VT::real, "0.1"},
    {"knobs", "first_time", VT::real, "0.25"},
    {"knobs", "energy_trigger", VT::real, "0.1"},
    {"knobs", "identity_mass_tolerance", VT::real, "1e-06"},
    {"knobs", "identity_energy_tolerance", VT::real, "0.05"},
    {"knobs", "t_start", VT::real, "0"},
    {"knobs", "window", VT::real, "0.01"},
    {"knobs", "round_trip_factor", VT::real, "10"},
    {"knobs", "continuity_deltas", VT::real_list, "0.001, 0.0001"},
};

const std::vector<std::string> kExperiments = {
    "conservation", "decay",   "sobolev_equiv", "strichartz",    "localized_mass", "morawetz",
    "small_data_global", "subcritical_global_cases", "perturbation", "wave_operator", "scattering",
    "final_state"};

// experiment -> (section.key, value) defaults layered over the schema
const std::map<std::string, std::vector<std::pair<std::string, std::string>>> kExperimentDefaults = {
    {"conservation", {{"grid.r_max", "60"}, {"grid.points", "512"}, {"data.width", "3"}}},
    {"decay",
     {{"grid.r_max", "300"}, {"grid.points", "1023"}, {"data.band_limit", "3"}, {"simulation.lambda", "0"}}},
    {"sobolev_equiv", {{"data.profile", "random_modes"}}},
    {"strichartz", {{"data.profile", "random_modes"}, {"knobs.draws", "30"}, {"simulation.lambda", "0"}}},
    {"localized_mass",
     {{"grid.r_max", "60"}, {"grid.points", "512"}, {"potential.family", "zero"}, {"simulation.lambda", "0"},
      {"data.width", "3"}, {"data.chirp", "0.1"}, {"simulation.t_end", "0.5"}, {"simulation.snapshot_stride", "5"}}},
    {"morawetz",
     {{"grid.r_max", "60"}, {"grid.points", "512"}, {"data.width", "6"}, {"simulation.dt", "0.002"},
      {"simulation.t_end", "2"}, {"simulation.snapshot_stride", "5"}}},
    {"small_data_global",
     {{"grid.r_max", "60"}, {"grid.points", "512"}, {"data.width", "6"}, {"data.h2dot_target", "0.0001"},
      {"simulation.t_end", "2"}}},
    {"subcritical_global_cases",
     {{"grid.r_max", "60"}, {"grid.points", "512"}, {"data.width", "4"}, {"data.amplitude", "0.5"},
      {"simulation.t_end", "1"}}},
    {"perturbation",
     {{"grid.r_max", "60"}, {"grid.points", "512"}, {"data.width", "3"}, {"simulation.t_end", "0.5"},
      {"simulation.snapshot_stride", "10"}}},
    {"wave_operator",
     {{"grid.r_max", "300"}, {"grid.points", "1023"}, {"data.band_limit", "1.1"}, {"data.band_power", "4"},
      {"simulation.lambda", "0"}}},
    {"scattering",
     {{"grid.r_max", "300"}, {"grid.points", "1023"}, {"data.band_limit", "3"}, {"data.amplitude", "1.15"},
      {"simulation.t_end", "2"}, {"simulation.snapshot_stride", "10"}}},
    {"final_state",
     {{"grid.r_max", "300"}, {"grid.points", "1023"}, {"data.band_limit", "3"}, {"data.amplitude", "1.15"},
      {"simulation.t_end", "2"}, {"simulation.snapshot_stride", "10"}}},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

const KeySpec* find_key(const std::string& section, const std::string& key) {
  for (const auto& k : kSchema)
    if (k.section == section && k.key == key) return &k;
  return nullptr;
}

bool section_exists(const std::string& section) {
  return section == "sweep" ||
         std::any_of(kSchema.begin(), kSchema.end(), [&](const KeySpec& k) { return k.section == section; });
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_real(const std::string& text, int line, const std::string& key) {
  double v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v))
    throw ConfigError("expected a real number, got '" + text + "'", line, key);
  return v;
}

// Returns the canonical text of a value or throws.
std::string canonical(const KeySpec& spec, const std::string& text, int line) {
  const std::string key = spec.section + "." + spec.key;
  switch (spec.type) {
    case VT::integer: {
      long long v = 0;
      const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError("expected an integer, got '" + text + "'", line, key);
      return std::to_string(v);
    }
    case VT::real: return format_real(parse_real(text, line, key));
    case VT::boolean:
      if (text == "true" || text == "yes" || text == "1") return "true";
      if (text == "false" || text == "no" || text == "0") return "false";
      throw ConfigError("expected true or false, got '" + text + "'", line, key);
    case VT::text: return text;
    case VT::real_list: {
      std::string out;
      for (const auto& item : split_list(text)) {
        if (!out.empty()) out += ", ";
        out += format_real(parse_real(item, line, key));
      }
      return out;
    }
    case VT::text_list: {
      std::string out;
      for (const auto& item : split_list(text)) {
        if (item.empty()) throw ConfigError("empty list entry", line, key);
        if (!out.empty()) out += ", ";
        out += item;
      }
      return out;
    }
    case VT::power:
      if (text == "critical") return text;
      return format_real(parse_real(text, line, key));
  }
  return text;
}

}  // namespace

const std::vector<KeySpec>& config_schema() { return kSchema; }
const std::vector<std::string>& experiment_names() { return kExperiments; }

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  for (const auto& k : kSchema) cfg.values_[k.section + "." + k.key] = k.fallback;

  std::istringstream in(text);
  std::string line_text, section;
  int line = 0;
  std::map<std::string, int> seen;
  std::vector<std::pair<std::string, std::pair<std::string, int>>> assignments;
  while (std::getline(in, line_text)) {
    ++line;
    const auto hash = line_text.find('#');
    const std::string body = trim(hash == std::string::npos ? line_text : line_text.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError("unterminated section header", line);
      section = trim(body.substr(1, body.size() - 2));
      if (!section_exists(section)) throw ConfigError("unknown section [" + section + "]", line);
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line);
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (section.empty()) throw ConfigError("key outside any section", line, key);
    if (key.empty()) throw ConfigError("missing key", line);
    const std::string full = section + "." + key;
    if (seen.count(full)) throw ConfigError("duplicate key (first set on line " + std::to_string(seen[full]) + ")", line, full);
    seen[full] = line;

    if (section == "sweep") {
      const auto dot = key.find('.');
      const KeySpec* spec = dot == std::string::npos ? nullptr : find_key(key.substr(0, dot), key.substr(dot + 1));
      if (!spec) throw ConfigError("unknown sweep target", line, key);
      if (spec->section == "experiment" && spec->key == "name")
        throw ConfigError("the experiment name cannot be swept", line, key);
      std::vector<std::string> items;
      for (const auto& item : split_list(value)) items.push_back(canonical(*spec, item, line));
      if (items.empty()) throw ConfigError("empty sweep list", line, key);
      cfg.sweeps_.emplace_back(key, std::move(items));
      continue;
    }
    const KeySpec* spec = find_key(section, key);
    if (!spec) throw ConfigError("unknown key", line, full);
    assignments.push_back({full, {canonical(*spec, value, line), line}});
  }

  // experiment name first so its defaults sit under explicit values
  for (const auto& [full, v] : assignments)
    if (full == "experiment.name") cfg.values_[full] = v.first;
  const auto& name = cfg.values_["experiment.name"];
  if (name.empty()) throw ConfigError("missing experiment name", 0, "experiment.name");
  if (std::find(kExperiments.begin(), kExperiments.end(), name) == kExperiments.end()) {
    std::string all;
    for (const auto& e : kExperiments) all += (all.empty() ? "" : ", ") + e;
    throw ConfigError("unknown experiment '" + name + "' (expected one of " + all + ")", seen["experiment.name"],
                      "experiment.name");
  }
  cfg.apply_experiment_defaults();
  for (const auto& [full, v] : assignments) {
    cfg.values_[full] = v.first;
    cfg.explicit_[full] = true;
  }
  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void ExperimentConfig::apply_experiment_defaults() {
  const auto it = kExperimentDefaults.find(values_["experiment.name"]);
  if (it == kExperimentDefaults.end()) return;
  for (const auto& [full, v] : it->second) values_[full] = v;
}

const std::string& ExperimentConfig::raw(const std::string& section, const std::string& key) const {
  const auto it = values_.find(section + "." + key);
  if (it == values_.end()) throw ConfigError("unknown key", 0, section + "." + key);
  return it->second;
}

long long ExperimentConfig::get_int(const std::string& section, const std::string& key) const {
  return std::stoll(raw(section, key));
}

double ExperimentConfig::get_real(const std::string& section, const std::string& key) const {
  return parse_real(raw(section, key), 0, section + "." + key);
}

bool ExperimentConfig::get_bool(const std::string& section, const std::string& key) const {
  return raw(section, key) == "true";
}

const std::string& ExperimentConfig::get_text(const std::string& section, const std::string& key) const {
  return raw(section, key);
}

std::vector<double> ExperimentConfig::get_real_list(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(raw(section, key))) out.push_back(parse_real(item, 0, section + "." + key));
  return out;
}

std::vector<std::string> ExperimentConfig::get_text_list(const std::string& section, const std::string& key) const {
  return split_list(raw(section, key));
}

bool ExperimentConfig::power_is_critical() const {
  if (raw("simulation", "p") == "critical") return true;
  const int n = int(get_int("grid", "n"));
  return n > 4 && get_real("simulation", "p") == critical_power(n);
}

double ExperimentConfig::power() const {
  if (power_is_critical()) return critical_power(int(get_int("grid", "n")));
  return get_real("simulation", "p");
}

void ExperimentConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  const KeySpec* spec = find_key(section, key);
  if (!spec) throw ConfigError("unknown key", 0, section + "." + key);
  if (section == "experiment" && key == "name") throw ConfigError("the experiment name cannot be overridden", 0, "experiment.name");
  values_[section + "." + key] = canonical(*spec, value, 0);
  explicit_[section + "." + key] = true;
}

bool ExperimentConfig::explicitly_set(const std::string& section, const std::string& key) const {
  return explicit_.count(section + "." + key) > 0;
}

std::vector<ExperimentConfig> ExperimentConfig::expand_sweeps() const {
  std::vector<ExperimentConfig> out{*this};
  out.front().sweeps_.clear();
  for (const auto& [target, items] : sweeps_) {
    const auto dot = target.find('.');
    std::vector<ExperimentConfig> next;
    for (const auto& base : out)
      for (const auto& item : items) {
        ExperimentConfig c = base;
        c.set(target.substr(0, dot), target.substr(dot + 1), item);
        next.push_back(std::move(c));
      }
    out = std::move(next);
  }
  for (auto& c : out) c.validate();
  return out;
}

std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> ExperimentConfig::echo() const {
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> out;
  for (const auto& k : kSchema) {
    if (out.empty() || out.back().first != k.section) out.push_back({k.section, {}});
    out.back().second.emplace_back(k.key, values_.at(k.section + "." + k.key));
  }
  return out;
}

void ExperimentConfig::validate() const {
  const int n = int(get_int("grid", "n"));
  const bool low = get_bool("grid", "allow_low_dimension");
  if (n <= 0) throw ConfigError("grid.n must be positive", 0, "grid.n");
  if (n < 5 && !low) throw ConfigError("dimension below 5 needs grid.allow_low_dimension = true", 0, "grid.n");
  if (!(get_real("grid", "r_max") > 0)) throw ConfigError("must be positive", 0, "grid.r_max");
  if (get_int("grid", "points") < 16) throw ConfigError("too few points (need >= 16)", 0, "grid.points");
  if (get_int("grid", "points") > get_int("grid", "max_points"))
    throw ConfigError("exceeds grid.max_points", 0, "grid.points");

  parse_potential_family(get_text("potential", "family"));
  if (power_is_critical() && n <= 4) throw ConfigError("p = critical needs n >= 5", 0, "simulation.p");
  SimulationConfig sim;
  sim.lambda = get_real("simulation", "lambda");
  sim.p = power();
  sim.dt = get_real("simulation", "dt");
  sim.t_end = get_real("simulation", "t_end");
  sim.monitor_stride = int(get_int("simulation", "monitor_stride"));
  sim.snapshot_stride = int(get_int("simulation", "snapshot_stride"));
  sim.picard_tol = get_real("simulation", "picard_tol");
  sim.picard_max_iter = int(get_int("simulation", "picard_max_iter"));
  sim.boundary_threshold = get_real("simulation", "boundary_threshold");
  sim.blowup_factor = get_real("simulation", "blowup_factor");
  sim.critical = power_is_critical();
  try {
    sim.validate(n);
  } catch (const Error& e) {
    throw ConfigError(e.what(), 0, "simulation");
  }

  const auto& profile = get_text("data", "profile");
  if (profile != "gaussian" && profile != "random_modes" && profile != "eigenmode")
    throw ConfigError("expected gaussian, random_modes or eigenmode", 0, "data.profile");
  if (!(get_real("data", "width") > 0)) throw ConfigError("must be positive", 0, "data.width");
  if (get_real("data", "band_limit") < 0) throw ConfigError("must be >= 0", 0, "data.band_limit");
  if (get_real("data", "h2dot_target") < 0) throw ConfigError("must be >= 0", 0, "data.h2dot_target");
  if (get_int("data", "modes") < 1) throw ConfigError("must be >= 1", 0, "data.modes");

  for (const auto& text : get_text_list("knobs", "pairs")) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("pair '" + text + "' must read q:r", 0, "knobs.pairs");
    try {
      validate_b_admissible(n, {parse_rational(text.substr(0, colon)), parse_rational(text.substr(colon + 1))});
    } catch (const Error& e) {
      throw ConfigError(std::string("non-admissible Strichartz pair: ") + e.what(), 0, "knobs.pairs");
    }
  }
  for (double s : get_real_list("knobs", "s_list"))
    if (s < 0 || s > 2) throw ConfigError("s must lie in [0, 2]", 0, "knobs.s_list");
  for (double p : get_real_list("knobs", "lebesgue_list"))
    if (!(p > 1) || !(p < n / 2.0)) throw ConfigError("exponents must lie in (1, n/2)", 0, "knobs.lebesgue_list");
  if (get_int("experiment", "jobs") < 1) throw ConfigError("must be >= 1", 0, "experiment.jobs");
  for (const char* key : {"radii", "k_list", "intervals", "times", "gaps", "dt_list", "continuity_deltas"})
    for (double v : get_real_list("knobs", key))
      if (!(v > 0)) throw ConfigError("entries must be positive", 0, std::string("knobs.") + key);
  if (get_int("knobs", "draws") < 1) throw ConfigError("must be >= 1", 0, "knobs.draws");
  if (get_int("knobs", "time_samples") < 4) throw ConfigError("must be >= 4", 0, "knobs.time_samples");
  if (!(get_real("knobs", "fit_end") > get_real("knobs", "fit_start")) || !(get_real("knobs", "fit_start") > 0))
    throw ConfigError("need 0 < fit_start < fit_end", 0, "knobs.fit_start");
  if (!(get_real("knobs", "decay_p") >= 2)) throw ConfigError("must be >= 2", 0, "knobs.decay_p");
  if (!(get_real("knobs", "window") > 0)) throw ConfigError("must be positive", 0, "knobs.window");
  for (const auto& c : get_text_list("knobs", "cases"))
    if (c != "a" && c != "b" && c != "c" && c != "d" && c != "blowup")
      throw ConfigError("unknown case '" + c + "' (expected a, b, c, d, blowup)", 0, "knobs.cases");
}

}  // namespace nls4
