#include "nls4/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace nls4 {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::skipped: return "skipped";
    case Verdict::fail: return "fail";
  }
  return "fail";
}

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Verdict from_bool(bool ok) { return ok ? Verdict::pass : Verdict::fail; }

}  // namespace

Check& ExperimentReport::check_le(const std::string& name, double measured, double threshold, std::string detail) {
  checks.push_back({name, number(measured), number(threshold), "<=", from_bool(measured <= threshold), std::move(detail)});
  return checks.back();
}

Check& ExperimentReport::check_lt(const std::string& name, double measured, double threshold, std::string detail) {
  checks.push_back({name, number(measured), number(threshold), "<", from_bool(measured < threshold), std::move(detail)});
  return checks.back();
}

Check& ExperimentReport::check_ge(const std::string& name, double measured, double threshold, std::string detail) {
  checks.push_back({name, number(measured), number(threshold), ">=", from_bool(measured >= threshold), std::move(detail)});
  return checks.back();
}

Check& ExperimentReport::check_in(const std::string& name, double measured, double lo, double hi, std::string detail) {
  checks.push_back({name, number(measured), Json::array({number(lo), number(hi)}), "in",
                    from_bool(measured >= lo && measured <= hi), std::move(detail)});
  return checks.back();
}

Check& ExperimentReport::check_equal(const std::string& name, const std::string& measured,
                                     const std::string& expected, std::string detail) {
  checks.push_back({name, measured, expected, "==", from_bool(measured == expected), std::move(detail)});
  return checks.back();
}

Check& ExperimentReport::skip(const std::string& name, std::string detail) {
  checks.push_back({name, nullptr, nullptr, "", Verdict::skipped, std::move(detail)});
  return checks.back();
}

Check& ExperimentReport::fail(const std::string& name, std::string detail) {
  checks.push_back({name, nullptr, nullptr, "", Verdict::fail, std::move(detail)});
  return checks.back();
}

bool ExperimentReport::guard(const std::string& name, const std::function<void()>& body) {
  try {
    body();
    return true;
  } catch (const ContractionError& e) {
    auto& c = fail(name, e.what());
    c.measured = Json{{"contraction_factor", number(e.factor())}, {"iterations", e.iterations()}};
  } catch (const ContaminationError& e) {
    auto& c = fail(name, e.what());
    c.measured = Json{{"contamination_time", number(e.time())}};
  } catch (const BlowupError& e) {
    auto& c = fail(name, e.what());
    c.measured = Json{{"halt_time", number(e.time())}};
  } catch (const std::exception& e) {
    fail(name, e.what());
  }
  return false;
}

Series& ExperimentReport::add_series(std::string name, std::vector<std::string> columns) {
  series.push_back({std::move(name), std::move(columns), {}});
  return series.back();
}

void ExperimentReport::add_field(const std::string& name, const RadialField<double>& u) {
  Block b;
  const auto& g = u.grid();
  b.header.kind = BlockKind::field;
  b.header.dimension = g.dimension();
  b.header.num_points = std::uint64_t(g.size());
  b.header.r_max = g.r_max();
  b.header.rows = std::uint64_t(g.size());
  b.header.cols = 3;
  b.data.resize(g.size(), 3);
  for (Index j = 0; j < g.size(); ++j) {
    b.data(j, 0) = g.nodes()[j];
    b.data(j, 1) = u[j].real();
    b.data(j, 2) = u[j].imag();
  }
  fields.push_back({name, std::move(b)});
}

Verdict ExperimentReport::worst() const {
  Verdict w = Verdict::pass;
  for (const auto& c : checks) w = std::max(w, c.verdict);
  for (const auto& s : sub_reports) w = std::max(w, s.worst());
  return w;
}

namespace {

Json body_of(const ExperimentReport& r, int sub_index) {
  Json out;
  out["experiment"] = r.experiment;
  if (sub_index >= 0) out["sweep_point"] = r.sweep_point;
  out["config"] = r.config;
  out["verdict"] = to_string(r.worst());
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    Json j;
    j["name"] = c.name;
    j["verdict"] = to_string(c.verdict);
    j["measured"] = c.measured;
    j["relation"] = c.relation;
    j["threshold"] = c.threshold;
    if (!c.detail.empty()) j["detail"] = c.detail;
    checks.push_back(std::move(j));
  }
  out["checks"] = std::move(checks);
  out["values"] = r.values;
  Json series = Json::array();
  for (const auto& s : r.series) {
    Json j;
    j["name"] = s.name;
    j["file"] = series_file_name(s.name, sub_index);
    j["columns"] = s.columns;
    Json rows = Json::array();
    for (const auto& row : s.rows) {
      Json jr = Json::array();
      for (double v : row) jr.push_back(number(v));
      rows.push_back(std::move(jr));
    }
    j["rows"] = std::move(rows);
    series.push_back(std::move(j));
  }
  out["series"] = std::move(series);
  Json fields = Json::array();
  for (const auto& f : r.fields) fields.push_back({{"name", f.name}, {"file", field_file_name(f.name, sub_index)}});
  out["fields"] = std::move(fields);
  if (!r.sub_reports.empty()) {
    Json subs = Json::array();
    for (std::size_t k = 0; k < r.sub_reports.size(); ++k) subs.push_back(body_of(r.sub_reports[k], int(k)));
    out["sub_reports"] = std::move(subs);
  }
  return out;
}

}  // namespace

Json ExperimentReport::body() const { return body_of(*this, -1); }

const Series* ExperimentReport::find_series(const std::string& name) const {
  for (const auto& s : series)
    if (s.name == name) return &s;
  return nullptr;
}

std::vector<std::string> ExperimentReport::series_names() const {
  std::vector<std::string> out;
  for (const auto& s : series) out.push_back(s.name);
  return out;
}

Json config_echo(const ExperimentConfig& cfg) {
  std::map<std::string, ValueType> types;
  for (const auto& k : config_schema()) types[k.section + "." + k.key] = k.type;
  Json out = Json::object();
  for (const auto& [section, entries] : cfg.echo()) {
    Json sec = Json::object();
    for (const auto& [key, text] : entries) {
      if (section == "experiment" && (key == "output_dir" || key == "jobs")) continue;
      switch (types.at(section + "." + key)) {
        case ValueType::integer: sec[key] = cfg.get_int(section, key); break;
        case ValueType::real: sec[key] = cfg.get_real(section, key); break;
        case ValueType::boolean: sec[key] = cfg.get_bool(section, key); break;
        case ValueType::real_list: sec[key] = cfg.get_real_list(section, key); break;
        case ValueType::text_list: sec[key] = cfg.get_text_list(section, key); break;
        case ValueType::power:
          sec[key] = text == "critical" ? Json("critical") : Json(cfg.get_real(section, key));
          break;
        case ValueType::text: sec[key] = text; break;
      }
    }
    out[section] = std::move(sec);
  }
  return out;
}

std::string series_file_name(const std::string& series, int sub_index) {
  return sub_index < 0 ? "series/" + series + ".csv" : "series/sweep" + std::to_string(sub_index) + "_" + series + ".csv";
}

std::string field_file_name(const std::string& field, int sub_index) {
  return sub_index < 0 ? "fields/" + field + ".bin" : "fields/sweep" + std::to_string(sub_index) + "_" + field + ".bin";
}

std::string to_csv(const Series& s) {
  std::ostringstream out;
  for (std::size_t c = 0; c < s.columns.size(); ++c) out << (c ? "," : "") << s.columns[c];
  out << '\n';
  char buf[64];
  for (const auto& row : s.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      if (std::isfinite(row[c])) {
        const auto res = std::to_chars(buf, buf + sizeof buf, row[c]);
        out.write(buf, res.ptr - buf);
      } else {
        out << "nan";
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace nls4
