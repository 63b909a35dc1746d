#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nls4/config.hpp"
#include "nls4/harness.hpp"
#include "nls4/report.hpp"

using namespace nls4;
namespace fs = std::filesystem;

namespace {

const char* kSmallRun = R"(
[experiment]
name = conservation
seed = 3
[grid]
r_max = 60
points = 512
[potential]
family = zero
[simulation]
lambda = 0
dt = 0.001
t_end = 0.05
[data]
width = 3
[knobs]
cross_check = false
)";

std::string echoed(const ExperimentConfig& cfg, const std::string& section, const std::string& key) {
  for (const auto& [s, entries] : cfg.echo())
    if (s == section)
      for (const auto& [k, v] : entries)
        if (k == key) return v;
  return "<missing>";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("minimal config echoes every default") {
  const auto cfg = ExperimentConfig::parse("[experiment]\nname = conservation\n");
  CHECK(cfg.experiment() == "conservation");
  CHECK(echoed(cfg, "grid", "n") == "5");
  CHECK(echoed(cfg, "simulation", "p") == "critical");
  CHECK(echoed(cfg, "simulation", "picard_tol") == "1e-10");
  std::size_t count = 0;
  for (const auto& [s, entries] : cfg.echo()) count += entries.size();
  CHECK(count == config_schema().size());
  CHECK_FALSE(cfg.explicitly_set("grid", "n"));
}

TEST_CASE("critical power resolves exactly") {
  const auto cfg = ExperimentConfig::parse("[experiment]\nname = conservation\n[simulation]\np = critical\n");
  CHECK(cfg.power() == 9.0);
  CHECK(cfg.power_is_critical());
  const auto explicit_nine = ExperimentConfig::parse("[experiment]\nname = conservation\n[simulation]\np = 9\n");
  CHECK(explicit_nine.power_is_critical());
  const auto six = ExperimentConfig::parse("[experiment]\nname = conservation\n[grid]\nn = 6\n");
  CHECK(six.power() == 5.0);
}

TEST_CASE("config errors name the line and key") {
  try {
    ExperimentConfig::parse("[experiment]\nname = conservation\n[simulation]\nlamda = 1\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "simulation.lamda");
    CHECK(e.line() == 4);
    CHECK(std::string(e.what()).find("lamda") != std::string::npos);
  }
  try {
    ExperimentConfig::parse("[experiment]\nname = conservation\nseed = 1\nseed = 2\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 4);
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }
  CHECK_THROWS_AS(ExperimentConfig::parse("[experiment]\nname = conservation\n[physics]\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("[experiment]\nname = nonsense\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("[experiment]\nseed = 1\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("[experiment]\nname = conservation\n[grid]\npoints = many\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("name = conservation\n"), ConfigError);

  try {
    ExperimentConfig::parse("[experiment]\nname = strichartz\n[knobs]\npairs = 8:2\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "knobs.pairs");
    CHECK(std::string(e.what()).find("4/q + n/r") != std::string::npos);
  }
  CHECK_NOTHROW(ExperimentConfig::parse("[experiment]\nname = strichartz\n[knobs]\npairs = 18:90/41\n"));
}

TEST_CASE("sweeps expand to the cartesian product") {
  const auto cfg = ExperimentConfig::parse(
      "[experiment]\nname = sobolev_equiv\n[sweep]\npotential.c = 0, 0.01\ngrid.points = 128, 256, 512\n");
  REQUIRE(cfg.sweeps().size() == 2);
  const auto points = cfg.expand_sweeps();
  REQUIRE(points.size() == 6);
  CHECK(points.front().get_real("potential", "c") == 0.0);
  CHECK(points.back().get_real("potential", "c") == 0.01);
  CHECK(points.back().get_int("grid", "points") == 512);
  for (const auto& p : points) CHECK(p.sweeps().empty());
  CHECK_THROWS_AS(ExperimentConfig::parse("[experiment]\nname = decay\n[sweep]\ngrid.spacing = 1, 2\n"), ConfigError);
}

TEST_CASE("binary block round trip") {
  const fs::path dir = fresh_dir("nls4_block_test");
  fs::create_directories(dir);
  Block b;
  b.header.kind = BlockKind::field;
  b.header.dimension = 5;
  b.header.num_points = 3;
  b.header.r_max = 20;
  b.header.potential_hash = 0xdeadbeefULL;
  b.header.rows = 3;
  b.header.cols = 2;
  b.data.resize(3, 2);
  b.data << 1, -2, 3.5, 1e-300, -0.0, 7;
  b.trailer = {0.25, 0.5};
  const std::string path = (dir / "x.bin").string();
  write_block(path, b);
  const Block back = read_block(path);
  CHECK(back.header.dimension == 5);
  CHECK(back.header.potential_hash == 0xdeadbeefULL);
  CHECK(back.header.kind == BlockKind::field);
  CHECK(back.data == b.data);
  CHECK(back.trailer == b.trailer);
  CHECK_FALSE(fs::exists(path + ".tmp"));

  {
    std::ofstream bad(dir / "bad.bin", std::ios::binary);
    bad << "NOTABLOCK and some more bytes to fill the header out";
  }
  CHECK_THROWS(read_block((dir / "bad.bin").string()));
  CHECK_THROWS(read_block((dir / "missing.bin").string()));
  fs::remove_all(dir);
}

TEST_CASE("linear conservation run writes a deterministic report") {
  const auto cfg = ExperimentConfig::parse(kSmallRun);
  const ExperimentReport first = run_config(cfg);
  const ExperimentReport second = run_config(cfg);
  CHECK(first.worst() != Verdict::fail);
  for (const auto& c : first.checks) {
    INFO(c.name);
    CHECK(c.verdict != Verdict::fail);
    if (c.verdict == Verdict::pass) {
      CHECK_FALSE(c.measured.is_null());
      CHECK_FALSE(c.threshold.is_null());
    }
  }
  CHECK(report_body_text(first) == report_body_text(second));
  CHECK(exit_status(first.worst()) == 0);
  CHECK(exit_status(Verdict::skipped) == 0);
  CHECK(exit_status(Verdict::fail) == 1);

  const fs::path dir = fresh_dir("nls4_report_test");
  const auto written = write_report(first, dir.string(), 1.0);
  CHECK(slurp(written.report_path) == report_body_text(first));
  CHECK(fs::exists(written.provenance_path));
  for (const auto& entry : fs::recursive_directory_iterator(dir)) CHECK(entry.path().extension() != ".tmp");

  const std::string csv = emit_plot_data(written.report_path, "mass");
  CHECK(csv.substr(0, csv.find('\n')) == "t,mass");
  try {
    emit_plot_data(written.report_path, "massse");
    FAIL("expected an error");
  } catch (const PreconditionError& e) {
    const std::string what = e.what();
    CHECK(what.find("mass") != std::string::npos);
    CHECK(what.find("energy") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("module errors become failed checks") {
  ExperimentReport rep;
  CHECK_FALSE(rep.guard("boom", [] { throw PreconditionError("bad input"); }));
  REQUIRE(rep.checks.size() == 1);
  CHECK(rep.checks[0].verdict == Verdict::fail);
  CHECK(rep.checks[0].detail.find("bad input") != std::string::npos);
  CHECK(rep.worst() == Verdict::fail);

  ExperimentReport ok;
  ok.check_le("small", 1.0, 2.0);
  ok.skip("nothing", "no data");
  CHECK(ok.worst() == Verdict::skipped);
  CHECK(exit_status(ok.worst()) == 0);
  CHECK(ok.check_in("band", 5.0, 1.0, 3.0).verdict == Verdict::fail);
}
