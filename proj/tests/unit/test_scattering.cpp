#include <cmath>

#include "doctest.h"
#include "nls4/initial_data.hpp"
#include "nls4/scattering.hpp"

using namespace nls4;

namespace {

using Field = RadialField<double>;

OperatorOptions no_cache() {
  OperatorOptions o;
  o.use_cache = false;
  return o;
}

struct Ops {
  GridPtr<double> grid;
  OperatorPtr<double> full;
  OperatorPtr<double> free;
};

Ops make_ops(const PotentialSpec& spec) {
  Ops o;
  o.grid = make_grid<double>(5, 60.0, 512);
  o.full = build_operator<double>(OperatorKind::full, o.grid, spec, no_cache());
  o.free = build_operator<double>(OperatorKind::free, o.grid, std::nullopt, no_cache());
  return o;
}

}  // namespace

TEST_CASE("wave operator probe") {
  SUBCASE("zero potential gives the identity") {
    const Ops o = make_ops(PotentialSpec::zero(5));
    const Field u = gaussian_field(o.grid, 1.0, 3.0);
    const auto probe = probe_wave_operator(*o.full, *o.free, u, {0.0, 0.25, 0.5, 1.0});
    REQUIRE(probe.series.size() == 4);
    for (const auto& w : probe.series) CHECK(h2_norm(w - u) <= 1e-9 * h2_norm(u));
    for (double gap : probe.gaps) CHECK(gap <= 1e-9 * h2_norm(u));
  }

  SUBCASE("time zero gives the identity") {
    const Ops o = make_ops(PotentialSpec::inverse_bracket(5, 0.01, 10));
    const Field u = gaussian_field(o.grid, 1.0, 3.0);
    const auto probe = probe_wave_operator(*o.full, *o.free, u, {0.0});
    CHECK(h2_norm(probe.series[0] - u) <= 1e-12 * h2_norm(u));
    CHECK(probe.gaps.empty());
    CHECK_FALSE(probe.convergent);
    CHECK_THROWS_AS(probe_wave_operator(*o.full, *o.free, u, {1.0, 0.5}), PreconditionError);
  }

  SUBCASE("a packet at the edge is refused") {
    const Ops o = make_ops(PotentialSpec::zero(5));
    const Field edge = Field::sample(o.grid, [](double r) { return std::exp(-(r - 57) * (r - 57)); });
    CHECK_THROWS_AS(probe_wave_operator(*o.full, *o.free, edge, {0.0, 1.0}), ContaminationError);
  }
}

TEST_CASE("scattering state of a linear run") {
  const Ops o = make_ops(PotentialSpec::inverse_bracket(5, 0.01, 10));
  const Field u0 = gaussian_field(o.grid, 1.0, 3.0);
  std::vector<double> times;
  std::vector<Field> snaps;
  for (int k = 0; k <= 40; ++k) {
    times.push_back(0.025 * k);
    snaps.push_back(apply_function(*o.full, SpectralFunction::exp_it, 0.025 * k, u0));
  }
  const auto rep = extract_scattering_state(times, snaps, *o.full, *o.free, 0.0, 9.0);
  CHECK(h2_norm(rep.u_plus - u0) <= 1e-9 * h2_norm(u0));
  CHECK(rep.mass_identity_gap <= 1e-10);
  CHECK(rep.v_mass_drift <= 1e-10);
  REQUIRE(rep.cauchy_series.size() == 2);
  CHECK(rep.cauchy_series.back().t2 == 1.0);
  for (const auto& c : rep.cauchy_series) CHECK(c.gap <= 1e-9 * h2_norm(u0));
  CHECK(rep.free_comparison_series.size() == times.size());
  CHECK(rep.z_tail > 0);

  std::vector<Field> dirty = snaps;
  dirty.back() = Field::sample(o.grid, [](double r) { return std::exp(-(r - 57) * (r - 57)); });
  CHECK_THROWS_AS(extract_scattering_state(times, dirty, *o.full, *o.free, 0.0, 9.0), ContaminationError);
  CHECK_THROWS_AS(extract_scattering_state<double>({0.0}, {u0}, *o.full, *o.free, 0.0, 9.0), PreconditionError);
}

TEST_CASE("final state problem") {
  const Ops o = make_ops(PotentialSpec::inverse_bracket(5, 0.01, 10));
  const Field u_plus = gaussian_field(o.grid, 0.5, 3.0);

  SUBCASE("lambda = 0 is the linear flow") {
    SimulationConfig cfg;
    cfg.lambda = 0;
    cfg.dt = 0.02;
    const Field got = solve_final_state(u_plus, *o.full, cfg, 0.1, 0.3);
    const Field exact = apply_function(*o.full, SpectralFunction::exp_it, 0.1, u_plus);
    CHECK(h2_norm(got - exact) <= 1e-10 * h2_norm(exact));
    CHECK_THROWS_AS(solve_final_state(u_plus, *o.full, cfg, 0.3, 0.1), PreconditionError);
  }

  SUBCASE("backward then forward returns the final state") {
    SimulationConfig cfg;
    cfg.lambda = 1;
    cfg.p = 9;
    cfg.dt = 0.01;
    DuhamelResult<double> back_info;
    const Field start = solve_final_state(u_plus, *o.full, cfg, 0.0, 0.2, &back_info);
    CHECK(back_info.iterations > 1);
    const Field end = solve_picard(start, *o.full, cfg, 0.2);
    const Field again = apply_function(*o.full, SpectralFunction::exp_it, -0.2, end);
    CHECK(h2_norm(again - u_plus) <= 10 * cfg.picard_tol * std::max(1.0, h2_norm(u_plus)));
  }
}
